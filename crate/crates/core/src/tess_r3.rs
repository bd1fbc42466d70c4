//! Axis-aligned box cover of translation space with octree refinement.

use crate::error::{AlignError, Result};
use crate::numerics::Vec3;

/// One axis-aligned translation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxNode {
    pub lo: Vec3,
    pub hi: Vec3,
    pub depth: u32,
}

impl BoxNode {
    pub fn new(lo: Vec3, hi: Vec3, depth: u32) -> Self {
        debug_assert!(lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z);
        BoxNode { lo, hi, depth }
    }

    pub fn center(&self) -> Vec3 {
        (self.lo + self.hi) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    pub fn contains(&self, t: Vec3) -> bool {
        t.x >= self.lo.x
            && t.x <= self.hi.x
            && t.y >= self.lo.y
            && t.y <= self.hi.y
            && t.z >= self.lo.z
            && t.z <= self.hi.z
    }

    pub fn vertices(&self) -> [Vec3; 8] {
        std::array::from_fn(|i| {
            Vec3::new(
                if i & 1 == 0 { self.lo.x } else { self.hi.x },
                if i & 2 == 0 { self.lo.y } else { self.hi.y },
                if i & 4 == 0 { self.lo.z } else { self.hi.z },
            )
        })
    }

    /// Midpoint split on each axis: eight children whose union is exactly
    /// the parent and whose diagonals are half the parent's.
    pub fn subdivide(&self) -> [BoxNode; 8] {
        let mid = self.center();
        std::array::from_fn(|i| {
            let lo = Vec3::new(
                if i & 1 == 0 { self.lo.x } else { mid.x },
                if i & 2 == 0 { self.lo.y } else { mid.y },
                if i & 4 == 0 { self.lo.z } else { mid.z },
            );
            let hi = Vec3::new(
                if i & 1 == 0 { mid.x } else { self.hi.x },
                if i & 2 == 0 { mid.y } else { self.hi.y },
                if i & 4 == 0 { mid.z } else { self.hi.z },
            );
            BoxNode::new(lo, hi, self.depth + 1)
        })
    }
}

fn aabb(points: &[Vec3]) -> Result<(Vec3, Vec3)> {
    let first = *points.first().ok_or(AlignError::EmptyCloud)?;
    let mut lo = first;
    let mut hi = first;
    for &p in &points[1..] {
        lo = lo.min_elem(p);
        hi = hi.max_elem(p);
    }
    Ok((lo, hi))
}

/// Root translation cell: the Minkowski-difference box
/// [min(cloud1) - max(cloud2), max(cloud1) - min(cloud2)], which contains
/// every translation mapping any point of cloud 2 onto any point of cloud 1.
/// `cloud2_rotated` must already carry the candidate rotation.
pub fn initial_box(cloud1: &[Vec3], cloud2_rotated: &[Vec3]) -> Result<BoxNode> {
    let (lo1, hi1) = aabb(cloud1)?;
    let (lo2, hi2) = aabb(cloud2_rotated)?;
    Ok(BoxNode::new(lo1 - hi2, hi1 - lo2, 0))
}

/// Alternative root cell: the bounding box of the union of both clouds.
/// Exposed behind the --paper-box flag for comparison runs.
pub fn initial_box_union_aabb(cloud1: &[Vec3], cloud2_rotated: &[Vec3]) -> Result<BoxNode> {
    let (lo1, hi1) = aabb(cloud1)?;
    let (lo2, hi2) = aabb(cloud2_rotated)?;
    Ok(BoxNode::new(lo1.min_elem(lo2), hi1.max_elem(hi2), 0))
}

/// Worst-case refinement depth for a translational tolerance `eps`, given
/// the root diagonal `gamma0`.
pub fn trans_depth_for_tolerance(eps: f64, gamma0: f64) -> u32 {
    assert!(eps > 0.0 && gamma0 >= 0.0);
    if gamma0 <= eps {
        return 0;
    }
    ((gamma0 / eps).log2() - 1e-9).ceil().max(0.0) as u32
}
