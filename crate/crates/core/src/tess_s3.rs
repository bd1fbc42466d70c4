//! Tessellation of the rotation hemisphere: the 600-cell cover of S^3 and
//! refinement of its projected tetrahedra.
//!
//! The 120 unit-normalized vertices of the 600-cell seed 600 tetrahedral
//! cells (all pairwise vertex angles 36 degrees); keeping cells with at least
//! one vertex strictly above the equator relative to north = (0,0,0,1)
//! leaves the 330 cells that cover the space of quaternion rotations.

use crate::error::{AlignError, Result};
use crate::numerics::{solve_linear, Mat4, UnitQuaternion};
use std::io::{Read, Write};
use std::path::Path;

/// cos 36 degrees, the minimum pairwise vertex dot product at depth 0.
pub const GAMMA0: f64 = 0.8090169943749474; // (1 + sqrt 5) / 4

const CELL_DOT_TOL: f64 = 1e-9;
const CONTAIN_TOL: f64 = 1e-9;
const MAGIC: &[u8; 8] = b"S3TESS01";

/// One projected-tetrahedron cover element on S^3.
#[derive(Debug, Clone)]
pub struct TetraNode {
    vertices: [UnitQuaternion; 4],
    depth: u32,
    /// min pairwise vertex dot product
    gamma: f64,
    /// inverse of the 4x4 vertex matrix (columns are vertices); None when the
    /// vertex matrix is numerically singular
    inv: Option<Mat4>,
}

impl TetraNode {
    pub fn new(vertices: [UnitQuaternion; 4], depth: u32) -> Self {
        let gamma = min_pairwise_dot(&vertices);
        let inv = invert_vertex_matrix(&vertices);
        TetraNode { vertices, depth, gamma, inv }
    }

    pub fn vertices(&self) -> &[UnitQuaternion; 4] {
        &self.vertices
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Minimum pairwise vertex dot product.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Maximum pairwise vertex dot product.
    pub fn max_pairwise_dot(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for a in 0..4 {
            for b in (a + 1)..4 {
                best = best.max(self.vertices[a].dot(&self.vertices[b]));
            }
        }
        best
    }

    /// Vertex matrix Q with vertices as columns.
    pub fn vertex_matrix(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for (j, q) in self.vertices.iter().enumerate() {
            let a = q.as_array();
            for i in 0..4 {
                m.0[i][j] = a[i];
            }
        }
        m
    }

    /// Normalized vertex sum, used as the bound evaluation point.
    pub fn center(&self) -> UnitQuaternion {
        let mut s = [0.0; 4];
        for q in &self.vertices {
            let a = q.as_array();
            for i in 0..4 {
                s[i] += a[i];
            }
        }
        UnitQuaternion::from_array(s)
    }

    /// Membership test for the projected tetrahedron, as rotations: q and -q
    /// describe the same rotation, and cells may straddle the equator, so the
    /// canonical representative is tried first and the antipode second.
    pub fn contains(&self, q: &UnitQuaternion) -> Result<bool> {
        let inv = self.inv.as_ref().ok_or(AlignError::DegenerateCell)?;
        let qc = q.canonicalized();
        let alpha = inv.mul_vec(qc.as_array());
        if alpha.iter().all(|&a| a >= -CONTAIN_TOL) {
            return Ok(true);
        }
        let neg = inv.mul_vec(qc.negated().as_array());
        Ok(neg.iter().all(|&a| a >= -CONTAIN_TOL))
    }

    /// Subdivide into eight children: four corner tetrahedra plus four from
    /// the interior octahedron, split along the internal edge whose unit-norm
    /// endpoints have the maximum dot product.
    pub fn subdivide(&self) -> [TetraNode; 8] {
        let v = &self.vertices;
        let mid = |a: usize, b: usize| -> UnitQuaternion {
            let pa = v[a].as_array();
            let pb = v[b].as_array();
            UnitQuaternion::from_array([
                pa[0] + pb[0],
                pa[1] + pb[1],
                pa[2] + pb[2],
                pa[3] + pb[3],
            ])
        };
        let m01 = mid(0, 1);
        let m02 = mid(0, 2);
        let m03 = mid(0, 3);
        let m12 = mid(1, 2);
        let m13 = mid(1, 3);
        let m23 = mid(2, 3);
        let d = self.depth + 1;

        let corner = [
            TetraNode::new([v[0], m01, m02, m03], d),
            TetraNode::new([v[1], m01, m12, m13], d),
            TetraNode::new([v[2], m02, m12, m23], d),
            TetraNode::new([v[3], m03, m13, m23], d),
        ];

        // three candidate internal edges of the midpoint octahedron:
        // (m01,m23), (m02,m13), (m03,m12); pick the max-dot one
        let xi = [m01.dot(&m23), m02.dot(&m13), m03.dot(&m12)];
        let k_star = (0..3).max_by(|&a, &b| xi[a].total_cmp(&xi[b])).unwrap();
        // diagonal endpoints (a, a2) and the 4-cycle (b, c, b2, c2) around them
        let (a, a2, b, c, b2, c2) = match k_star {
            0 => (m01, m23, m02, m03, m13, m12),
            1 => (m02, m13, m01, m03, m23, m12),
            _ => (m03, m12, m01, m02, m23, m13),
        };
        let interior = [
            TetraNode::new([a, a2, b, c], d),
            TetraNode::new([a, a2, c, b2], d),
            TetraNode::new([a, a2, b2, c2], d),
            TetraNode::new([a, a2, c2, b], d),
        ];

        [
            corner[0].clone(),
            corner[1].clone(),
            corner[2].clone(),
            corner[3].clone(),
            interior[0].clone(),
            interior[1].clone(),
            interior[2].clone(),
            interior[3].clone(),
        ]
    }
}

fn min_pairwise_dot(v: &[UnitQuaternion; 4]) -> f64 {
    let mut worst = f64::INFINITY;
    for a in 0..4 {
        for b in (a + 1)..4 {
            worst = worst.min(v[a].dot(&v[b]));
        }
    }
    worst
}

fn invert_vertex_matrix(v: &[UnitQuaternion; 4]) -> Option<Mat4> {
    let mut q = Mat4::zeros();
    for (j, vert) in v.iter().enumerate() {
        let a = vert.as_array();
        for i in 0..4 {
            q.0[i][j] = a[i];
        }
    }
    let mut inv = Mat4::zeros();
    for col in 0..4 {
        let mut e = [0.0; 4];
        e[col] = 1.0;
        let x = solve_linear(&q, e, 4, 1e-10)?;
        for i in 0..4 {
            inv.0[i][col] = x[i];
        }
    }
    Some(inv)
}

/// The 600-cell tessellation: 120 vertices, 600 cells, and the 330
/// upper-hemisphere cells that seed the rotational search.
#[derive(Debug, Clone)]
pub struct Tessellation {
    pub vertices: Vec<UnitQuaternion>,
    pub cells: Vec<[u16; 4]>,
    pub hemisphere_cells: Vec<TetraNode>,
}

/// Construct the 600-cell: 96 vertices from even permutations of
/// (+-phi, +-1, +-1/phi, 0), 8 from permutations of (+-2, 0, 0, 0), 16 from
/// (+-1, +-1, +-1, +-1), normalized to unit length. Cells are the vertex
/// 4-subsets whose six pairwise dot products all equal cos 36 degrees.
pub fn generate_600cell() -> Result<Tessellation> {
    let vertices = generate_vertices();
    if vertices.len() != 120 {
        return Err(AlignError::ConstructionInvariantViolated(format!(
            "expected 120 vertices, got {}",
            vertices.len()
        )));
    }

    // adjacency at dot = cos 36
    let n = vertices.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if (vertices[i].dot(&vertices[j]) - GAMMA0).abs() < CELL_DOT_TOL {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }

    // scan ordered 4-subsets, pruning on the first failing pair
    let mut cells: Vec<[u16; 4]> = Vec::with_capacity(600);
    for i in 0..n {
        for j in (i + 1)..n {
            if !adj[i][j] {
                continue;
            }
            for k in (j + 1)..n {
                if !adj[i][k] || !adj[j][k] {
                    continue;
                }
                for l in (k + 1)..n {
                    if adj[i][l] && adj[j][l] && adj[k][l] {
                        cells.push([i as u16, j as u16, k as u16, l as u16]);
                    }
                }
            }
        }
    }
    if cells.len() != 600 {
        return Err(AlignError::ConstructionInvariantViolated(format!(
            "expected 600 cells, got {}",
            cells.len()
        )));
    }

    let hemisphere_cells = hemisphere_filter(&vertices, &cells)?;
    Ok(Tessellation { vertices, cells, hemisphere_cells })
}

fn generate_vertices() -> Vec<UnitQuaternion> {
    let phi = 0.5 * (1.0 + 5.0_f64.sqrt());
    let mut out = Vec::with_capacity(120);

    // even permutations of (phi, 1, 1/phi, 0) with all sign choices on the
    // three nonzero entries
    let base = [phi, 1.0, 1.0 / phi, 0.0];
    for perm in even_permutations() {
        for signs in 0..8u32 {
            let mut v = [0.0; 4];
            let mut sign_bit = 0;
            for (pos, &src) in perm.iter().enumerate() {
                let mut val = base[src];
                if src < 3 {
                    if signs >> sign_bit & 1 == 1 {
                        val = -val;
                    }
                    sign_bit += 1;
                }
                v[pos] = val;
            }
            out.push(UnitQuaternion::from_array(v));
        }
    }

    // permutations of (+-2, 0, 0, 0)
    for pos in 0..4 {
        for s in [2.0, -2.0] {
            let mut v = [0.0; 4];
            v[pos] = s;
            out.push(UnitQuaternion::from_array(v));
        }
    }

    // (+-1, +-1, +-1, +-1)
    for signs in 0..16u32 {
        let v = std::array::from_fn(|b| if signs >> b & 1 == 1 { -1.0 } else { 1.0 });
        out.push(UnitQuaternion::from_array(v));
    }

    out
}

fn even_permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(12);
    let mut idx = [0, 1, 2, 3];
    permute(&mut idx, 0, &mut out);
    out
}

fn permute(idx: &mut [usize; 4], start: usize, out: &mut Vec<[usize; 4]>) {
    if start == 4 {
        if parity(idx) == 0 {
            out.push(*idx);
        }
        return;
    }
    for i in start..4 {
        idx.swap(start, i);
        permute(idx, start + 1, out);
        idx.swap(start, i);
    }
}

fn parity(p: &[usize; 4]) -> usize {
    let mut inv = 0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv % 2
}

fn hemisphere_filter(vertices: &[UnitQuaternion], cells: &[[u16; 4]]) -> Result<Vec<TetraNode>> {
    let nodes: Vec<TetraNode> = cells
        .iter()
        .filter(|cell| cell.iter().any(|&v| vertices[v as usize].r > 0.0))
        .map(|cell| {
            TetraNode::new(
                [
                    vertices[cell[0] as usize],
                    vertices[cell[1] as usize],
                    vertices[cell[2] as usize],
                    vertices[cell[3] as usize],
                ],
                0,
            )
        })
        .collect();
    if nodes.len() != 330 {
        return Err(AlignError::ConstructionInvariantViolated(format!(
            "expected 330 hemisphere cells, got {}",
            nodes.len()
        )));
    }
    Ok(nodes)
}

/// Worst-case refinement depth for a rotational tolerance of `eps_rad`
/// (rotation-angle convention: twice the S^3 vertex angle).
pub fn rot_depth_for_tolerance(eps_rad: f64) -> u32 {
    assert!(eps_rad > 0.0 && eps_rad < std::f64::consts::PI);
    let target = (eps_rad / 2.0).cos();
    let num = 1.0 / GAMMA0 - 1.0;
    let den = 1.0 / target - 1.0;
    let n = ((num / den).log2() - 1e-9).ceil();
    n.max(0.0) as u32
}

impl Tessellation {
    /// Write the versioned binary cache: magic "S3TESS01", then 120x4 f64
    /// little-endian vertices and 600x4 u16 cell indices.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(8 + 120 * 4 * 8 + 600 * 4 * 2);
        buf.extend_from_slice(MAGIC);
        for q in &self.vertices {
            for c in q.as_array() {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        for cell in &self.cells {
            for &ix in cell {
                buf.extend_from_slice(&ix.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    /// Read back the binary cache and rebuild the hemisphere cells.
    pub fn load(path: &Path) -> Result<Tessellation> {
        let mut data = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut data)?;
        let expected = 8 + 120 * 4 * 8 + 600 * 4 * 2;
        if data.len() != expected || &data[..8] != MAGIC {
            return Err(AlignError::Parse {
                location: path.display().to_string(),
                message: "bad tessellation cache header or size".into(),
            });
        }
        let mut off = 8;
        let mut vertices = Vec::with_capacity(120);
        for _ in 0..120 {
            let mut comp = [0.0; 4];
            for c in comp.iter_mut() {
                *c = f64::from_le_bytes(data[off..off + 8].try_into().unwrap());
                off += 8;
            }
            vertices.push(UnitQuaternion::from_array(comp));
        }
        let mut cells = Vec::with_capacity(600);
        for _ in 0..600 {
            let mut cell = [0u16; 4];
            for ix in cell.iter_mut() {
                *ix = u16::from_le_bytes(data[off..off + 2].try_into().unwrap());
                off += 2;
                if *ix >= 120 {
                    return Err(AlignError::Parse {
                        location: path.display().to_string(),
                        message: "cell index out of range".into(),
                    });
                }
            }
            cells.push(cell);
        }
        let hemisphere_cells = hemisphere_filter(&vertices, &cells)?;
        Ok(Tessellation { vertices, cells, hemisphere_cells })
    }

    /// Load from the cache when present and valid; otherwise construct and
    /// (best effort) write the cache.
    pub fn load_or_generate(cache: Option<&Path>) -> Result<Tessellation> {
        if let Some(path) = cache {
            if let Ok(t) = Tessellation::load(path) {
                return Ok(t);
            }
        }
        let t = generate_600cell()?;
        if let Some(path) = cache {
            let _ = t.save(path);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub fn random_hemisphere_quat(rng: &mut impl Rng) -> UnitQuaternion {
        loop {
            let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n: f64 = a.iter().map(|x| x * x).sum();
            if n > 1e-3 && n < 1.0 {
                return UnitQuaternion::from_array(a).canonicalized();
            }
        }
    }

    fn tess() -> &'static Tessellation {
        use std::sync::OnceLock;
        static T: OnceLock<Tessellation> = OnceLock::new();
        T.get_or_init(|| generate_600cell().unwrap())
    }

    #[test]
    fn counts_and_unit_norms() {
        let t = tess();
        assert_eq!(t.vertices.len(), 120);
        assert_eq!(t.cells.len(), 600);
        assert_eq!(t.hemisphere_cells.len(), 330);
        for v in &t.vertices {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_pairwise_dots_are_cos36() {
        let t = tess();
        for cell in &t.cells {
            for a in 0..4 {
                for b in (a + 1)..4 {
                    let d = t.vertices[cell[a] as usize].dot(&t.vertices[cell[b] as usize]);
                    assert!((d - GAMMA0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn depth0_gamma_is_cos36() {
        for node in &tess().hemisphere_cells {
            assert!((node.gamma() - GAMMA0).abs() < 1e-12);
        }
    }

    #[test]
    fn subdivide_child_count_and_gamma_bound() {
        let parent = &tess().hemisphere_cells[0];
        let children = parent.subdivide();
        assert_eq!(children.len(), 8);
        let bound = 2.0 * GAMMA0 / (1.0 + GAMMA0);
        assert!((bound - 0.8944272).abs() < 1e-7);
        for c in &children {
            assert_eq!(c.depth(), 1);
            for v in c.vertices() {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
            assert!(c.gamma() >= bound - 1e-12);
        }
    }

    #[test]
    fn corner_child_vertices() {
        let parent = &tess().hemisphere_cells[7];
        let children = parent.subdivide();
        let v = parent.vertices();
        let c0 = &children[0];
        assert!(c0.vertices()[0].dot(&v[0]) > 1.0 - 1e-12);
        for j in 1..4 {
            let sum = [
                v[0].as_array()[0] + v[j].as_array()[0],
                v[0].as_array()[1] + v[j].as_array()[1],
                v[0].as_array()[2] + v[j].as_array()[2],
                v[0].as_array()[3] + v[j].as_array()[3],
            ];
            let mid = UnitQuaternion::from_array(sum);
            assert!(c0.vertices()[j].dot(&mid).abs() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn contains_vertices_and_center() {
        for node in tess().hemisphere_cells.iter().step_by(17) {
            for v in node.vertices() {
                assert!(node.contains(v).unwrap());
            }
            assert!(node.contains(&node.center()).unwrap());
        }
    }

    #[test]
    fn excludes_disjoint_cell_vertices() {
        let t = tess();
        let a = &t.hemisphere_cells[0];
        let a_set: Vec<UnitQuaternion> = a.vertices().to_vec();
        // find hemisphere cells sharing no vertex (as rotations) with cell a;
        // every cone point has dot >= cos 36 with each vertex, so vertices
        // below that threshold must test outside
        let mut checked = 0;
        for b in &t.hemisphere_cells {
            let disjoint = b
                .vertices()
                .iter()
                .all(|bv| a_set.iter().all(|av| av.dot(bv).abs() < 0.75));
            if disjoint {
                for bv in b.vertices() {
                    assert!(!a.contains(bv).unwrap());
                }
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn nesting_children_cover_parent_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let parent = &tess().hemisphere_cells[42];
        let children = parent.subdivide();
        let q_mat = parent.vertex_matrix();
        let mut tested = 0;
        while tested < 1000 {
            let alpha: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
            let q = UnitQuaternion::from_array(q_mat.mul_vec(alpha));
            if !parent.contains(&q).unwrap() {
                continue;
            }
            tested += 1;
            assert!(
                children.iter().any(|c| c.contains(&q).unwrap()),
                "point in parent missed by all children"
            );
        }
    }

    #[test]
    fn depth_formula_values() {
        let deg = std::f64::consts::PI / 180.0;
        assert_eq!(rot_depth_for_tolerance(72.0 * deg), 0);
        assert_eq!(rot_depth_for_tolerance(2.0 * deg), 11);
        assert_eq!(rot_depth_for_tolerance(1.0 * deg), 13);
    }

    #[test]
    fn cache_roundtrip() {
        let t = tess();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tess.bin");
        t.save(&path).unwrap();
        let t2 = Tessellation::load(&path).unwrap();
        assert_eq!(t2.vertices.len(), 120);
        assert_eq!(t2.cells, t.cells);
        assert_eq!(t2.hemisphere_cells.len(), 330);
        for (a, b) in t.vertices.iter().zip(&t2.vertices) {
            assert!(a.dot(b) > 1.0 - 1e-15);
        }
    }

    #[test]
    fn coverage_smoke() {
        // small-sample version of the acceptance coverage audit
        let t = tess();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut double = 0;
        for _ in 0..2000 {
            let q = random_hemisphere_quat(&mut rng);
            let hits = t
                .hemisphere_cells
                .iter()
                .filter(|c| c.contains(&q).unwrap())
                .count();
            assert!(hits >= 1, "uncovered quaternion");
            if hits >= 2 {
                double += 1;
            }
        }
        let frac = double as f64 / 2000.0;
        assert!(frac > 0.03 && frac < 0.12, "double cover fraction {frac}");
    }
}
