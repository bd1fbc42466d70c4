//! Branch and bound over translation space.
//!
//! Given the rotation from the first stage, the objective is a Gaussian
//! mixture correlation: sum over component pairs of D e^{z(t)} with
//! z(t) = -1/2 (t - m)^T S^-1 (t - m), m = mu1 - R mu2 and
//! S = Sigma1 + R Sigma2 R^T. Log-weights are rescaled so the largest is 0;
//! since z <= 0, every term then lives in [0, 1].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bb_rotation::{Stage, TraceRecord};
use crate::error::{AlignError, Result};
use crate::mixtures::GaussMixture;
use crate::numerics::{LogScale, Mat3, UnitQuaternion, Vec3};
use crate::tess_r3::BoxNode;

/// Below this width the chord through (l, u) degenerates and the pair
/// contributes the constant e^u.
const DEGENERATE_WIDTH: f64 = 1e-12;
/// Relative slack when testing whether a stationary point lies inside a box.
const FACE_TOL: f64 = 1e-12;

/// One Gaussian component pair with its rescaled log-weight.
#[derive(Debug, Clone)]
pub struct TransPairTerms {
    pub log_d: f64,
    pub m: Vec3,
    pub s_inv: Mat3,
}

/// The rescaled translational objective.
#[derive(Debug, Clone)]
pub struct TransProblem {
    pub terms: Vec<TransPairTerms>,
    pub scale: LogScale,
}

/// Build the pair terms for a fixed rotation. The rotation maps cloud 2
/// (source) onto cloud 1 (target), so each pair contributes a Gaussian in t
/// centered at mu1 - R mu2 with covariance Sigma1 + R Sigma2 R^T.
pub fn trans_problem(
    gmm1: &GaussMixture,
    gmm2: &GaussMixture,
    q: &UnitQuaternion,
) -> Result<TransProblem> {
    let r = q.rotation_matrix();
    let rt = r.transpose();
    let mut raw = Vec::new();
    for c1 in &gmm1.components {
        for c2 in &gmm2.components {
            if c1.weight <= 0.0 || c2.weight <= 0.0 {
                continue;
            }
            let s = c1.sigma.add_mat(&r.mul_mat(&c2.sigma).mul_mat(&rt));
            let det = s.det();
            if !(det > 0.0) {
                return Err(AlignError::Internal(format!(
                    "pair covariance not positive definite (det = {det})"
                )));
            }
            let s_inv = s.inverse().ok_or_else(|| {
                AlignError::Internal("pair covariance not invertible".into())
            })?;
            let log_d = c1.weight.ln() + c2.weight.ln()
                - 0.5 * (3.0 * (2.0 * std::f64::consts::PI).ln() + det.ln());
            raw.push(TransPairTerms { log_d, m: c1.mu - r.mul_vec(c2.mu), s_inv });
        }
    }
    let z = raw.iter().map(|t| t.log_d).fold(f64::NEG_INFINITY, f64::max);
    let scale = if z.is_finite() { LogScale::new(z) } else { LogScale::none() };
    for t in raw.iter_mut() {
        t.log_d = scale.apply(t.log_d);
    }
    Ok(TransProblem { terms: raw, scale })
}

fn z_of(term: &TransPairTerms, t: Vec3) -> f64 {
    let d = t - term.m;
    -0.5 * d.dot(term.s_inv.mul_vec(d))
}

/// Rescaled objective value at a single translation.
pub fn trans_objective(problem: &TransProblem, t: Vec3) -> f64 {
    problem
        .terms
        .iter()
        .map(|term| (term.log_d + z_of(term, t)).exp())
        .sum()
}

/// Maximize the concave quadratic x^T A x + b^T x + c over a box.
///
/// Enumerates the 27 face classifications (each axis free, clamped low, or
/// clamped high), solves the reduced stationary system on the free axes, and
/// keeps stationary points that fall inside the box. Returns the maximum
/// value and its location. `a` must be negative semidefinite so every face
/// restriction is concave and interior stationary points are maxima.
pub fn max_quadratic_over_box(a: &Mat3, b: Vec3, c: f64, node: &BoxNode) -> (f64, Vec3) {
    let eval = |x: Vec3| x.dot(a.mul_vec(x)) + b.dot(x) + c;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_x = node.lo;
    let span = (node.hi - node.lo).norm().max(1e-300);
    for code in 0..27u32 {
        let status: [u32; 3] = [code % 3, (code / 3) % 3, code / 9];
        let free: Vec<usize> = (0..3).filter(|&i| status[i] == 0).collect();
        let mut x = Vec3::new(
            if status[0] == 1 { node.lo.x } else { node.hi.x },
            if status[1] == 1 { node.lo.y } else { node.hi.y },
            if status[2] == 1 { node.lo.z } else { node.hi.z },
        );
        if !free.is_empty() {
            // stationary point of the restriction: 2 A_FF x_F = -(b_F + 2 A_Ff x_f)
            let n = free.len();
            let mut mat = crate::numerics::Mat4::zeros();
            let mut rhs = [0.0; 4];
            for r in 0..n {
                for cc in 0..n {
                    mat.0[r][cc] = 2.0 * a.0[free[r]][free[cc]];
                }
                let mut fixed_part = 0.0;
                for i in 0..3 {
                    if status[i] != 0 {
                        fixed_part += 2.0 * a.0[free[r]][i] * x.get(i);
                    }
                }
                rhs[r] = -(b.get(free[r]) + fixed_part);
            }
            let Some(sol) = crate::numerics::solve_linear(&mat, rhs, n, 1e-12) else {
                // flat direction: the same value is attained on the face
                // boundary, which other classifications cover
                continue;
            };
            let mut inside = true;
            for (r, &axis) in free.iter().enumerate() {
                let (lo, hi) = (node.lo.get(axis), node.hi.get(axis));
                if sol[r] < lo - FACE_TOL * span || sol[r] > hi + FACE_TOL * span {
                    inside = false;
                    break;
                }
                x.set(axis, sol[r].clamp(lo, hi));
            }
            if !inside {
                continue;
            }
        }
        let v = eval(x);
        if v > best_val {
            best_val = v;
            best_x = x;
        }
    }
    (best_val, best_x)
}

/// Range [l, u] of z(t) over a box for one pair. z is concave, so the
/// maximum comes from the box-constrained quadratic solver and the minimum
/// is attained at one of the eight box vertices.
pub fn pair_extrema_box(term: &TransPairTerms, node: &BoxNode) -> (f64, f64) {
    let a = term.s_inv.scale(-0.5);
    let b = term.s_inv.mul_vec(term.m);
    let c = -0.5 * term.m.dot(b);
    let (u, _) = max_quadratic_over_box(&a, b, c, node);
    let l = node
        .vertices()
        .iter()
        .map(|&v| z_of(term, v))
        .fold(f64::INFINITY, f64::min);
    (l.min(u), u.min(0.0).max(l))
}

/// Upper bound on the rescaled objective over a box.
///
/// Each pair's e^z is replaced by the linear chord g z + h through
/// (l, e^l) and (u, e^u); the resulting concave quadratic in t is maximized
/// exactly over the box.
pub fn trans_upper_bound(problem: &TransProblem, node: &BoxNode) -> f64 {
    let mut a = Mat3::zeros();
    let mut b = Vec3::ZERO;
    let mut c = 0.0f64;
    for term in &problem.terms {
        let (l, u) = pair_extrema_box(term, node);
        let d = term.log_d.exp();
        if u - l <= DEGENERATE_WIDTH {
            c += d * u.exp();
            continue;
        }
        let g = (u.exp() - l.exp()) / (u - l);
        let h = (u * l.exp() - l * u.exp()) / (u - l);
        let dg = d * g;
        // dg * z(t) expands to a quadratic in t
        a = a.add_mat(&term.s_inv.scale(-0.5 * dg));
        let sm = term.s_inv.mul_vec(term.m);
        b += sm * dg;
        c += dg * (-0.5 * term.m.dot(sm)) + d * h;
    }
    let (best, _) = max_quadratic_over_box(&a, b, c, node);
    best
}

/// Lower bound on the box maximum: the objective at the box center.
pub fn trans_lower_bound(problem: &TransProblem, node: &BoxNode) -> f64 {
    trans_objective(problem, node.center())
}

#[derive(Debug, Clone)]
pub struct TransBbConfig {
    pub max_depth: u32,
    /// optional early stop once the gap falls below gap_tol * max(|best_l|, 1e-300)
    pub gap_tol: Option<f64>,
}

impl Default for TransBbConfig {
    fn default() -> Self {
        TransBbConfig { max_depth: 10, gap_tol: None }
    }
}

#[derive(Debug, Clone)]
pub struct TransBbResult {
    pub best_t: Vec3,
    pub best_lower: f64,
    pub best_upper: f64,
    pub nodes_expanded: u64,
    pub trace: Vec<TraceRecord>,
}

struct HeapEntry {
    upper: f64,
    node: BoxNode,
    seq: u64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapEntry {
    // max-heap on upper bound; ties explore deeper nodes first, then
    // insertion order, so runs are deterministic
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper
            .total_cmp(&o.upper)
            .then(self.node.depth.cmp(&o.node.depth))
            .then(o.seq.cmp(&self.seq))
    }
}

/// Best-first branch and bound over a root translation box. Terminates when
/// the most promising box has reached `max_depth` or the optional gap
/// tolerance is met.
pub fn trans_bb(
    problem: &TransProblem,
    root: BoxNode,
    config: &TransBbConfig,
) -> TransBbResult {
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut best_l = f64::NEG_INFINITY;
    let mut best_t = root.center();
    let mut trace = Vec::new();
    let mut nodes_expanded = 0u64;

    let push = |heap: &mut BinaryHeap<HeapEntry>,
                    seq: &mut u64,
                    best_l: &mut f64,
                    best_t: &mut Vec3,
                    node: BoxNode| {
        let upper = trans_upper_bound(problem, &node);
        let center = node.center();
        let lower = trans_objective(problem, center);
        if lower > *best_l {
            *best_l = lower;
            *best_t = center;
        }
        heap.push(HeapEntry { upper, node, seq: *seq });
        *seq += 1;
    };

    push(&mut heap, &mut seq, &mut best_l, &mut best_t, root);

    let mut iter = 0u64;
    // running minimum of observed heap maxima: each popped maximum is a
    // valid global upper bound, and a child bound can numerically exceed
    // its parent's by roundoff
    let mut running_u = f64::INFINITY;
    let final_u;
    loop {
        let Some(top) = heap.pop() else {
            final_u = best_l;
            break;
        };
        running_u = running_u.min(top.upper);
        let gap = running_u - best_l;
        trace.push(TraceRecord {
            iter,
            stage: Stage::Translation,
            depth: top.node.depth,
            nodes_active: heap.len() + 1,
            best_l,
            best_u: running_u,
            gap,
        });
        iter += 1;
        let gap_met = config
            .gap_tol
            .map(|t| gap <= t * best_l.abs().max(1e-300))
            .unwrap_or(false);
        if top.node.depth >= config.max_depth || gap_met {
            final_u = running_u;
            break;
        }
        nodes_expanded += 1;
        for child in top.node.subdivide() {
            push(&mut heap, &mut seq, &mut best_l, &mut best_t, child);
        }
        if heap.len() > 1 << 16 {
            let kept: Vec<HeapEntry> =
                heap.drain().filter(|e| e.upper >= best_l).collect();
            heap = kept.into_iter().collect();
        }
    }

    TransBbResult {
        best_t,
        best_lower: best_l,
        best_upper: final_u.max(best_l),
        nodes_expanded,
        trace,
    }
}
