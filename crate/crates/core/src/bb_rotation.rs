//! Branch and bound over the rotation space S^3.
//!
//! The objective is a sum over vMF component pairs of D f(z(q)) with
//! f(z) = 2 sinh(z)/z and z(q) = sqrt(tau1^2 + tau2^2 + 2 tau1 tau2 q^T Xi q).
//! All pair weights are carried in the log domain and rescaled by a single
//! global factor so the largest term is O(1); the factor cancels in every
//! comparison the search makes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::mixtures::VmfMixture;
use crate::numerics::{
    gen_eig_pair, log_diff_exp, log_f_rot, log_vmf_const, xi_matrix, LogScale, Mat4, SymMat4,
    UnitQuaternion,
};
use crate::tess_s3::{TetraNode, Tessellation};

/// Below this relative width the chord through (l, u) degenerates and the
/// pair contributes the constant f(u) instead.
const DEGENERATE_WIDTH_REL: f64 = 1e-9;
/// Slack for the "all nonnegative or all nonpositive" eigenvector check.
const EIGVEC_SIGN_TOL: f64 = 1e-9;

/// One vMF component pair with its log-domain weight (already rescaled).
#[derive(Debug, Clone)]
pub struct RotPairTerms {
    pub log_d: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub mu1: crate::numerics::Vec3,
    pub mu2: crate::numerics::Vec3,
    pub xi: SymMat4,
}

/// The rescaled rotational objective: all pairs plus the shared log factor.
#[derive(Debug, Clone)]
pub struct RotProblem {
    pub terms: Vec<RotPairTerms>,
    pub scale: LogScale,
}

/// Build the pair terms of the rotational objective from two vMF mixtures.
/// Zero-weight components are dropped. The returned scale is the largest
/// log-weight plus tau1 + tau2 over all pairs, so every term of the
/// objective is at most O(1) after rescaling.
pub fn rot_problem(vmf1: &VmfMixture, vmf2: &VmfMixture) -> RotProblem {
    let mut raw = Vec::new();
    for c1 in &vmf1.components {
        for c2 in &vmf2.components {
            if c1.weight <= 0.0 || c2.weight <= 0.0 {
                continue;
            }
            let log_d = (2.0 * std::f64::consts::PI).ln()
                + c1.weight.ln()
                + c2.weight.ln()
                + log_vmf_const(c1.tau)
                + log_vmf_const(c2.tau);
            raw.push(RotPairTerms {
                log_d,
                tau1: c1.tau,
                tau2: c2.tau,
                mu1: c1.mu,
                mu2: c2.mu,
                xi: xi_matrix(c1.mu, c2.mu),
            });
        }
    }
    let z = raw
        .iter()
        .map(|t| t.log_d + t.tau1 + t.tau2)
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = if z.is_finite() { LogScale::new(z) } else { LogScale::none() };
    for t in raw.iter_mut() {
        t.log_d = scale.apply(t.log_d);
    }
    RotProblem { terms: raw, scale }
}

fn z_of(term: &RotPairTerms, q: &UnitQuaternion) -> f64 {
    let quad = term.xi.quadratic_form(q.as_array());
    (term.tau1 * term.tau1
        + term.tau2 * term.tau2
        + 2.0 * term.tau1 * term.tau2 * quad)
        .max(0.0)
        .sqrt()
}

/// Rescaled objective value at a single rotation.
pub fn rot_objective(problem: &RotProblem, q: &UnitQuaternion) -> f64 {
    problem
        .terms
        .iter()
        .map(|t| (t.log_d + log_f_rot(z_of(t, q))).exp())
        .sum()
}

/// Range [l, u] of z(q) over one cell for one pair.
///
/// z^2 is a quadratic form in q, so its extrema over the projected
/// tetrahedron are found exactly by the sign-constrained generalized
/// eigenvalue enumeration (the maximizer of a quadratic form over each face
/// of the cone, restricted to the unit sphere, is a generalized eigenvector
/// with single-signed combination coefficients).
pub fn pair_extrema(term: &RotPairTerms, node: &TetraNode) -> (f64, f64) {
    let q = node.vertex_matrix();
    let qt = q.transpose();
    let s = symmetric_product(&qt, &term.xi, &q);
    let qq = qt.mul_mat(&q);
    let sm = Mat4(*s.as_array());
    let neg = Mat4(std::array::from_fn(|i| std::array::from_fn(|j| -sm.0[i][j])));
    let quad_max = max_constrained_eig(&sm, &qq).clamp(-1.0, 1.0);
    let quad_min = (-max_constrained_eig(&neg, &qq)).clamp(-1.0, 1.0);
    let t_sq = term.tau1 * term.tau1 + term.tau2 * term.tau2;
    let c = 2.0 * term.tau1 * term.tau2;
    let u = (t_sq + c * quad_max).max(0.0).sqrt();
    let l = (t_sq + c * quad_min).max(0.0).sqrt();
    (l.min(u), u)
}

/// max over {q = Q alpha, alpha >= 0, |q| = 1} of the quadratic form whose
/// vertex-basis matrix is `aq` (with `qq` the vertex Gram matrix): the best
/// feasible generalized eigenvalue over all 15 vertex subsets, keeping only
/// eigenvectors whose coordinates are single-signed. Vertex singletons are
/// always feasible, so the result is finite for nondegenerate cells.
fn max_constrained_eig(aq: &Mat4, qq: &Mat4) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..16 {
        let idx: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let n = idx.len();
        let mut sa = SymMat4::zeros();
        let mut sb = SymMat4::zeros();
        for r in 0..n {
            for c in 0..n {
                sa.set_sym(r, c, aq.0[idx[r]][idx[c]]);
                sb.set_sym(r, c, qq.0[idx[r]][idx[c]]);
            }
        }
        let Ok((eig, vecs)) = gen_eig_pair(&sa, &sb, n) else {
            continue;
        };
        for col in 0..n {
            let v = vecs.column(col);
            let vmax = v[..n].iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if vmax == 0.0 {
                continue;
            }
            let tol = EIGVEC_SIGN_TOL * vmax;
            let nonneg = v[..n].iter().all(|&x| x >= -tol);
            let nonpos = v[..n].iter().all(|&x| x <= tol);
            if nonneg || nonpos {
                best = best.max(eig[col]);
            }
        }
    }
    best
}

/// Upper bound on the rescaled objective over one cell.
///
/// Each pair's f(z) is replaced by the chord g z^2 + h through (l^2, f(l))
/// and (u^2, f(u)); the quadratic part is maximized over the projected
/// tetrahedron by a KKT enumeration of the generalized eigenproblem on every
/// vertex subset, keeping only eigenvectors with single-signed coordinates.
pub fn rot_upper_bound(problem: &RotProblem, node: &TetraNode) -> Result<f64> {
    let mut a = SymMat4::zeros();
    let mut b = 0.0f64;
    for term in &problem.terms {
        let (l, u) = pair_extrema(term, node);
        let width = u - l;
        if width <= DEGENERATE_WIDTH_REL * (term.tau1 + term.tau2).max(1e-300) {
            b += (term.log_d + log_f_rot(u)).exp();
            continue;
        }
        let lf_u = log_f_rot(u);
        let lf_l = log_f_rot(l);
        let ln_den = (u * u - l * l).ln();
        // g = (f(u) - f(l)) / (u^2 - l^2) > 0
        let log_g = log_diff_exp(lf_u, lf_l) - ln_den;
        let dg = (term.log_d + log_g).exp();
        // h = (u^2 f(l) - l^2 f(u)) / (u^2 - l^2), either sign
        let x1 = 2.0 * u.ln() + lf_l;
        let x2 = if l > 0.0 { 2.0 * l.ln() + lf_u } else { f64::NEG_INFINITY };
        let dh = if x1 >= x2 {
            (term.log_d + log_diff_exp(x1, x2) - ln_den).exp()
        } else {
            -(term.log_d + log_diff_exp(x2, x1) - ln_den).exp()
        };
        let t_sq = term.tau1 * term.tau1 + term.tau2 * term.tau2;
        a.add_scaled(&term.xi, 2.0 * term.tau1 * term.tau2 * dg);
        b += t_sq * dg + dh;
    }

    let q = node.vertex_matrix();
    let qt = q.transpose();
    // Q^T A Q and Q^T Q as dense 4x4
    let aq = Mat4(*symmetric_product(&qt, &a, &q).as_array());
    let qq = qt.mul_mat(&q);
    let best = max_constrained_eig(&aq, &qq);
    debug_assert!(best.is_finite(), "vertex subsets always admit a candidate");
    Ok(b + best)
}

fn symmetric_product(qt: &Mat4, a: &SymMat4, q: &Mat4) -> SymMat4 {
    let am = Mat4(*a.as_array());
    let prod = qt.mul_mat(&am).mul_mat(q);
    // symmetrize against roundoff
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            m[i][j] = 0.5 * (prod.0[i][j] + prod.0[j][i]);
        }
    }
    SymMat4::from_upper(m)
}

/// Lower bound on the cell maximum: the objective at the cell center.
pub fn rot_lower_bound(problem: &RotProblem, node: &TetraNode) -> f64 {
    rot_objective(problem, &node.center())
}

/// Search stage tag in trace records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Rotation,
    Translation,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Rotation => "rot",
            Stage::Translation => "trans",
        }
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub iter: u64,
    pub stage: Stage,
    pub depth: u32,
    pub nodes_active: usize,
    pub best_l: f64,
    pub best_u: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct RotBbConfig {
    pub max_depth: u32,
    /// optional early stop once (best_u - best_l) <= gap_tol * max(|best_l|, 1e-300)
    pub gap_tol: Option<f64>,
    pub candidate_slack_rel: f64,
    pub max_candidates: usize,
}

impl Default for RotBbConfig {
    fn default() -> Self {
        RotBbConfig {
            max_depth: 11,
            gap_tol: None,
            candidate_slack_rel: 1e-3,
            max_candidates: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RotCandidate {
    pub q: UnitQuaternion,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct RotBbResult {
    pub best_q: UnitQuaternion,
    pub best_lower: f64,
    pub best_upper: f64,
    /// near-optimal cells kept for the translational stage, best first
    pub candidates: Vec<RotCandidate>,
    pub nodes_expanded: u64,
    pub trace: Vec<TraceRecord>,
}

struct HeapEntry {
    upper: f64,
    node: TetraNode,
    lower: f64,
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
            .then(self.node.depth().cmp(&o.node.depth()))
            .then(o.seq.cmp(&self.seq))
    }
}

/// Best-first branch and bound over the rotation space. Terminates when the
/// most promising cell has reached `max_depth` (or the optional gap
/// tolerance is met) and returns the incumbent plus near-optimal candidates.
pub fn rot_bb(
    problem: &RotProblem,
    tess: &Tessellation,
    config: &RotBbConfig,
) -> Result<RotBbResult> {
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut best_l = f64::NEG_INFINITY;
    let mut best_q = UnitQuaternion::identity();
    let mut trace = Vec::new();
    let mut nodes_expanded = 0u64;

    let push = |heap: &mut BinaryHeap<HeapEntry>,
                    seq: &mut u64,
                    best_l: &mut f64,
                    best_q: &mut UnitQuaternion,
                    node: TetraNode|
     -> Result<()> {
        let upper = rot_upper_bound(problem, &node)?;
        let center = node.center();
        let lower = rot_objective(problem, &center);
        if lower > *best_l {
            *best_l = lower;
            *best_q = center;
        }
        heap.push(HeapEntry { upper, node, lower, seq: *seq });
        *seq += 1;
        Ok(())
    };

    for cell in &tess.hemisphere_cells {
        push(&mut heap, &mut seq, &mut best_l, &mut best_q, cell.clone())?;
    }

    let mut iter = 0u64;
    // running minimum of observed heap maxima: each popped maximum is a
    // valid global upper bound, and a child bound can numerically exceed
    // its parent's by roundoff
    let mut running_u = f64::INFINITY;
    let (final_u, final_depth);
    loop {
        let Some(top) = heap.pop() else {
            // all cells pruned; the incumbent is optimal
            final_u = best_l;
            final_depth = 0;
            break;
        };
        running_u = running_u.min(top.upper);
        let gap = running_u - best_l;
        trace.push(TraceRecord {
            iter,
            stage: Stage::Rotation,
            depth: top.node.depth(),
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
        if top.node.depth() >= config.max_depth || gap_met {
            final_u = running_u;
            final_depth = top.node.depth();
            // keep the terminal node in the candidate pool
            heap.push(top);
            break;
        }
        nodes_expanded += 1;
        for child in top.node.subdivide() {
            push(&mut heap, &mut seq, &mut best_l, &mut best_q, child)?;
        }
        // lazy pruning happens implicitly: dominated entries are skipped at
        // candidate collection and never beat best_l at the top
        if heap.len() > 4 * 330 * 8 {
            let kept: Vec<HeapEntry> =
                heap.drain().filter(|e| e.upper >= best_l).collect();
            heap = kept.into_iter().collect();
        }
    }

    let slack = config.candidate_slack_rel * best_l.abs().max(1e-300);
    let mut pool: Vec<RotCandidate> = heap
        .into_iter()
        .filter(|e| e.upper >= best_l - slack)
        .map(|e| RotCandidate { q: e.node.center(), lower: e.lower, upper: e.upper })
        .collect();
    pool.sort_by(|x, y| {
        y.upper
            .total_cmp(&x.upper)
            .then(y.lower.total_cmp(&x.lower))
            .then(x.q.as_array().iter().zip(y.q.as_array()).fold(Ordering::Equal, |o, (a, b)| {
                o.then(a.total_cmp(&b))
            }))
    });
    pool.truncate(config.max_candidates);
    if pool.is_empty() {
        pool.push(RotCandidate { q: best_q, lower: best_l, upper: final_u });
    }
    // the incumbent rotation always leads the candidate list
    if pool
        .iter()
        .all(|c| c.q.rotation_angle_to(&best_q) > 1e-12)
    {
        pool.insert(0, RotCandidate { q: best_q, lower: best_l, upper: final_u });
        pool.truncate(config.max_candidates.max(1));
    }

    let _ = final_depth;
    Ok(RotBbResult {
        best_q,
        best_lower: best_l,
        best_upper: final_u.max(best_l),
        candidates: pool,
        nodes_expanded,
        trace,
    })
}
