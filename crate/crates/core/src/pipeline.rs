//! End-to-end alignment: normals and weights, mixture fitting at several
//! angular scales, rotational branch and bound, optional Manhattan-World
//! candidate expansion, per-candidate translational branch and bound, and
//! final selection by the highest translational lower bound.

use std::time::Instant;

use crate::bb_rotation::{rot_bb, rot_problem, RotBbConfig, TraceRecord};
use crate::bb_translation::{trans_bb, trans_problem, TransBbConfig};
use crate::error::{AlignError, Result};
use crate::mixtures::{
    dp_means, dp_vmf_means, estimate_normals, fit_gauss_mixture, fit_vmf_mixture, point_weights,
    WeightedCloud,
};
use crate::numerics::{UnitQuaternion, Vec3};
use crate::tess_r3::{initial_box, initial_box_union_aabb, trans_depth_for_tolerance, BoxNode};
use crate::tess_s3::{rot_depth_for_tolerance, Tessellation};

#[derive(Debug, Clone)]
pub struct AlignmentConfig {
    /// angular scales (degrees) for normal clustering; one rotational search
    /// per scale
    pub lambda_deg_list: Vec<f64>,
    /// spatial clustering scale; None derives 10% of the target AABB diagonal
    pub lambda_x: Option<f64>,
    /// exactly one of rot_depth / rot_tol_deg must be set
    pub rot_depth: Option<u32>,
    pub rot_tol_deg: Option<f64>,
    /// exactly one of trans_depth / trans_tol must be set
    pub trans_depth: Option<u32>,
    pub trans_tol: Option<f64>,
    /// expand each rotational candidate by the 24 cube symmetries
    pub mw_enabled: bool,
    pub knn_k: usize,
    /// worker threads for per-candidate translational searches; results are
    /// merged by candidate index so the count never affects the output
    pub threads: usize,
    pub candidate_slack_rel: f64,
    pub max_candidates: usize,
    /// covariance floor = (sigma2_floor_scale * root box diagonal)^2
    pub sigma2_floor_scale: f64,
    /// use the union-of-AABBs root box instead of the Minkowski difference
    pub paper_box: bool,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            lambda_deg_list: vec![45.0, 65.0, 80.0],
            lambda_x: None,
            rot_depth: Some(11),
            rot_tol_deg: None,
            trans_depth: Some(10),
            trans_tol: None,
            mw_enabled: false,
            knn_k: 10,
            threads: 1,
            candidate_slack_rel: 1e-3,
            max_candidates: 8,
            sigma2_floor_scale: 1e-3,
            paper_box: false,
        }
    }
}

/// Diagnostics for one evaluated candidate rotation.
#[derive(Debug, Clone)]
pub struct CandidateDiagnostic {
    pub q: UnitQuaternion,
    pub t: Vec3,
    pub lambda_deg: f64,
    /// index into the 24-element symmetry expansion, when enabled
    pub mw_index: Option<usize>,
    pub rot_lower: f64,
    pub rot_upper: f64,
    pub trans_lower: f64,
    pub trans_upper: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub normals_ms: f64,
    pub clustering_ms: f64,
    pub rot_bb_ms: f64,
    pub trans_bb_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// rotation (i, j, k, r) mapping source points into the target frame
    pub q: UnitQuaternion,
    /// translation applied after the rotation
    pub t: Vec3,
    pub rot_lower: f64,
    pub rot_upper: f64,
    pub trans_lower: f64,
    pub trans_upper: f64,
    pub rot_depth: u32,
    pub trans_depth: u32,
    pub candidates: Vec<CandidateDiagnostic>,
    pub trace: Vec<TraceRecord>,
    pub timings: Timings,
}

/// x -> q . x + t applied to every point.
pub fn apply_transform(q: &UnitQuaternion, t: Vec3, points: &[Vec3]) -> Vec<Vec3> {
    let r = q.rotation_matrix();
    points.iter().map(|&p| r.mul_vec(p) + t).collect()
}

/// The 24 rotational symmetries of the cube, composed onto `q` from the
/// source side: each output first applies a symmetry in the source frame and
/// then the candidate rotation.
pub fn mw_expand(q: &UnitQuaternion) -> Vec<UnitQuaternion> {
    octahedral_group().iter().map(|g| q.mul(g)).collect()
}

fn octahedral_group() -> &'static [UnitQuaternion; 24] {
    use std::sync::OnceLock;
    static G: OnceLock<[UnitQuaternion; 24]> = OnceLock::new();
    G.get_or_init(|| {
        let mut out = Vec::with_capacity(24);
        out.push(UnitQuaternion::identity());
        let axes = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        // face axes: +-90 and 180 degrees
        for a in axes {
            for deg in [90.0, -90.0, 180.0] {
                out.push(UnitQuaternion::from_axis_angle(a, (deg as f64).to_radians()));
            }
        }
        // vertex axes: +-120 degrees
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                let a = Vec3::new(sx, sy, 1.0);
                for deg in [120.0, -120.0] {
                    out.push(UnitQuaternion::from_axis_angle(a, (deg as f64).to_radians()));
                }
            }
        }
        // edge axes: 180 degrees
        for a in [
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, -1.0),
            Vec3::new(0.0, 1.0, 1.0),
            Vec3::new(0.0, 1.0, -1.0),
        ] {
            out.push(UnitQuaternion::from_axis_angle(a, std::f64::consts::PI));
        }
        out.try_into().expect("24 octahedral rotations")
    })
}

fn aabb(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = points[0];
    let mut hi = points[0];
    for &p in points {
        lo = lo.min_elem(p);
        hi = hi.max_elem(p);
    }
    (lo, hi)
}

/// Root translation box for one candidate rotation: the source AABB is
/// rotated (bounded by the AABB of its rotated corners) before taking the
/// Minkowski difference with the target AABB.
fn candidate_root_box(
    target: &[Vec3],
    source_aabb: (Vec3, Vec3),
    q: &UnitQuaternion,
    paper_box: bool,
) -> Result<BoxNode> {
    let (lo, hi) = source_aabb;
    let r = q.rotation_matrix();
    let corners: Vec<Vec3> = (0..8)
        .map(|i| {
            r.mul_vec(Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            ))
        })
        .collect();
    if paper_box {
        initial_box_union_aabb(target, &corners)
    } else {
        initial_box(target, &corners)
    }
}

fn resolve_depths(config: &AlignmentConfig, root_diag: f64) -> Result<(u32, u32)> {
    let rot_depth = match (config.rot_depth, config.rot_tol_deg) {
        (Some(d), None) => d,
        (None, Some(tol)) if tol > 0.0 => rot_depth_for_tolerance(tol.to_radians()),
        _ => {
            return Err(AlignError::Config(
                "exactly one of rot_depth / rot_tol_deg must be set (tolerance > 0)".into(),
            ))
        }
    };
    let trans_depth = match (config.trans_depth, config.trans_tol) {
        (Some(d), None) => d,
        (None, Some(tol)) if tol > 0.0 => trans_depth_for_tolerance(tol, root_diag),
        _ => {
            return Err(AlignError::Config(
                "exactly one of trans_depth / trans_tol must be set (tolerance > 0)".into(),
            ))
        }
    };
    Ok((rot_depth, trans_depth))
}

fn normals_and_weights(
    cloud: &WeightedCloud,
    knn_k: usize,
) -> Result<(Vec<Vec3>, Vec<f64>)> {
    let n = cloud.points.len();
    if n == 0 {
        return Err(AlignError::EmptyCloud);
    }
    let normals = match &cloud.normals {
        Some(ns) => {
            if ns.len() != n {
                return Err(AlignError::Config(format!(
                    "normal count {} does not match point count {n}",
                    ns.len()
                )));
            }
            ns.iter().map(|v| v.normalized()).collect()
        }
        None => estimate_normals(&cloud.points, knn_k, Vec3::ZERO)?.normals,
    };
    let weights = match &cloud.weights {
        Some(ws) => {
            if ws.len() != n {
                return Err(AlignError::Config(format!(
                    "weight count {} does not match point count {n}",
                    ws.len()
                )));
            }
            ws.clone()
        }
        None if n >= 6 => point_weights(&cloud.points)?,
        None => vec![1.0; n],
    };
    Ok((normals, weights))
}

/// Globally align `source` onto `target`: the returned (q, t) maps source
/// points into the target frame as x -> q . x + t.
pub fn align(
    target: &WeightedCloud,
    source: &WeightedCloud,
    tess: &Tessellation,
    config: &AlignmentConfig,
) -> Result<AlignmentResult> {
    let t_start = Instant::now();
    if config.lambda_deg_list.is_empty() {
        return Err(AlignError::Config("lambda_deg_list must be nonempty".into()));
    }
    if target.points.is_empty() || source.points.is_empty() {
        return Err(AlignError::EmptyCloud);
    }

    let t0 = Instant::now();
    let (normals1, weights1) = normals_and_weights(target, config.knn_k)?;
    let (normals2, weights2) = normals_and_weights(source, config.knn_k)?;
    let normals_ms = t0.elapsed().as_secs_f64() * 1e3;

    // depth resolution uses the identity-rotation root box diagonal
    let source_box = aabb(&source.points);
    let id_root = candidate_root_box(
        &target.points,
        source_box,
        &UnitQuaternion::identity(),
        config.paper_box,
    )?;
    let (rot_depth, trans_depth) = resolve_depths(config, id_root.diagonal())?;

    // spatial mixtures are shared across the whole sweep so translational
    // lower bounds are comparable between candidates
    let t0 = Instant::now();
    let (tlo, thi) = aabb(&target.points);
    let lambda_x = match config.lambda_x {
        Some(v) if v > 0.0 => v,
        Some(_) => return Err(AlignError::Config("lambda_x must be positive".into())),
        None => 0.1 * (thi - tlo).norm().max(1e-12),
    };
    let sigma2_floor = {
        let s = config.sigma2_floor_scale * id_root.diagonal().max(1e-12);
        s * s
    };
    let gc1 = dp_means(&target.points, &weights1, lambda_x);
    let gc2 = dp_means(&source.points, &weights2, lambda_x);
    let gmm1 = fit_gauss_mixture(&target.points, &weights1, &gc1.labels, sigma2_floor);
    let gmm2 = fit_gauss_mixture(&source.points, &weights2, &gc2.labels, sigma2_floor);
    let clustering_ms = t0.elapsed().as_secs_f64() * 1e3;

    // one rotational search per angular scale
    let t0 = Instant::now();
    struct RawCandidate {
        q: UnitQuaternion,
        lambda_deg: f64,
        rot_lower: f64,
        rot_upper: f64,
        trace: Vec<TraceRecord>,
    }
    let mut raw: Vec<RawCandidate> = Vec::new();
    for &lambda in &config.lambda_deg_list {
        let c1 = dp_vmf_means(&normals1, &weights1, lambda);
        let c2 = dp_vmf_means(&normals2, &weights2, lambda);
        let vmf1 = fit_vmf_mixture(&normals1, &weights1, &c1.labels);
        let vmf2 = fit_vmf_mixture(&normals2, &weights2, &c2.labels);
        let problem = rot_problem(&vmf1, &vmf2);
        let rcfg = RotBbConfig {
            max_depth: rot_depth,
            gap_tol: None,
            candidate_slack_rel: config.candidate_slack_rel,
            max_candidates: config.max_candidates,
        };
        let res = rot_bb(&problem, tess, &rcfg)?;
        for c in &res.candidates {
            raw.push(RawCandidate {
                q: c.q.canonicalized(),
                lambda_deg: lambda,
                rot_lower: c.lower,
                rot_upper: c.upper,
                trace: res.trace.clone(),
            });
        }
    }
    let rot_bb_ms = t0.elapsed().as_secs_f64() * 1e3;
    if raw.is_empty() {
        return Err(AlignError::NoCandidates);
    }

    // optional symmetry expansion; the original rotation is index 0
    struct Job {
        q: UnitQuaternion,
        lambda_deg: f64,
        mw_index: Option<usize>,
        rot_lower: f64,
        rot_upper: f64,
        raw_index: usize,
    }
    let mut jobs: Vec<Job> = Vec::new();
    for (ri, r) in raw.iter().enumerate() {
        if config.mw_enabled {
            for (gi, qg) in mw_expand(&r.q).into_iter().enumerate() {
                jobs.push(Job {
                    q: qg.canonicalized(),
                    lambda_deg: r.lambda_deg,
                    mw_index: Some(gi),
                    rot_lower: r.rot_lower,
                    rot_upper: r.rot_upper,
                    raw_index: ri,
                });
            }
        } else {
            jobs.push(Job {
                q: r.q,
                lambda_deg: r.lambda_deg,
                mw_index: None,
                rot_lower: r.rot_lower,
                rot_upper: r.rot_upper,
                raw_index: ri,
            });
        }
    }

    let t0 = Instant::now();
    let tcfg = TransBbConfig { max_depth: trans_depth, gap_tol: None };
    let run_job = |job: &Job| -> Result<(CandidateDiagnostic, Vec<TraceRecord>)> {
        let problem = trans_problem(&gmm1, &gmm2, &job.q)?;
        let root = candidate_root_box(&target.points, source_box, &job.q, config.paper_box)?;
        let res = trans_bb(&problem, root, &tcfg);
        Ok((
            CandidateDiagnostic {
                q: job.q,
                t: res.best_t,
                lambda_deg: job.lambda_deg,
                mw_index: job.mw_index,
                rot_lower: job.rot_lower,
                rot_upper: job.rot_upper,
                trans_lower: res.best_lower,
                trans_upper: res.best_upper,
            },
            res.trace,
        ))
    };
    let evaluated: Vec<(CandidateDiagnostic, Vec<TraceRecord>)> = if config.threads > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| AlignError::Config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>())?
    } else {
        jobs.iter().map(run_job).collect::<Result<Vec<_>>>()?
    };
    let trans_bb_ms = t0.elapsed().as_secs_f64() * 1e3;

    // winner: highest translational lower bound, first on ties
    let mut best_idx = 0usize;
    for (i, (diag, _)) in evaluated.iter().enumerate() {
        if diag.trans_lower > evaluated[best_idx].0.trans_lower {
            best_idx = i;
        }
    }
    let (winner, winner_trace) = &evaluated[best_idx];
    let mut trace = raw[jobs[best_idx].raw_index].trace.clone();
    trace.extend(winner_trace.iter().copied());

    Ok(AlignmentResult {
        q: winner.q,
        t: winner.t,
        rot_lower: winner.rot_lower,
        rot_upper: winner.rot_upper,
        trans_lower: winner.trans_lower,
        trans_upper: winner.trans_upper,
        rot_depth,
        trans_depth,
        candidates: evaluated.iter().map(|(d, _)| d.clone()).collect(),
        trace,
        timings: Timings {
            normals_ms,
            clustering_ms,
            rot_bb_ms,
            trans_bb_ms,
            total_ms: t_start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
