//! From raw point clouds to the density surrogates driving both searches:
//! kNN+PCA surface normals, per-point surface-area weights, DP-vMF-means /
//! DP-means hard clustering, and maximum-likelihood vMF / Gaussian mixture
//! fits.

use crate::error::{AlignError, Result};
use crate::numerics::{sym_eig, Mat3, SymMat4, Vec3};

/// tau clamp for vMF fits; tau_max bounds log-domain ranges downstream, and
/// the ML formula is non-finite at rbar = 1.
pub const TAU_MIN: f64 = 1e-2;
pub const TAU_MAX: f64 = 1e3;

/// Above this size the kNN queries go through a uniform grid index.
const EXHAUSTIVE_KNN_LIMIT: usize = 20_000;

/// A point cloud with unit surface normals and nonnegative per-point weights.
#[derive(Debug, Clone)]
pub struct WeightedCloud {
    pub points: Vec<Vec3>,
    /// unit normals; estimated from local covariance when absent
    pub normals: Option<Vec<Vec3>>,
    /// per-point density weights; derived from neighbor spacing when absent
    pub weights: Option<Vec<f64>>,
}

impl WeightedCloud {
    pub fn points_only(points: Vec<Vec3>) -> Self {
        WeightedCloud { points, normals: None, weights: None }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VmfComponent {
    pub mu: Vec3,
    pub tau: f64,
    pub weight: f64,
}

/// von-Mises-Fisher mixture over surface normals.
#[derive(Debug, Clone)]
pub struct VmfMixture {
    pub components: Vec<VmfComponent>,
}

#[derive(Debug, Clone, Copy)]
pub struct GaussComponent {
    pub mu: Vec3,
    pub sigma: Mat3,
    pub weight: f64,
}

/// Gaussian mixture over points.
#[derive(Debug, Clone)]
pub struct GaussMixture {
    pub components: Vec<GaussComponent>,
}

/// Result of normal estimation; `degenerate[i]` marks neighborhoods whose
/// covariance was numerically rank-deficient (normal defaulted to +z).
#[derive(Debug, Clone)]
pub struct NormalsEstimate {
    pub normals: Vec<Vec3>,
    pub degenerate: Vec<bool>,
}

/// Hard clustering output. `objective` holds the value of the weighted
/// objective after each full iteration (monotone nonincreasing).
#[derive(Debug, Clone)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub means: Vec<Vec3>,
    pub objective: Vec<f64>,
}

// ---------------------------------------------------------------------------
// k nearest neighbors

/// Indices of the k nearest neighbors of every point (self excluded), sorted
/// by (distance, index) so runs are reproducible under ties.
pub fn knn_indices(points: &[Vec3], k: usize) -> Vec<Vec<u32>> {
    if points.len() <= EXHAUSTIVE_KNN_LIMIT {
        knn_exhaustive(points, k)
    } else {
        knn_grid(points, k)
    }
}

fn knn_exhaustive(points: &[Vec3], k: usize) -> Vec<Vec<u32>> {
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    let mut cand: Vec<(f64, u32)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        for j in 0..n {
            if j != i {
                cand.push(((points[i] - points[j]).norm_sq(), j as u32));
            }
        }
        let kk = k.min(cand.len());
        cand.select_nth_unstable_by(kk.saturating_sub(1), |a, b| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        });
        let mut near: Vec<(f64, u32)> = cand[..kk].to_vec();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.push(near.into_iter().map(|(_, j)| j).collect());
    }
    out
}

struct GridIndex {
    origin: Vec3,
    h: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl GridIndex {
    fn build(points: &[Vec3], k: usize) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for &p in points {
            lo = lo.min_elem(p);
            hi = hi.max_elem(p);
        }
        let ext = hi - lo;
        let vol = (ext.x.max(1e-12)) * (ext.y.max(1e-12)) * (ext.z.max(1e-12));
        // aim for roughly k points per cell
        let h = (vol * (k.max(1) as f64) / points.len() as f64).cbrt().max(1e-12);
        let dims = [
            ((ext.x / h).floor() as usize + 1).min(512),
            ((ext.y / h).floor() as usize + 1).min(512),
            ((ext.z / h).floor() as usize + 1).min(512),
        ];
        let mut cells = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let mut idx = GridIndex { origin: lo, h, dims, cells: Vec::new() };
        for (i, &p) in points.iter().enumerate() {
            let c = idx.cell_of(p);
            cells[c].push(i as u32);
        }
        idx.cells = cells;
        idx
    }

    fn coords_of(&self, p: Vec3) -> [usize; 3] {
        let rel = p - self.origin;
        [
            ((rel.x / self.h) as usize).min(self.dims[0] - 1),
            ((rel.y / self.h) as usize).min(self.dims[1] - 1),
            ((rel.z / self.h) as usize).min(self.dims[2] - 1),
        ]
    }

    fn cell_of(&self, p: Vec3) -> usize {
        let c = self.coords_of(p);
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }
}

fn knn_grid(points: &[Vec3], k: usize) -> Vec<Vec<u32>> {
    let grid = GridIndex::build(points, k);
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let c = grid.coords_of(points[i]);
        let mut near: Vec<(f64, u32)> = Vec::with_capacity(4 * k);
        let mut ring = 0usize;
        loop {
            // gather candidates in the cube shell at Chebyshev distance `ring`
            let lo = [
                c[0].saturating_sub(ring),
                c[1].saturating_sub(ring),
                c[2].saturating_sub(ring),
            ];
            let hi = [
                (c[0] + ring).min(grid.dims[0] - 1),
                (c[1] + ring).min(grid.dims[1] - 1),
                (c[2] + ring).min(grid.dims[2] - 1),
            ];
            for cz in lo[2]..=hi[2] {
                for cy in lo[1]..=hi[1] {
                    for cx in lo[0]..=hi[0] {
                        let on_shell = ring == 0
                            || cx == lo[0]
                            || cx == hi[0]
                            || cy == lo[1]
                            || cy == hi[1]
                            || cz == lo[2]
                            || cz == hi[2];
                        if !on_shell {
                            continue;
                        }
                        let cell = (cz * grid.dims[1] + cy) * grid.dims[0] + cx;
                        for &j in &grid.cells[cell] {
                            if j as usize != i {
                                near.push(((points[i] - points[j as usize]).norm_sq(), j));
                            }
                        }
                    }
                }
            }
            // the shell at distance `ring` guarantees all points within
            // (ring) * h; stop once k found inside the guaranteed radius
            let guaranteed = (ring as f64) * grid.h;
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            near.dedup_by_key(|e| e.1);
            let have = near.iter().filter(|e| e.0.sqrt() <= guaranteed).count();
            let exhausted = lo == [0, 0, 0]
                && hi == [grid.dims[0] - 1, grid.dims[1] - 1, grid.dims[2] - 1];
            if have >= k || exhausted {
                break;
            }
            ring += 1;
        }
        near.truncate(k);
        out.push(near.into_iter().map(|(_, j)| j).collect());
    }
    out
}

// ---------------------------------------------------------------------------
// normals and weights

/// PCA normal per point: the smallest eigenvector of the covariance of its k
/// nearest neighbors, sign-flipped toward the viewpoint.
pub fn estimate_normals(points: &[Vec3], k: usize, viewpoint: Vec3) -> Result<NormalsEstimate> {
    if k < 3 || points.len() <= k {
        return Err(AlignError::Config(format!(
            "estimate_normals requires N > k >= 3 (N={}, k={k})",
            points.len()
        )));
    }
    let nbrs = knn_indices(points, k);
    let mut normals = Vec::with_capacity(points.len());
    let mut degenerate = Vec::with_capacity(points.len());
    for (i, nb) in nbrs.iter().enumerate() {
        let m = nb.len() as f64;
        let mut mean = Vec3::ZERO;
        for &j in nb {
            mean += points[j as usize];
        }
        mean = mean / m;
        let mut cov = [[0.0f64; 4]; 4];
        for &j in nb {
            let d = points[j as usize] - mean;
            let da = [d.x, d.y, d.z];
            for a in 0..3 {
                for b in a..3 {
                    cov[a][b] += da[a] * da[b] / m;
                }
            }
        }
        let sym = SymMat4::from_upper(cov);
        let (eig, vecs) = sym_eig(&sym, 3);
        // rank < 2 (zero or collinear neighborhood) has no stable plane normal
        let degen = eig[1] <= 1e-12 * eig[0].max(1e-300) || eig[0] <= 0.0;
        let mut normal = if degen {
            Vec3::new(0.0, 0.0, 1.0)
        } else {
            let col = vecs.column(2); // smallest eigenvalue (descending order)
            Vec3::new(col[0], col[1], col[2]).normalized()
        };
        if (viewpoint - points[i]).dot(normal) < 0.0 {
            normal = -normal;
        }
        normals.push(normal);
        degenerate.push(degen);
    }
    Ok(NormalsEstimate { normals, degenerate })
}

/// Surface-area weight per point: squared distance to the fifth nearest
/// neighbor (the constant pi factor drops out downstream).
pub fn point_weights(points: &[Vec3]) -> Result<Vec<f64>> {
    if points.len() < 6 {
        return Err(AlignError::Config(format!(
            "point_weights requires N >= 6 (N={})",
            points.len()
        )));
    }
    let nbrs = knn_indices(points, 5);
    Ok(nbrs
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let j = *nb.last().unwrap() as usize;
            (points[i] - points[j]).norm_sq()
        })
        .collect())
}

// ---------------------------------------------------------------------------
// nonparametric clustering

struct ClusterState {
    mean: Vec3,
    /// weight of the point that spawned this cluster (penalty bookkeeping for
    /// the monotone objective)
    spawn_weight: f64,
}

/// DP-vMF-means: hard assignments on the sphere; a normal joins the cluster
/// of maximum mean dot if that dot reaches cos(lambda_deg), else spawns a
/// new cluster. Deterministic input-order processing.
pub fn dp_vmf_means(normals: &[Vec3], weights: &[f64], lambda_deg: f64) -> Clustering {
    assert!(lambda_deg > 0.0 && lambda_deg < 180.0);
    assert_eq!(normals.len(), weights.len());
    let cos_lambda = (lambda_deg.to_radians()).cos();
    let mut clusters: Vec<ClusterState> = Vec::new();
    let mut labels = vec![usize::MAX; normals.len()];
    let mut objective = Vec::new();

    for _ in 0..100 {
        let prev = labels.clone();
        for (i, n) in normals.iter().enumerate() {
            let best = clusters
                .iter()
                .enumerate()
                .map(|(k, c)| (k, c.mean.dot(*n)))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((k, dot)) if dot >= cos_lambda => labels[i] = k,
                _ => {
                    clusters.push(ClusterState { mean: *n, spawn_weight: weights[i] });
                    labels[i] = clusters.len() - 1;
                }
            }
        }
        compact_clusters(&mut clusters, &mut labels);
        // mean update: normalized weighted sums
        let mut sums = vec![Vec3::ZERO; clusters.len()];
        for (i, &l) in labels.iter().enumerate() {
            sums[l] += normals[i] * weights[i];
        }
        for (c, s) in clusters.iter_mut().zip(&sums) {
            if s.norm() > 1e-12 {
                c.mean = s.normalized();
            }
        }
        let j: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| weights[i] * (1.0 - clusters[l].mean.dot(normals[i])))
            .sum::<f64>()
            + (1.0 - cos_lambda) * clusters.iter().map(|c| c.spawn_weight).sum::<f64>();
        objective.push(j);
        if prev == labels {
            break;
        }
    }

    Clustering {
        labels,
        means: clusters.iter().map(|c| c.mean).collect(),
        objective,
    }
}

/// DP-means in R^3: a point joins the nearest center if the squared distance
/// is below lambda_len^2, else spawns a new center at itself.
pub fn dp_means(points: &[Vec3], weights: &[f64], lambda_len: f64) -> Clustering {
    assert!(lambda_len > 0.0);
    assert_eq!(points.len(), weights.len());
    let lambda_sq = lambda_len * lambda_len;
    let mut clusters: Vec<ClusterState> = Vec::new();
    let mut labels = vec![usize::MAX; points.len()];
    let mut objective = Vec::new();

    for _ in 0..100 {
        let prev = labels.clone();
        for (i, p) in points.iter().enumerate() {
            let best = clusters
                .iter()
                .enumerate()
                .map(|(k, c)| (k, (c.mean - *p).norm_sq()))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            match best {
                Some((k, d2)) if d2 < lambda_sq => labels[i] = k,
                _ => {
                    clusters.push(ClusterState { mean: *p, spawn_weight: weights[i] });
                    labels[i] = clusters.len() - 1;
                }
            }
        }
        compact_clusters(&mut clusters, &mut labels);
        let mut sums = vec![(Vec3::ZERO, 0.0f64); clusters.len()];
        for (i, &l) in labels.iter().enumerate() {
            sums[l].0 += points[i] * weights[i];
            sums[l].1 += weights[i];
        }
        for (c, (s, w)) in clusters.iter_mut().zip(&sums) {
            if *w > 0.0 {
                c.mean = *s / *w;
            }
        }
        let j: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| weights[i] * (clusters[l].mean - points[i]).norm_sq())
            .sum::<f64>()
            + lambda_sq * clusters.iter().map(|c| c.spawn_weight).sum::<f64>();
        objective.push(j);
        if prev == labels {
            break;
        }
    }

    Clustering {
        labels,
        means: clusters.iter().map(|c| c.mean).collect(),
        objective,
    }
}

fn compact_clusters(clusters: &mut Vec<ClusterState>, labels: &mut [usize]) {
    let mut used = vec![false; clusters.len()];
    for &l in labels.iter() {
        used[l] = true;
    }
    if used.iter().all(|&u| u) {
        return;
    }
    let mut remap = vec![usize::MAX; clusters.len()];
    let mut next = 0;
    for (k, &u) in used.iter().enumerate() {
        if u {
            remap[k] = next;
            next += 1;
        }
    }
    let mut kept = Vec::with_capacity(next);
    for (k, c) in clusters.drain(..).enumerate() {
        if used[k] {
            kept.push(c);
        }
    }
    *clusters = kept;
    for l in labels.iter_mut() {
        *l = remap[*l];
    }
}

// ---------------------------------------------------------------------------
// maximum likelihood mixture fits

/// ML vMF fit per cluster: weighted mean direction, the standard
/// concentration approximation tau ~ rbar (3 - rbar^2) / (1 - rbar^2)
/// clamped to [TAU_MIN, TAU_MAX], and weight proportional to cluster mass.
pub fn fit_vmf_mixture(normals: &[Vec3], weights: &[f64], labels: &[usize]) -> VmfMixture {
    let n_clusters = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut sums = vec![Vec3::ZERO; n_clusters];
    let mut mass = vec![0.0f64; n_clusters];
    for (i, &l) in labels.iter().enumerate() {
        sums[l] += normals[i] * weights[i];
        mass[l] += weights[i];
    }
    let total: f64 = mass.iter().sum();
    let components = (0..n_clusters)
        .map(|k| {
            let (mu, rbar) = if mass[k] > 0.0 && sums[k].norm() > 1e-12 {
                (sums[k].normalized(), (sums[k].norm() / mass[k]).min(1.0))
            } else {
                (Vec3::new(0.0, 0.0, 1.0), 0.0)
            };
            let tau = if rbar >= 1.0 {
                TAU_MAX
            } else {
                (rbar * (3.0 - rbar * rbar) / (1.0 - rbar * rbar)).clamp(TAU_MIN, TAU_MAX)
            };
            VmfComponent { mu, tau, weight: if total > 0.0 { mass[k] / total } else { 0.0 } }
        })
        .collect();
    VmfMixture { components }
}

/// ML Gaussian fit per cluster: weighted mean and covariance, regularized by
/// `sigma2_floor` on the diagonal; weight proportional to cluster mass.
pub fn fit_gauss_mixture(
    points: &[Vec3],
    weights: &[f64],
    labels: &[usize],
    sigma2_floor: f64,
) -> GaussMixture {
    let n_clusters = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut sums = vec![Vec3::ZERO; n_clusters];
    let mut mass = vec![0.0f64; n_clusters];
    for (i, &l) in labels.iter().enumerate() {
        sums[l] += points[i] * weights[i];
        mass[l] += weights[i];
    }
    let means: Vec<Vec3> = (0..n_clusters)
        .map(|k| if mass[k] > 0.0 { sums[k] / mass[k] } else { Vec3::ZERO })
        .collect();
    let mut covs = vec![Mat3::zeros(); n_clusters];
    for (i, &l) in labels.iter().enumerate() {
        let d = points[i] - means[l];
        let da = [d.x, d.y, d.z];
        for a in 0..3 {
            for b in 0..3 {
                covs[l].0[a][b] += weights[i] * da[a] * da[b];
            }
        }
    }
    let total: f64 = mass.iter().sum();
    let components = (0..n_clusters)
        .map(|k| {
            let mut sigma = if mass[k] > 0.0 {
                covs[k].scale(1.0 / mass[k])
            } else {
                Mat3::zeros()
            };
            for d in 0..3 {
                sigma.0[d][d] += sigma2_floor;
            }
            GaussComponent {
                mu: means[k],
                sigma,
                weight: if total > 0.0 { mass[k] / total } else { 0.0 },
            }
        })
        .collect();
    GaussMixture { components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid_plane(n_side: usize, spacing: f64) -> Vec<Vec3> {
        let mut pts = Vec::new();
        for i in 0..n_side {
            for j in 0..n_side {
                pts.push(Vec3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
            }
        }
        pts
    }

    fn random_sphere_points(rng: &mut impl Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| loop {
                let v = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if v.norm_sq() > 1e-3 {
                    break v.normalized();
                }
            })
            .collect()
    }

    #[test]
    fn knn_matches_bruteforce_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec3> = (0..60)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let nbrs = knn_indices(&pts, 7);
        for i in 0..pts.len() {
            let mut brute: Vec<(f64, u32)> = (0..pts.len())
                .filter(|&j| j != i)
                .map(|j| ((pts[i] - pts[j]).norm_sq(), j as u32))
                .collect();
            brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let want: Vec<u32> = brute[..7].iter().map(|&(_, j)| j).collect();
            assert_eq!(nbrs[i], want);
        }
    }

    #[test]
    fn grid_knn_agrees_with_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec3> = (0..500)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                )
            })
            .collect();
        let a = knn_exhaustive(&pts, 5);
        let b = knn_grid(&pts, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn normals_on_plane() {
        let pts = grid_plane(10, 0.1);
        let est = estimate_normals(&pts, 8, Vec3::new(0.0, 0.0, 10.0)).unwrap();
        for (n, &d) in est.normals.iter().zip(&est.degenerate) {
            assert!(!d);
            assert!((*n - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn normals_on_sphere_near_radial() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts = random_sphere_points(&mut rng, 2000);
        // viewpoint far outside; outward normals should be near radial
        let est = estimate_normals(&pts, 10, Vec3::new(0.0, 0.0, 100.0)).unwrap();
        let mut ok = 0;
        for (p, n) in pts.iter().zip(&est.normals) {
            let radial = p.normalized();
            let angle = radial.dot(*n).abs().clamp(0.0, 1.0).acos().to_degrees();
            if angle < 5.0 {
                ok += 1;
            }
        }
        assert!(ok as f64 / pts.len() as f64 > 0.95, "only {ok} radial normals");
    }

    #[test]
    fn collinear_neighborhood_flagged() {
        let pts: Vec<Vec3> = (0..20).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let est = estimate_normals(&pts, 5, Vec3::new(0.0, 10.0, 0.0)).unwrap();
        assert!(est.degenerate.iter().all(|&d| d));
    }

    #[test]
    fn normals_equivariant_under_rotation() {
        use crate::numerics::UnitQuaternion;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // generic positions (no distance ties, so neighbor sets are stable
        // under exact isometries up to roundoff)
        let pts: Vec<Vec3> = (0..80)
            .map(|_| {
                let x = rng.gen_range(-1.0..1.0);
                let y = rng.gen_range(-1.0..1.0);
                Vec3::new(x, y, 0.01 * (x * 7.0).sin())
            })
            .collect();
        let vp = Vec3::new(0.3, 0.2, 5.0);
        let q = UnitQuaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let est = estimate_normals(&pts, 8, vp).unwrap();
        let rot_pts: Vec<Vec3> = pts.iter().map(|&p| q.rotate(p)).collect();
        let est_rot = estimate_normals(&rot_pts, 8, q.rotate(vp)).unwrap();
        for (n, nr) in est.normals.iter().zip(&est_rot.normals) {
            assert!((q.rotate(*n) - *nr).norm() < 1e-9);
        }
    }

    #[test]
    fn weights_uniform_grid_interior() {
        let pts = grid_plane(12, 0.5);
        let w = point_weights(&pts).unwrap();
        // interior points all have an identical 5th-NN distance by symmetry
        let interior: Vec<f64> = (0..12 * 12)
            .filter(|&i| {
                let (r, c) = (i / 12, i % 12);
                r > 0 && r < 11 && c > 0 && c < 11
            })
            .map(|i| w[i])
            .collect();
        for v in &interior {
            assert!((v - interior[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn weights_scale_quadratically() {
        let pts = grid_plane(8, 0.3);
        let doubled: Vec<Vec3> = pts.iter().map(|&p| p * 2.0).collect();
        let w1 = point_weights(&pts).unwrap();
        let w2 = point_weights(&doubled).unwrap();
        for (a, b) in w1.iter().zip(&w2) {
            assert!((b - 4.0 * a).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn weights_with_duplicates() {
        // 6 copies of the origin plus spread points: the duplicated points'
        // 5th NN is another duplicate at distance 0
        let mut pts = vec![Vec3::ZERO; 6];
        for i in 0..4 {
            pts.push(Vec3::new(1.0 + i as f64, 0.0, 0.0));
        }
        let w = point_weights(&pts).unwrap();
        for i in 0..6 {
            assert_eq!(w[i], 0.0);
        }
        // brute-force 5th NN for the others
        for i in 6..10 {
            let mut d: Vec<f64> = (0..10)
                .filter(|&j| j != i)
                .map(|j| (pts[i] - pts[j]).norm_sq())
                .collect();
            d.sort_by(f64::total_cmp);
            assert!((w[i] - d[4]).abs() < 1e-12);
        }
    }

    #[test]
    fn dpvmf_single_direction() {
        let normals = vec![Vec3::new(0.0, 0.0, 1.0); 40];
        let weights = vec![1.0; 40];
        for lambda in [10.0, 45.0, 120.0] {
            let c = dp_vmf_means(&normals, &weights, lambda);
            assert_eq!(c.means.len(), 1);
        }
    }

    #[test]
    fn dpvmf_axes_make_six_clusters() {
        let mut normals = Vec::new();
        for axis in [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ] {
            for _ in 0..10 {
                normals.push(axis);
            }
        }
        let weights = vec![1.0; normals.len()];
        let c = dp_vmf_means(&normals, &weights, 45.0);
        assert_eq!(c.means.len(), 6);
    }

    #[test]
    fn dpvmf_two_bundles_threshold() {
        // bundles at z and -z: 180 degrees apart
        let mut normals = Vec::new();
        for _ in 0..10 {
            normals.push(Vec3::new(0.0, 0.0, 1.0));
            normals.push(Vec3::new(0.0, 0.0, -1.0));
        }
        let weights = vec![1.0; normals.len()];
        // lambda = 60: cos 60 = 0.5 > dot(-1) so two clusters
        assert_eq!(dp_vmf_means(&normals, &weights, 60.0).means.len(), 2);
        // lambda = 120: cos 120 = -0.5 > -1, still two clusters (the bundle
        // dot -1 is below the threshold)
        assert_eq!(dp_vmf_means(&normals, &weights, 120.0).means.len(), 2);
        // nearly-antipodal bundles with dot above cos 179 merge at 179
        let tilted: Vec<Vec3> = normals
            .iter()
            .map(|n| (*n + Vec3::new(0.02, 0.0, 0.0)).normalized())
            .collect();
        assert_eq!(dp_vmf_means(&tilted, &weights, 179.0).means.len(), 1);
    }

    #[test]
    fn dpmeans_one_dim_cases() {
        let pts = vec![Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)];
        let w = vec![1.0, 1.0];
        assert_eq!(dp_means(&pts, &w, 1.0).means.len(), 2);
        let c = dp_means(&pts, &w, 20.0);
        assert_eq!(c.means.len(), 1);
        assert!((c.means[0] - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dpmeans_three_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let centers = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(20.0, 0.0, 0.0),
            Vec3::new(0.0, 25.0, 0.0),
        ];
        let mut pts = Vec::new();
        for c in centers {
            for _ in 0..50 {
                pts.push(
                    c + Vec3::new(
                        rng.gen_range(-0.01..0.01),
                        rng.gen_range(-0.01..0.01),
                        rng.gen_range(-0.01..0.01),
                    ),
                );
            }
        }
        let w = vec![1.0; pts.len()];
        let c = dp_means(&pts, &w, 2.0);
        assert_eq!(c.means.len(), 3);
        for center in centers {
            // brute-force centroid of the blob nearest this center
            let blob: Vec<Vec3> = pts
                .iter()
                .copied()
                .filter(|p| (*p - center).norm() < 1.0)
                .collect();
            let centroid = blob.iter().fold(Vec3::ZERO, |a, &b| a + b) / blob.len() as f64;
            assert!(c.means.iter().any(|m| (*m - centroid).norm() < 1e-6));
        }
    }

    #[test]
    fn clustering_objectives_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let normals = random_sphere_points(&mut rng, 300);
        let weights: Vec<f64> = (0..300).map(|_| rng.gen_range(0.1..2.0)).collect();
        let c = dp_vmf_means(&normals, &weights, 50.0);
        for w in c.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "vmf objective rose: {:?}", w);
        }
        let pts: Vec<Vec3> = (0..300)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                )
            })
            .collect();
        let c = dp_means(&pts, &weights, 2.0);
        for w in c.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "dp-means objective rose: {:?}", w);
        }
    }

    #[test]
    fn vmf_fit_basic() {
        let n = Vec3::new(0.0, 1.0, 0.0);
        let normals = vec![n; 10];
        let weights = vec![0.5; 10];
        let labels = vec![0; 10];
        let m = fit_vmf_mixture(&normals, &weights, &labels);
        assert_eq!(m.components.len(), 1);
        assert!((m.components[0].mu - n).norm() < 1e-12);
        assert_eq!(m.components[0].tau, TAU_MAX);
        assert!((m.components[0].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vmf_fit_uniform_gives_tau_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let normals = random_sphere_points(&mut rng, 10_000);
        let weights = vec![1.0; normals.len()];
        let labels = vec![0; normals.len()];
        let m = fit_vmf_mixture(&normals, &weights, &labels);
        let rbar = normals.iter().fold(Vec3::ZERO, |a, &b| a + b).norm() / normals.len() as f64;
        assert!(rbar < 0.05);
        assert!(m.components[0].tau < 0.2);
    }

    #[test]
    fn vmf_fit_mass_ratio() {
        let normals = vec![Vec3::new(0.0, 0.0, 1.0); 4];
        let weights = vec![1.0, 1.0, 1.0, 1.0];
        let labels = vec![0, 0, 0, 1];
        let m = fit_vmf_mixture(&normals, &weights, &labels);
        assert!((m.components[0].weight - 0.75).abs() < 1e-12);
        assert!((m.components[1].weight - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gauss_fit_identical_points_floor() {
        let pts = vec![Vec3::new(1.0, 2.0, 3.0); 5];
        let w = vec![1.0; 5];
        let labels = vec![0; 5];
        let m = fit_gauss_mixture(&pts, &w, &labels, 1e-4);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1e-4 } else { 0.0 };
                assert!((m.components[0].sigma.0[a][b] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gauss_fit_recovers_axis_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let sig = Vec3::new(1.0, 2.0, 3.0);
        let pts: Vec<Vec3> = (0..10_000)
            .map(|_| {
                // Box-Muller pairs
                let g = |rng: &mut ChaCha8Rng| {
                    let u1: f64 = rng.gen_range(1e-12..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                };
                Vec3::new(sig.x * g(&mut rng), sig.y * g(&mut rng), sig.z * g(&mut rng))
            })
            .collect();
        let w = vec![1.0; pts.len()];
        let labels = vec![0; pts.len()];
        let m = fit_gauss_mixture(&pts, &w, &labels, 0.0);
        let d = [
            m.components[0].sigma.0[0][0],
            m.components[0].sigma.0[1][1],
            m.components[0].sigma.0[2][2],
        ];
        let want = [1.0, 4.0, 9.0];
        for (got, want) in d.iter().zip(&want) {
            assert!((got - want).abs() < 0.05 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn fits_invariant_to_global_weight_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let pts: Vec<Vec3> = (0..100)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let w: Vec<f64> = (0..100).map(|_| rng.gen_range(0.1..1.0)).collect();
        let w2: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        let labels: Vec<usize> = (0..100).map(|i| i % 3).collect();
        let a = fit_gauss_mixture(&pts, &w, &labels, 1e-6);
        let b = fit_gauss_mixture(&pts, &w2, &labels, 1e-6);
        for (ca, cb) in a.components.iter().zip(&b.components) {
            assert!((ca.mu - cb.mu).norm() < 1e-12);
            assert!((ca.weight - cb.weight).abs() < 1e-12);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((ca.sigma.0[i][j] - cb.sigma.0[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}
