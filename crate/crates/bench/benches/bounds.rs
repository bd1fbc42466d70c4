use criterion::{criterion_group, criterion_main, Criterion};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use bnbalign::bb_rotation::{rot_problem, rot_upper_bound};
use bnbalign::bb_translation::{max_quadratic_over_box, trans_problem, trans_upper_bound};
use bnbalign::mixtures::{GaussComponent, GaussMixture, VmfComponent, VmfMixture};
use bnbalign::numerics::{Mat3, UnitQuaternion, Vec3};
use bnbalign::tess_r3::BoxNode;
use bnbalign::tess_s3::generate_600cell;

fn unit_vec(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-2 && n < 1.0 {
            return v / n;
        }
    }
}

fn vmf(rng: &mut impl Rng, k: usize) -> VmfMixture {
    VmfMixture {
        components: (0..k)
            .map(|_| VmfComponent {
                mu: unit_vec(rng),
                tau: rng.gen_range(5.0..80.0),
                weight: 1.0 / k as f64,
            })
            .collect(),
    }
}

fn spd(rng: &mut impl Rng) -> Mat3 {
    let mut a = [[0.0; 3]; 3];
    for r in &mut a {
        for v in r.iter_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = if i == j { 0.05 } else { 0.0 };
            for k in 0..3 {
                acc += a[k][i] * a[k][j];
            }
            s[i][j] = acc;
        }
    }
    Mat3(s)
}

fn gmm(rng: &mut impl Rng, k: usize) -> GaussMixture {
    GaussMixture {
        components: (0..k)
            .map(|_| GaussComponent {
                mu: Vec3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                ),
                sigma: spd(rng),
                weight: 1.0 / k as f64,
            })
            .collect(),
    }
}

fn bench_tessellation(c: &mut Criterion) {
    c.bench_function("600cell_generate", |b| {
        b.iter(|| generate_600cell().unwrap())
    });
}

fn bench_rot_bound(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tess = generate_600cell().unwrap();
    let problem = rot_problem(&vmf(&mut rng, 4), &vmf(&mut rng, 4));
    let cells: Vec<_> = tess.hemisphere_cells.iter().take(32).cloned().collect();
    c.bench_function("rot_upper_bound_4x4_pairs_32_cells", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for cell in &cells {
                acc += rot_upper_bound(&problem, cell).unwrap();
            }
            acc
        })
    });
}

fn bench_trans_bound(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = UnitQuaternion::from_axis_angle(unit_vec(&mut rng), 0.7);
    let problem = trans_problem(&gmm(&mut rng, 4), &gmm(&mut rng, 4), &q).unwrap();
    let root = BoxNode::new(Vec3::new(-4.0, -4.0, -4.0), Vec3::new(4.0, 4.0, 4.0), 0);
    let boxes: Vec<BoxNode> = root.subdivide().into_iter().flat_map(|b| b.subdivide()).collect();
    c.bench_function("trans_upper_bound_4x4_pairs_64_boxes", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for node in &boxes {
                acc += trans_upper_bound(&problem, node);
            }
            acc
        })
    });
}

fn bench_qp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases: Vec<(Mat3, Vec3, f64, BoxNode)> = (0..64)
        .map(|_| {
            let a = spd(&mut rng).scale(-1.0);
            let b = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let node = BoxNode::new(
                Vec3::new(-1.0, -1.0, -1.0),
                Vec3::new(1.0, 1.0, 1.0),
                0,
            );
            (a, b, 0.0, node)
        })
        .collect();
    c.bench_function("concave_qp_over_box_64_instances", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for (a, bv, cv, node) in &cases {
                acc += max_quadratic_over_box(a, *bv, *cv, node).0;
            }
            acc
        })
    });
}

criterion_group!(benches, bench_tessellation, bench_rot_bound, bench_trans_bound, bench_qp);
criterion_main!(benches);
