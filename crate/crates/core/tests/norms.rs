use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slender::disc_fv::assemble_fv;
use slender::disc_th::assemble_th;
use slender::geometry::*;
use slender::mms::ProblemData;
use slender::norms::*;
use slender::precond::l2_projection_q_h;
use slender::StokesSystem;

fn fv(len: f64, w: f64, h: f64, preset: BcPreset) -> StokesSystem {
    let geom = ChannelGeometry::with_preset(len, w, preset).unwrap();
    assemble_fv(&build_staggered_grid(&geom, h).unwrap(), &ProblemData::zero()).unwrap()
}

fn random_zero_mean(system: &StokesSystem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut q: Vec<f64> = (0..system.np()).map(|_| rng.gen::<f64>() - 0.5).collect();
    remove_mean(system, &mut q);
    q
}

#[test]
fn sum_norm_chain() {
    for (len, w, h) in [(4.0, 1.0, 0.25), (8.0, 0.5, 0.125), (2.0, 1.0, 0.125)] {
        let system = fv(len, w, h, BcPreset::AllDirichlet);
        let ctx = NormContext::new(&system, &WidthField::Constant(w)).unwrap();
        let upper = 2f64.sqrt() * (len / PI / w).max(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = random_zero_mean(&system, &mut rng);
            let (s, l2) = (ctx.sum_norm(&q), ctx.l2_norm(&q));
            assert!(s <= l2 * (1.0 + 1e-12));
            assert!(l2 <= upper * s, "L={len}: {l2} > {upper} * {s}");
        }
    }
}

#[test]
fn sum_norm_vanishes_with_the_width() {
    let system = fv(4.0, 1.0, 0.25, BcPreset::LongNoslip);
    let q: Vec<f64> = system.pressure_points.iter().map(|p| (p[0] * p[1]).sin()).collect();
    let s = sum_norm(&system, &q, &WidthField::Constant(1e-9)).unwrap();
    assert!(s < 1e-6 * l2_norm(&system, &q), "{s}");
}

#[test]
fn slow_cosine_has_small_sum_norm() {
    let (len, w) = (10.0, 0.1);
    let system = fv(len, w, 0.025, BcPreset::AllDirichlet);
    let q: Vec<f64> = system.pressure_points.iter().map(|p| (PI * p[0] / len).cos()).collect();
    let ratio = sum_norm(&system, &q, &WidthField::Constant(w)).unwrap() / l2_norm(&system, &q);
    let bound = PI * w / len;
    assert!(ratio <= bound * 1.01, "{ratio} vs {bound}");
    assert!(ratio >= 0.9 * bound);
}

#[test]
fn schur_norm_basics() {
    let system = fv(2.0, 1.0, 0.25, BcPreset::AllDirichlet);
    let ones = vec![1.0; system.np()];
    assert!(schur_norm(&system, &ones).unwrap() < 1e-10);
    assert_eq!(schur_norm(&system, &vec![0.0; system.np()]).unwrap(), 0.0);
}

#[test]
fn schur_norm_matches_dense_evaluation() {
    let geom = ChannelGeometry::with_preset(3.0, 1.0, BcPreset::LongNoslip).unwrap();
    let th = assemble_th(&build_rect_tri_mesh(&geom, 1).unwrap(), &ProblemData::zero()).unwrap();
    for system in [fv(3.0, 1.0, 0.25, BcPreset::LongNoslip), th] {
        let s = dense_schur(&system).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let q: Vec<f64> = (0..system.np()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let v = nalgebra::DVector::from_column_slice(&q);
            let dense_sq = v.dot(&(&s * &v));
            let fact_sq = schur_norm(&system, &q).unwrap().powi(2);
            assert!((dense_sq - fact_sq).abs() <= 1e-10 * dense_sq.max(1.0), "{dense_sq} {fact_sq}");
        }
    }
}

#[test]
fn infsup_scales_inversely_with_length() {
    let b2 = infsup_constant(&fv(2.0, 1.0, 0.25, BcPreset::AllDirichlet)).unwrap();
    let b4 = infsup_constant(&fv(4.0, 1.0, 0.25, BcPreset::AllDirichlet)).unwrap();
    assert!(b2 > 0.0 && b2 <= 1.0);
    let r = b2 / b4;
    assert!((r - 2.0).abs() <= 0.5, "{r}");
    let unit = infsup_constant(&fv(1.0, 1.0, 0.25, BcPreset::AllDirichlet)).unwrap();
    assert!(unit > 0.0);
}

#[test]
fn infsup_is_stable_without_walls() {
    let betas: Vec<f64> =
        [1.0, 5.0, 10.0].iter().map(|&l| infsup_constant(&fv(l, 1.0, 0.25, BcPreset::FreeslipOnly)).unwrap()).collect();
    let (lo, hi) = betas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo <= 1.25, "{betas:?}");
}

fn jump_setups() -> Vec<(StokesSystem, CoarsePartition)> {
    let geom = ChannelGeometry::with_preset(4.0, 1.0, BcPreset::LongNoslip).unwrap();
    let part = build_coarse_partition(&geom, 1.0).unwrap();
    let fvs = assemble_fv(&build_staggered_grid(&geom, 0.125).unwrap(), &ProblemData::zero()).unwrap();
    let ths = assemble_th(&build_rect_tri_mesh(&geom, 2).unwrap(), &ProblemData::zero()).unwrap();
    let narrow = ChannelGeometry::with_preset(3.0, 0.5, BcPreset::LongNoslip).unwrap();
    let npart = build_coarse_partition(&narrow, 0.75).unwrap();
    let nfv = assemble_fv(&build_staggered_grid(&narrow, 0.125).unwrap(), &ProblemData::zero()).unwrap();
    vec![(fvs, part.clone()), (ths, part), (nfv, npart)]
}

#[test]
fn jump_identity_on_piecewise_constants() {
    for (system, part) in jump_setups() {
        let fv = system.backend == slender::Backend::Fv;
        let (a, b) = (1, 2);
        // for P1 only the cellwise constants that agree at the interface are representable
        let (va, vb) = if fv { (1.5, -0.25) } else { (0.75, 0.75) };
        let q: Vec<f64> = system
            .pressure_points
            .iter()
            .map(|p| {
                let (x0, x1) = (part.cells[a].x0, part.cells[b].x1);
                match part.locate(p[0]) {
                    c if c == a => va,
                    c if c == b => vb,
                    _ if !fv && (x0..=x1).contains(&p[0]) => va,
                    _ => 3.0,
                }
            })
            .collect();
        let (lhs, rhs) = jump_identity_check(&system, &part, &q, a, b).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12, "{lhs} {rhs}");
        if fv {
            let nu = part.cells[a].volume + part.cells[b].volume;
            let expect = part.cells[a].volume * part.cells[b].volume / nu * (va - vb) * (va - vb);
            assert!((rhs - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn jump_identity_is_strict_for_fluctuations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let setups = jump_setups();
    for k in 0..1000 {
        let (system, part) = &setups[k % setups.len()];
        let q: Vec<f64> = (0..system.np()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let a = rng.gen_range(0..part.num_cells() - 1);
        let (lhs, rhs) = jump_identity_check(system, part, &q, a, a + 1).unwrap();
        assert!(lhs > rhs, "sample {k}: {lhs} <= {rhs}");
    }
}

#[test]
fn jump_identity_needs_neighbours() {
    let (system, part) = jump_setups().swap_remove(0);
    let q = vec![0.0; system.np()];
    assert!(jump_identity_check(&system, &part, &q, 0, 2).is_err());
}

#[test]
fn subadditivity_on_two_pieces() {
    let geom = ChannelGeometry::with_preset(4.0, 1.0, BcPreset::LongNoslip).unwrap();
    for q in [
        Box::new(|p: [f64; 2]| (PI * p[0] / 4.0).cos()) as Box<dyn Fn([f64; 2]) -> f64>,
        Box::new(|p: [f64; 2]| p[0] * p[1] - 0.3 * (5.0 * p[0]).sin()),
    ] {
        let (parts, whole) = subadditivity_check(&geom, 0.125, 2, &*q).unwrap();
        assert!(parts <= whole + 1e-10, "{parts} > {whole}");
    }
}

#[test]
fn single_cell_split_norm_is_l2() {
    let system = fv(1.0, 1.0, 0.125, BcPreset::AllDirichlet);
    let part = build_coarse_partition(&system.geometry, 1.0).unwrap();
    assert_eq!(part.num_cells(), 1);
    let proj = l2_projection_q_h(&system, &part).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = random_zero_mean(&system, &mut rng);
    let v = coarse_split_norm(&system, &proj, &part, &q).unwrap();
    assert!((v - l2_norm(&system, &q)).abs() < 1e-12);
}

#[test]
fn scan_report_layout() {
    let report = norm_equivalence_scan(&NormScanConfig {
        lengths: vec![2.0, 4.0],
        width: 1.0,
        h: 0.25,
        samples: 5,
        seed: 1,
    })
    .unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.samples[0].len(), 6);
    for s in report.samples.iter().flatten() {
        assert!(s.sum <= s.l2 * (1.0 + 1e-12));
        assert!(s.l2 >= 0.0 && s.schur >= 0.0 && s.coarse_semi >= 0.0 && s.fluctuation >= 0.0);
    }
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "L,W,h,r_sum_min,r_sum_max,r_L2_max,lemma45_min,lemma45_max,seed");
    assert_eq!(text.lines().count(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn norms_are_homogeneous(c in -5.0f64..5.0, seed in 0u64..1000) {
        let system = fv(2.0, 0.5, 0.125, BcPreset::LongNoslip);
        let ctx = NormContext::new(&system, &WidthField::Constant(0.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = (0..system.np()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let cq: Vec<f64> = q.iter().map(|v| c * v).collect();
        for (a, b) in [
            (ctx.sum_norm(&cq), ctx.sum_norm(&q)),
            (ctx.schur_norm(&cq), ctx.schur_norm(&q)),
            (ctx.l2_norm(&cq), ctx.l2_norm(&q)),
        ] {
            prop_assert!((a - c.abs() * b).abs() <= 1e-9 * b.max(1e-300));
        }
    }
}
