use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use slender::disc_fv::assemble_fv;
use slender::disc_th::assemble_th;
use slender::geometry::*;
use slender::mms::ProblemData;
use slender::precond::*;
use slender::system::Layout;
use slender::StokesSystem;

fn fv(len: f64, w: f64, h: f64, preset: BcPreset) -> StokesSystem {
    let geom = ChannelGeometry::with_preset(len, w, preset).unwrap();
    assemble_fv(&build_staggered_grid(&geom, h).unwrap(), &ProblemData::manufactured()).unwrap()
}

fn th(len: f64, w: f64, level: i32, preset: BcPreset) -> StokesSystem {
    let geom = ChannelGeometry::with_preset(len, w, preset).unwrap();
    assemble_th(&build_rect_tri_mesh(&geom, level).unwrap(), &ProblemData::manufactured()).unwrap()
}

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dense(m: &slender::SparseMatrix) -> DMatrix<f64> {
    let rows = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| rows[i][j])
}

#[test]
fn two_cell_jump_matrix() {
    let system = fv(2.0, 1.0, 1.0, BcPreset::AllDirichlet);
    let c = 0.7;
    let coeff = Coefficient::Scalar { alpha: c, width: WidthField::Constant(1.0) };
    let (k, singular) = assemble_pressure_laplacian(&system, &coeff).unwrap();
    assert!(singular);
    let expect = [[c, -c], [-c, c]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((k.get(i, j) - expect[i][j]).abs() < 1e-15);
        }
    }
}

#[test]
fn p1_stiffness_rows_sum_to_zero() {
    let system = th(1.0, 1.0, 2, BcPreset::AllDirichlet);
    let (k, singular) =
        assemble_pressure_laplacian(&system, &Coefficient::Scalar { alpha: 1.0, width: WidthField::Constant(1.0) })
            .unwrap();
    assert!(singular);
    let ones = vec![1.0; k.nrows()];
    assert!(k.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-12));
    // with traction ends the constant is no longer in the kernel
    let system = th(1.0, 1.0, 2, BcPreset::LongNoslip);
    let (k, singular) =
        assemble_pressure_laplacian(&system, &Coefficient::Scalar { alpha: 1.0, width: WidthField::Constant(1.0) })
            .unwrap();
    assert!(!singular);
    // each traction edge adds ∫_e (k/|e|) p q, i.e. k for constants
    let Layout::Th(lay) = &system.layout else { unreachable!() };
    let edges = lay.mesh.boundary.iter().filter(|e| e.tag == BoundaryTag::TractionNeumann).count();
    assert_eq!(edges, 8);
    let total: f64 = k.spmv(&ones).unwrap().iter().sum();
    assert!((total - edges as f64).abs() < 1e-12);
}

#[test]
fn coarse_chain_is_tridiagonal() {
    let geom = ChannelGeometry::with_preset(10.0, 1.0, BcPreset::AllDirichlet).unwrap();
    let part = build_coarse_partition(&geom, 1.0).unwrap();
    let (k, singular) = assemble_coarse_laplacian(&part, 1.0, 1.0, false).unwrap();
    assert!(singular);
    for i in 0..10 {
        for j in 0..10 {
            let expect = match (i as i32 - j as i32).abs() {
                0 if i == 0 || i == 9 => 1.0,
                0 => 2.0,
                1 => -1.0,
                _ => 0.0,
            };
            assert_eq!(k.get(i, j), expect, "({i}, {j})");
        }
    }
}

#[test]
fn single_cell_neumann_face() {
    let (alpha, w) = (0.3, 0.4);
    let part = CoarsePartition {
        cells: vec![CoarseCell { x0: 0.0, x1: 1.0, volume: w }],
        faces: vec![],
        neumann_faces: vec![NeumannFace { cell: 0, side: Side::Right, measure: w, diameter: 1.0, centroid_distance: 0.5 }],
        width: w,
        h_min: 1.0,
        coarseness: w,
    };
    let (k, singular) = assemble_coarse_laplacian(&part, alpha, w, false).unwrap();
    assert!(!singular);
    assert!((k.get(0, 0) - alpha * w.powi(3)).abs() < 1e-15);
    let (k, _) = assemble_coarse_laplacian(&part, alpha, w, true).unwrap();
    assert!((k.get(0, 0) - 2.0 * alpha * w.powi(3)).abs() < 1e-15);
}

#[test]
fn projection_of_linear_function() {
    let geom = ChannelGeometry::with_preset(10.0, 1.0, BcPreset::LongNoslip).unwrap();
    let part = build_coarse_partition(&geom, 1.0).unwrap();
    for system in [fv(10.0, 1.0, 0.25, BcPreset::LongNoslip), th(10.0, 1.0, 1, BcPreset::LongNoslip)] {
        let proj = l2_projection_q_h(&system, &part).unwrap();
        let q: Vec<f64> = system.pressure_points.iter().map(|p| p[0]).collect();
        let qh = proj.apply(&q);
        for (k, v) in qh.iter().enumerate() {
            assert!((v - (k as f64 + 0.5)).abs() < 1e-12, "{:?} cell {k}: {v}", system.backend);
        }
        // piecewise constants are reproduced
        let pc: Vec<f64> = (0..10).map(|k| (k * k) as f64).collect();
        let fine = proj.prolong.spmv(&pc).unwrap();
        if system.backend == slender::Backend::Fv {
            let back = proj.apply(&fine);
            assert!(back.iter().zip(&pc).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        let ones = proj.apply(&vec![1.0; system.np()]);
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}

#[test]
fn projection_preserves_the_mean() {
    let geom = ChannelGeometry::with_preset(6.0, 1.0, BcPreset::LongNoslip).unwrap().with_constriction(3.0, 0.3).unwrap();
    let system = assemble_fv(&build_staggered_grid(&geom, 0.05).unwrap(), &ProblemData::zero()).unwrap();
    let part = build_coarse_partition(&geom, 1.0).unwrap();
    let proj = l2_projection_q_h(&system, &part).unwrap();
    let mp = system.mp.diagonal();
    for seed in 0..100 {
        let q = gaussian(system.np(), seed);
        let fine: f64 = dot(&q, &mp);
        let coarse: f64 = proj.apply(&q).iter().zip(&proj.mass).map(|(a, m)| a * m).sum();
        assert!((fine - coarse).abs() <= 1e-12 * fine.abs().max(1.0), "{fine} {coarse}");
    }
}

#[test]
fn every_kind_passes_spd_probes() {
    let constricted = {
        let geom =
            ChannelGeometry::with_preset(4.0, 1.0, BcPreset::LongNoslip).unwrap().with_constriction(2.0, 0.3).unwrap();
        assemble_fv(&build_staggered_grid(&geom, 0.1).unwrap(), &ProblemData::manufactured()).unwrap()
    };
    let systems = [
        fv(4.0, 0.5, 0.125, BcPreset::LongNoslip),
        fv(4.0, 0.5, 0.125, BcPreset::AllDirichlet),
        fv(4.0, 0.5, 0.125, BcPreset::FreeslipOnly),
        th(4.0, 1.0, 1, BcPreset::LongNoslip),
        th(4.0, 1.0, 1, BcPreset::FreeslipNoslip),
        th(4.0, 1.0, 1, BcPreset::AllDirichlet),
        constricted,
    ];
    let specs = [
        PreconditionerSpec::standard(),
        PreconditionerSpec::sum(1.0),
        PreconditionerSpec::coarse(1.0),
        PreconditionerSpec::varw(LUBRICATION_ALPHA),
        PreconditionerSpec::aniso_beta(1.0, 4.0, 0.5),
    ];
    for system in &systems {
        for spec in &specs {
            let pc = make_preconditioner(spec, system, None).unwrap();
            assert!(pc.spd_probe(10, 7) > 0.0, "{:?} {:?}", system.backend, spec.kind);
        }
    }
}

#[test]
fn pressure_block_is_symmetric() {
    let system = th(5.0, 1.0, 1, BcPreset::LongNoslip);
    for spec in [PreconditionerSpec::coarse(1.0), PreconditionerSpec::sum(0.5)] {
        let pc = make_preconditioner(&spec, &system, None).unwrap();
        let (a, b) = (gaussian(system.np(), 1), gaussian(system.np(), 2));
        let (sa, sb) = (pc.apply_pressure(&a), pc.apply_pressure(&b));
        assert!((dot(&sa, &b) - dot(&a, &sb)).abs() < 1e-10 * dot(&sa, &b).abs().max(1.0));
    }
}

#[test]
fn laplace_part_scales_inversely_with_alpha() {
    let system = fv(4.0, 0.5, 0.125, BcPreset::LongNoslip);
    let r = gaussian(system.np(), 3);
    let base = make_preconditioner(&PreconditionerSpec::sum(0.2), &system, None).unwrap();
    let scaled = make_preconditioner(&PreconditionerSpec::sum(0.2 * 7.0), &system, None).unwrap();
    let (a, b) = (base.pressure_parts(&r).laplace.unwrap(), scaled.pressure_parts(&r).laplace.unwrap());
    let norm = dot(&a, &a).sqrt();
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x / 7.0 - y).powi(2)).sum::<f64>().sqrt();
    assert!(diff <= 1e-12 * norm);
}

#[test]
fn sum_block_matches_dense_composition() {
    for system in [fv(3.0, 0.5, 0.125, BcPreset::LongNoslip), th(3.0, 1.0, 1, BcPreset::LongNoslip)] {
        assert!(system.np() <= 1000);
        let alpha = 0.4;
        let pc = make_preconditioner(&PreconditionerSpec::sum(alpha), &system, None).unwrap();
        let coeff = Coefficient::Scalar { alpha, width: width_field(&system.geometry) };
        let (k, _) = assemble_pressure_laplacian(&system, &coeff).unwrap();
        let oracle = dense(&system.mp).try_inverse().unwrap() + dense(&k).try_inverse().unwrap();
        for seed in 0..3 {
            let r = gaussian(system.np(), seed);
            let want = &oracle * DMatrix::from_column_slice(r.len(), 1, &r);
            let got = pc.apply_pressure(&r);
            let err = got.iter().zip(want.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 1e-9 * want.norm(), "{:?}: {err}", system.backend);
        }
    }
}

#[test]
fn unit_interval_prefactor() {
    let a = cross_section_prefactor(1.0, 1024).unwrap();
    assert!((a - 1.0 / 12.0).abs() <= 1e-4);
    assert!(a <= 1.0 / std::f64::consts::PI.powi(2));
    assert!(cross_section_prefactor(1.0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prefactor_is_width_independent_and_below_poincare(w in 0.01f64..50.0, n in 8usize..400) {
        let a = cross_section_prefactor(w, n).unwrap();
        prop_assert!(a <= 1.0 / std::f64::consts::PI.powi(2));
        prop_assert!((a - cross_section_prefactor(1.0, n).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn laplacian_annihilates_constants_without_traction(alpha in 0.01f64..10.0, rows in 1u32..8) {
        let w = 0.25 * rows as f64;
        let system = fv(2.0, w, 0.25, BcPreset::AllDirichlet);
        let (k, singular) = assemble_pressure_laplacian(
            &system,
            &Coefficient::Scalar { alpha, width: WidthField::Constant(w) },
        ).unwrap();
        prop_assert!(singular);
        let kc = k.spmv(&vec![1.0; k.nrows()]).unwrap();
        prop_assert!(kc.iter().all(|v| v.abs() < 1e-12 * alpha * w * w));
    }
}
