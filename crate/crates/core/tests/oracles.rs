//! Cross-checks of the sparse pipeline against dense reference computations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use somor::benchmarks::{gen_dsms, gen_random, gen_tcom, DsmsParams, TcomParams};
use somor::bt::{balanced_truncate, hankel_singular_values, solve_lyapunov, DenseFirstOrderSystem};
use somor::freq::{error_curves, full_response, full_transfer, projected_response, reduced_response, FrequencyGrid};
use somor::irka::{assemble_reduced, check_interpolation, init_shifts, irka_reduce, realify, IrkaOptions, ShiftSet};
use somor::model::{constraint_rank, embed_first_order, RANK_DROP_TOL};
use somor::projection::{build_projector, project_system, projected_reduction, projected_transfer, split_projector};
use somor::saddle::{saddle_residual, solve_left, solve_many, solve_right, SaddleAssembler, Side};
use somor::verify::random_stable_dense;
use somor::{ReducedSecondOrderModel, SecondOrderIndex3System, SparseMatrix};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}

fn random_dir(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// Greedy nearest matching; fine for well separated spectra.
fn matched_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d / x.norm().max(1.0));
    }
    worst
}

fn transposed(sys: &SecondOrderIndex3System) -> SecondOrderIndex3System {
    SecondOrderIndex3System::new(
        sys.m.transpose(),
        sys.d.transpose(),
        sys.k.transpose(),
        sys.g.clone(),
        sys.l.transpose(),
        sys.f.transpose(),
    )
    .unwrap()
}

fn spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let x = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &x * x.transpose() + DMatrix::identity(n, n) * shift
}

#[test]
fn embedding_spectrum_matches_companion_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let (mr, dr, kr) = (spd(&mut rng, 3, 1.0), spd(&mut rng, 3, 0.1), spd(&mut rng, 3, 0.5));
        let fr = DMatrix::from_fn(3, 1, |_, _| rng.random_range(-1.0..1.0));
        let lr = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
        let rom = ReducedSecondOrderModel::new(mr.clone(), dr.clone(), kr.clone(), fr, lr).unwrap();
        let poles = embed_first_order(&rom).unwrap().poles().unwrap();

        let minv = mr.try_inverse().unwrap();
        let mut comp = DMatrix::zeros(6, 6);
        comp.view_mut((0, 3), (3, 3)).copy_from(&DMatrix::identity(3, 3));
        comp.view_mut((3, 0), (3, 3)).copy_from(&(-&minv * kr));
        comp.view_mut((3, 3), (3, 3)).copy_from(&(-&minv * dr));
        let oracle: Vec<Complex64> = comp.complex_eigenvalues().iter().copied().collect();
        assert!(matched_gap(&poles, &oracle) < 1e-10);
        assert!(poles.iter().all(|p| p.re < 0.0));
    }
}

#[test]
fn right_solve_matches_projected_oracle() {
    let sys = gen_random(50, 5, 2, 2, 11).unwrap();
    let split = split_projector(&build_projector(&sys).unwrap()).unwrap();
    let psys = project_system(&sys, &split).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for alpha in [c(0.1, 0.0), c(0.4, 2.0), c(3.0, -0.5)] {
        let b = random_dir(&mut rng, 2);
        let v = solve_right(&sys, alpha, &b).unwrap();
        let oracle = psys.lifted_solve(&split, alpha, &sys.f.mul_cvec(&b)).unwrap();
        assert!(rel_diff(&v, &oracle) < 1e-8);
        assert!(norm(&sys.g.mul_cvec(&v)) <= 1e-10 * norm(&v) * sys.g.norm());
    }
}

#[test]
fn left_solve_is_the_right_solve_of_the_transposed_system() {
    let sys = gen_random(50, 5, 2, 3, 12).unwrap();
    let tsys = transposed(&sys);
    let split = split_projector(&build_projector(&tsys).unwrap()).unwrap();
    let psys = project_system(&tsys, &split).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for alpha in [c(0.2, 0.0), c(1.0, 1.0)] {
        let cdir = random_dir(&mut rng, 3);
        let w = solve_left(&sys, alpha, &cdir).unwrap();
        let oracle = psys.lifted_solve(&split, alpha, &sys.l.tr_mul_cvec(&cdir)).unwrap();
        assert!(rel_diff(&w, &oracle) < 1e-8);
    }
}

#[test]
fn left_solve_on_truncated_dsms_respects_constraints() {
    let sys = gen_dsms(&DsmsParams::new(200, 20)).unwrap();
    let mut e2 = vec![c(0.0, 0.0); sys.outputs()];
    e2[1] = c(1.0, 0.0);
    let alpha = c(0.1, 0.5);
    let w = solve_left(&sys, alpha, &e2).unwrap();
    assert!(w.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    assert!(norm(&sys.g.mul_cvec(&w)) <= 1e-10 * norm(&w) * sys.g.norm());

    let tsys = transposed(&sys);
    let split = split_projector(&build_projector(&tsys).unwrap()).unwrap();
    let oracle = project_system(&tsys, &split)
        .unwrap()
        .lifted_solve(&split, alpha, &sys.l.tr_mul_cvec(&e2))
        .unwrap();
    assert!(rel_diff(&w, &oracle) < 1e-8);
}

#[test]
fn saddle_residuals_are_tiny() {
    let sys = gen_random(80, 8, 2, 2, 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for alpha in [c(0.05, 0.0), c(0.5, 3.0)] {
        for side in [Side::Right, Side::Left] {
            let r = saddle_residual(&sys, alpha, side, &random_dir(&mut rng, 2)).unwrap();
            assert!(r.relative <= 1e-10, "{side:?} {}", r.relative);
            assert!(r.constraint <= 1e-10);
        }
    }
}

#[test]
fn solve_many_pairs_and_constraints() {
    let sys = gen_random(50, 5, 2, 2, 14).unwrap();
    let (a, b, cd) = (c(0.3, 1.7), vec![c(1.0, 0.5), c(-0.2, 0.1)], vec![c(0.4, -1.0), c(1.0, 0.0)]);
    let conj = |v: &[Complex64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
    let pair = ShiftSet::new(vec![a, a.conj()], vec![b.clone(), conj(&b)], vec![cd.clone(), conj(&cd)]).unwrap();
    let (vc, wc) = solve_many(&sys, &pair).unwrap();
    for basis in [&vc, &wc] {
        let gap = (0..50).map(|i| (basis[(i, 1)] - basis[(i, 0)].conj()).norm()).fold(0.0, f64::max);
        assert!(gap <= 1e-12 * basis.column(0).norm());
    }

    let real = ShiftSet::new(vec![c(0.7, 0.0)], vec![vec![c(1.0, 0.0), c(0.5, 0.0)]], vec![vec![c(0.0, 0.0), c(1.0, 0.0)]])
        .unwrap();
    let (vc, _) = solve_many(&sys, &real).unwrap();
    let im: f64 = vc.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    assert!(im <= 1e-12 * vc.norm());

    let shifts = init_shifts(10, 2, 2, (1e-2, 1e1), 5).unwrap();
    let (vc, wc) = solve_many(&sys, &shifts).unwrap();
    let g = sys.g.to_dense();
    for basis in [&vc, &wc] {
        for j in 0..10 {
            let col: Vec<Complex64> = basis.column(j).iter().copied().collect();
            let gv = sys.g.mul_cvec(&col);
            assert!(norm(&gv) <= 1e-10 * norm(&col) * g.norm());
        }
    }
    let (v, w) = realify(&vc, &wc, &shifts).unwrap();
    for q in [&v, &w] {
        assert!((q.transpose() * q - DMatrix::identity(10, 10)).amax() <= 1e-12);
    }
}

#[test]
fn projector_fixes_the_constraint_null_space() {
    let sys = gen_random(50, 5, 1, 1, 15).unwrap();
    let proj = build_projector(&sys).unwrap();
    let g = sys.g.to_dense();
    let ortho = DMatrix::identity(50, 50) - g.transpose() * (&g * g.transpose()).try_inverse().unwrap() * &g;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let y = nalgebra::DVector::from_fn(50, |_, _| rng.random_range(-1.0..1.0));
        let x = &ortho * y;
        assert!((&g * &x).norm() <= 1e-12 * x.norm() * g.norm());
        assert!((proj.p.transpose() * &x - &x).norm() <= 1e-10 * x.norm());
    }
}

#[test]
fn projected_transfer_matches_saddle_transfer_entrywise() {
    let sys = gen_random(50, 5, 2, 3, 16).unwrap();
    let psys = project_system(&sys, &split_projector(&build_projector(&sys).unwrap()).unwrap()).unwrap();
    let asm = SaddleAssembler::new(&sys).unwrap();
    let grid = FrequencyGrid::log_spaced(1e-3, 1e3, 20).unwrap();
    for &w in grid.omegas() {
        let s = c(0.0, w);
        let t = full_transfer(&asm, s).unwrap();
        let tp = projected_transfer(&psys, s).unwrap();
        for (a, b) in t.iter().zip(tp.iter()) {
            assert!((a - b).norm() <= 1e-8 * a.norm().max(1.0));
        }
    }
}

#[test]
fn transfer_is_conjugate_symmetric() {
    let sys = gen_random(40, 4, 2, 2, 17).unwrap();
    let asm = SaddleAssembler::new(&sys).unwrap();
    for w in [0.01, 0.3, 1.0, 4.0, 50.0] {
        let tp = full_transfer(&asm, c(0.0, w)).unwrap();
        let tm = full_transfer(&asm, c(0.0, -w)).unwrap();
        assert!((tm - tp.map(|z| z.conj())).norm() <= 1e-12 * tp.norm());
    }
}

#[test]
fn near_zero_frequency_gives_static_constrained_gain() {
    let sys = gen_random(50, 5, 2, 2, 18).unwrap();
    let psys = project_system(&sys, &split_projector(&build_projector(&sys).unwrap()).unwrap()).unwrap();
    let gain = &psys.lt * psys.kt.clone().lu().solve(&psys.ft).unwrap();
    let t = full_response(&sys, &FrequencyGrid::new(vec![1e-8]).unwrap()).unwrap();
    let t0 = t.values[0].as_ref().unwrap();
    for (a, b) in t0.iter().zip(gain.iter()) {
        assert!((a - c(*b, 0.0)).norm() <= 1e-8 * gain.amax());
    }
}

#[test]
fn two_mass_transfer_at_one() {
    let sys = SecondOrderIndex3System::new(
        SparseMatrix::identity(2),
        SparseMatrix::zeros(2, 2),
        SparseMatrix::identity(2),
        SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]).unwrap(),
        SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0)]).unwrap(),
        SparseMatrix::identity(2),
    )
    .unwrap();
    let t = full_transfer(&SaddleAssembler::new(&sys).unwrap(), c(1.0, 0.0)).unwrap();
    assert!((t[(0, 0)] - c(0.25, 0.0)).norm() < 1e-14);
    assert!((t[(1, 0)] - c(0.25, 0.0)).norm() < 1e-14);
}

#[test]
fn single_null_space_column_gives_scalar_model() {
    let k = SparseMatrix::from_triplets(3, 3, &[(0, 0, 4.0), (1, 1, 5.0), (2, 2, 6.0), (1, 2, -1.0), (2, 1, -1.0)]).unwrap();
    let sys = SecondOrderIndex3System::new(
        SparseMatrix::diagonal(&[1.0, 2.0, 3.0]),
        SparseMatrix::diagonal(&[0.1, 0.2, 0.3]),
        k,
        SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0)]).unwrap(),
        SparseMatrix::from_triplets(3, 1, &[(0, 0, 1.0), (1, 0, 2.0), (2, 0, 3.0)]).unwrap(),
        SparseMatrix::from_triplets(1, 3, &[(0, 1, 7.0)]).unwrap(),
    )
    .unwrap();
    let e = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
    let rom = assemble_reduced(&sys, &e, &e).unwrap();
    assert_eq!(rom.mr[(0, 0)], 2.0);
    assert_eq!(rom.dr[(0, 0)], 0.2);
    assert_eq!(rom.kr[(0, 0)], 5.0);
    assert_eq!(rom.fr[(0, 0)], 2.0);
    assert_eq!(rom.lr[(0, 0)], 7.0);
}

#[test]
fn random_bases_break_interpolation() {
    let sys = gen_random(50, 5, 1, 1, 19).unwrap();
    let shifts = init_shifts(4, 1, 1, (1e-1, 1e1), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let q = DMatrix::from_fn(50, 4, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let rom = assemble_reduced(&sys, &q, &q).unwrap();
    let worst = check_interpolation(&sys, &rom, &shifts)
        .unwrap()
        .iter()
        .filter_map(|r| r.zeroth)
        .fold(0.0, f64::max);
    assert!(worst > 1e-2, "{worst}");
}

#[test]
fn full_dimension_reduction_reproduces_transfer() {
    let sys = gen_random(6, 1, 1, 1, 20).unwrap();
    let out = irka_reduce(&sys, 5, &IrkaOptions::default()).unwrap();
    assert_eq!(out.rom.order(), 5);
    let psys = project_system(&sys, &split_projector(&build_projector(&sys).unwrap()).unwrap()).unwrap();
    let grid = FrequencyGrid::log_spaced(1e-2, 1e2, 20).unwrap();
    let oracle = projected_response(&psys, &grid).unwrap();
    let red = reduced_response(&out.rom, &grid).unwrap();
    let full = full_response(&sys, &grid).unwrap();
    for ((o, r), f) in oracle.values.iter().zip(&red.values).zip(&full.values) {
        let (o, r, f) = (o.as_ref().unwrap(), r.as_ref().unwrap(), f.as_ref().unwrap());
        assert!((o - r).norm() <= 1e-8 * o.norm());
        assert!((f - r).norm() <= 1e-8 * f.norm());
    }
}

#[test]
fn infinite_tolerance_stops_after_one_build() {
    let sys = gen_random(60, 6, 2, 2, 21).unwrap();
    let opts = IrkaOptions {
        tol: f64::INFINITY,
        ..IrkaOptions::default()
    };
    let out = irka_reduce(&sys, 6, &opts).unwrap();
    assert_eq!(out.trace.iterations.len(), 1);
    let initial = init_shifts(6, 2, 2, opts.band, opts.seed).unwrap();
    assert_eq!(out.shifts.sorted_alphas(), initial.sorted_alphas());
    for r in check_interpolation(&sys, &out.rom, &out.shifts).unwrap() {
        assert!(r.zeroth.unwrap() <= 1e-6);
        assert!(r.bitangential.unwrap() <= 1e-6);
    }
}

#[test]
fn assembled_model_equals_projected_oracle_reduction() {
    let sys = gen_random(100, 10, 2, 2, 22).unwrap();
    let opts = IrkaOptions {
        max_iter: 3,
        ..IrkaOptions::default()
    };
    let out = irka_reduce(&sys, 8, &opts).unwrap();
    let oracle = projected_reduction(&sys, &build_projector(&sys).unwrap(), &out.v, &out.w).unwrap();
    for (a, b) in [
        (&out.rom.mr, &oracle.mr),
        (&out.rom.dr, &oracle.dr),
        (&out.rom.kr, &oracle.kr),
        (&out.rom.fr, &oracle.fr),
        (&out.rom.lr, &oracle.lr),
    ] {
        assert!((a - b).amax() <= 1e-10 * b.amax());
    }
}

#[test]
fn lyapunov_solution_satisfies_its_equation() {
    let sys = random_stable_dense(20, 2, 2, 8).unwrap();
    let x = solve_lyapunov(&sys.a, &sys.e, &sys.b).unwrap();
    let res = &sys.a * &x * sys.e.transpose() + &sys.e * &x * sys.a.transpose() + &sys.b * sys.b.transpose();
    assert!(res.norm() <= 1e-8 * (&sys.b * sys.b.transpose()).norm());
    assert!((&x - x.transpose()).amax() <= 1e-12 * x.amax());
}

#[test]
fn full_order_truncation_is_exact() {
    let sys = random_stable_dense(12, 2, 2, 9).unwrap();
    let red = balanced_truncate(&sys, 12).unwrap();
    for w in FrequencyGrid::log_spaced(1e-2, 1e2, 20).unwrap().omegas() {
        let s = c(0.0, *w);
        let (t, tr) = (sys.transfer(s).unwrap(), red.reduced.transfer(s).unwrap());
        assert!((&t - tr).norm() <= 1e-8 * t.norm());
    }
}

#[test]
fn hankel_values_survive_similarity() {
    let sys = random_stable_dense(10, 2, 1, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = DMatrix::from_fn(10, 10, |i, j| if i == j { 2.0 } else { 0.0 } + rng.random_range(-0.3..0.3));
    let s = DMatrix::from_fn(10, 10, |i, j| if i == j { 1.5 } else { 0.0 } + rng.random_range(-0.3..0.3));
    let moved = DenseFirstOrderSystem::new(&s * &sys.e * &t, &s * &sys.a * &t, &s * &sys.b, &sys.c * &t).unwrap();
    let h0 = hankel_singular_values(&sys).unwrap();
    let h1 = hankel_singular_values(&moved).unwrap();
    for (a, b) in h0.iter().zip(&h1) {
        assert!((a - b).abs() <= 1e-10 * h0[0]);
    }
}

#[test]
fn error_sigmas_obey_triangle_inequality() {
    let sys = gen_random(40, 4, 2, 2, 23).unwrap();
    let out = irka_reduce(
        &sys,
        4,
        &IrkaOptions {
            max_iter: 5,
            ..IrkaOptions::default()
        },
    )
    .unwrap();
    let grid = FrequencyGrid::log_spaced(1e-2, 1e2, 40).unwrap();
    let full = full_response(&sys, &grid).unwrap();
    let red = reduced_response(&out.rom, &grid).unwrap();
    let curves = error_curves(&full, &red).unwrap();
    for i in 0..grid.len() {
        let (a, b, e) = (full.sigma_max[i].unwrap(), red.sigma_max[i].unwrap(), curves.absolute[i].unwrap());
        let slack = 1e-12 * (a + b);
        assert!(e <= a + b + slack);
        assert!(e + slack >= (a - b).abs());
    }
}

#[test]
fn small_tcom_is_well_posed() {
    let sys = gen_tcom(&TcomParams::new(3, 2)).unwrap();
    assert_eq!(sys.n1(), 10);
    assert_eq!(constraint_rank(&sys.g, RANK_DROP_TOL), 2);
    let t = full_transfer(&SaddleAssembler::new(&sys).unwrap(), c(0.0, 1.0)).unwrap();
    assert!(t.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
}
