use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::network::{gen_lattice, gen_rgn, rgn_radius_for_degree, CouplingSpec, Graph, InputPreset, InputSpec};
use crate::scenario::network_problem;
use crate::sparse::{SparseMatrix, SparsityPattern};

fn problem_on(g: &Graph, n: usize, f: usize, preset: InputPreset, seed: u64) -> ControlProblem {
    network_problem(
        g,
        &CouplingSpec::new(n, seed),
        &InputSpec::all_nodes(g.node_count(), n, preset),
        f,
        seed + 1000,
    )
    .unwrap()
}

fn path(n: usize) -> Graph {
    Graph::new(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
}

/// Dense time-major `K_f` from explicit dense powers.
fn dense_k(p: &ControlProblem) -> DMatrix<f64> {
    let a = p.a.to_dense();
    let b = p.b.to_dense();
    let (nn, nm) = b.shape();
    let mut k = DMatrix::zeros(nn, nm * p.f);
    let mut power = DMatrix::identity(nn, nn);
    for j in 0..p.f {
        let col = (p.f - 1 - j) * nm;
        k.columns_mut(col, nm).copy_from(&(&power * &b));
        power = &a * power;
    }
    k
}

fn dense_pinv_solution(p: &ControlProblem) -> Vec<f64> {
    let k = dense_k(p);
    let a = p.a.to_dense();
    let mut af = DMatrix::identity(a.nrows(), a.nrows());
    for _ in 0..p.f {
        af = &a * af;
    }
    let rhs = DVector::from_vec(p.xd.clone()) - af * DVector::from_vec(p.x0.clone());
    let pinv = k.pseudo_inverse(1e-13).unwrap();
    (pinv * rhs).as_slice().to_vec()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn identity_problem(dim: usize, f: usize, x0: Vec<f64>, xd: Vec<f64>) -> ControlProblem {
    ControlProblem::uniform(SparseMatrix::identity(dim), SparseMatrix::identity(dim), f, x0, xd, 1, 1).unwrap()
}

#[test]
fn propagate_trivial_cases() {
    let p = ControlProblem::uniform(
        SparseMatrix::zeros(3, 3),
        SparseMatrix::identity(3),
        4,
        vec![1.0, 2.0, 3.0],
        vec![0.0; 3],
        1,
        1,
    )
    .unwrap();
    let u = InputSequence::zeros(p.sequence_len(), SequenceOrder::TimeMajor);
    assert_eq!(propagate(&p, &u).unwrap(), vec![0.0; 3]);

    let p = problem_on(&path(4), 2, 3, InputPreset::B1, 5);
    let mut want = p.x0.clone();
    for _ in 0..3 {
        want = p.a.matvec(&want).unwrap();
    }
    assert_eq!(propagate(&p, &u_zero(&p)).unwrap(), want);
    assert!(propagate(&p, &InputSequence::time_major(vec![0.0; 3])).is_err());
}

fn u_zero(p: &ControlProblem) -> InputSequence {
    InputSequence::zeros(p.sequence_len(), SequenceOrder::NodeMajor)
}

#[test]
fn propagate_matches_dense_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = gen_lattice(3, 2).unwrap();
    let p = problem_on(&g, 2, 4, InputPreset::B2, 2);
    let u: Vec<f64> = (0..p.sequence_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut af = DMatrix::identity(p.state_dim(), p.state_dim());
    for _ in 0..p.f {
        af = p.a.to_dense() * af;
    }
    let want = af * DVector::from_vec(p.x0.clone()) + dense_k(&p) * DVector::from_vec(u.clone());
    let got = propagate(&p, &InputSequence::time_major(u)).unwrap();
    for (a, b) in got.iter().zip(want.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn controllability_matrix_cases() {
    let p = problem_on(&path(3), 2, 1, InputPreset::B1, 3);
    assert_eq!(controllability_matrix(&p).unwrap(), p.b);

    let p = identity_problem(2, 3, vec![0.0; 2], vec![1.0; 2]);
    let k = controllability_matrix(&p).unwrap().to_dense();
    let mut want = DMatrix::zeros(2, 6);
    for j in 0..3 {
        want.view_mut((0, 2 * j), (2, 2)).fill_with_identity();
    }
    assert_eq!(k, want);

    // Path, f = 2: block (i, j) of [A B, B] is nonzero only within distance 1.
    let g = path(5);
    let p = problem_on(&g, 1, 2, InputPreset::B1, 4);
    let k = controllability_matrix(&p).unwrap();
    assert!((k.to_dense() - dense_k(&p)).amax() < 1e-14);
    for (r, c, v) in k.iter() {
        let node_col = c % 5;
        let d = g.bfs_distances(r).unwrap()[node_col];
        assert!(v == 0.0 || d <= 1, "entry ({r},{c}) at distance {d}");
    }
}

#[test]
fn permutation_examples() {
    let id = permutation_map(1, 3, 4);
    assert!((0..id.len()).all(|t| id.node_major_index(t) == t));
    let id = permutation_map(5, 2, 1);
    assert!((0..id.len()).all(|t| id.node_major_index(t) == t));

    // (u1(0), u2(0), u1(1), u2(1)) -> (u1(0), u1(1), u2(0), u2(1))
    let p = permutation_map(2, 1, 2);
    assert_eq!(p.apply(&[10.0, 20.0, 11.0, 21.0]), vec![10.0, 11.0, 20.0, 21.0]);
}

proptest! {
    #[test]
    fn permutation_round_trips(n in 1usize..20, m in 1usize..5, f in 1usize..8, seed in any::<u64>()) {
        let p = permutation_map(n, m, f);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n * m * f).map(|_| rng.gen()).collect();
        prop_assert_eq!(p.apply_inverse(&p.apply(&v)), v.clone());
        let mut sorted: Vec<usize> = (0..p.len()).map(|t| p.node_major_index(t)).collect();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..p.len()).collect::<Vec<_>>());
    }
}

#[test]
fn ordering_consistency_with_node_major_k() {
    let g = gen_lattice(3, 3).unwrap();
    let p = problem_on(&g, 2, 3, InputPreset::B1, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u: Vec<f64> = (0..p.sequence_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ubar = p.permutation().apply(&u);
    let lhs = controllability_matrix(&p).unwrap().matvec(&u).unwrap();
    let rhs = node_major_controllability(&p).unwrap().matvec(&ubar).unwrap();
    assert!(rel_diff(&lhs, &rhs) < 1e-14);
}

#[test]
fn gramian_cases() {
    let p = ControlProblem::uniform(
        SparseMatrix::zeros(4, 4),
        SparseMatrix::identity(4),
        3,
        vec![0.0; 4],
        vec![1.0; 4],
        1,
        1,
    )
    .unwrap();
    assert_eq!(gramian(&p).unwrap().to_dense(), DMatrix::identity(4, 4));
    let p = identity_problem(3, 3, vec![0.0; 3], vec![1.0; 3]);
    assert_eq!(gramian(&p).unwrap().to_dense(), DMatrix::identity(3, 3) * 3.0);

    for (seed, g) in [(1, gen_lattice(3, 3).unwrap()), (2, path(6))] {
        let p = problem_on(&g, 2, 3, InputPreset::B2, seed);
        let w = gramian(&p).unwrap();
        let k = dense_k(&p);
        assert!((w.to_dense() - &k * k.transpose()).amax() < 1e-12);
        assert!(w.asymmetry() <= 1e-12 * w.max_abs());
    }
}

#[test]
fn apriori_pattern_cases() {
    let p = problem_on(&path(4), 2, 2, InputPreset::B1, 3);
    let pat0 = apriori_pattern(&p, 0).unwrap();
    assert_eq!(pat0, SparsityPattern::identity(8));

    let zero_a = ControlProblem::uniform(
        SparseMatrix::zeros(6, 6),
        SparseMatrix::identity(6),
        2,
        vec![0.0; 6],
        vec![1.0; 6],
        2,
        2,
    )
    .unwrap();
    let base = apriori_pattern(&zero_a, 0).unwrap();
    for q in 1..4 {
        assert_eq!(apriori_pattern(&zero_a, q).unwrap(), base);
    }

    // Symbolic oracle: boolean powers of the block pattern of A.
    let g = path(5);
    let p = problem_on(&g, 2, 2, InputPreset::B1, 9);
    let pa = p.a.to_dense().map(|v| (v != 0.0) as u8 as f64);
    let bb = p.b.to_dense() * p.b.to_dense().transpose();
    let mut acc = DMatrix::identity(10, 10) + bb.map(|v| (v != 0.0) as u8 as f64);
    acc += &pa * bb.map(|v| (v != 0.0) as u8 as f64) * pa.transpose();
    let want = SparsityPattern::from_positions(
        10,
        10,
        (0..10).flat_map(|r| (0..10).map(move |c| (r, c))).filter(|&(r, c)| acc[(r, c)] != 0.0),
    )
    .unwrap();
    assert_eq!(apriori_pattern(&p, 1).unwrap(), want);
}

#[test]
fn centralized_cases() {
    let x = vec![0.3, -0.2];
    let p = identity_problem(2, 3, x.clone(), x);
    let u = centralized_control(&p, 1e-12).unwrap();
    assert!(u.values.iter().all(|v| *v == 0.0));

    let v = vec![1.0, -2.0, 0.5];
    let p = identity_problem(3, 2, vec![0.0; 3], v.clone());
    let u = centralized_control(&p, 1e-14).unwrap();
    let tm = u.to_order(SequenceOrder::TimeMajor, &p.permutation()).unwrap();
    for k in 0..2 {
        for (a, b) in tm.step(k, 3).iter().zip(&v) {
            assert!((a - b / 2.0).abs() < 1e-14);
        }
    }

    let p = problem_on(&gen_lattice(3, 2).unwrap(), 2, 3, InputPreset::B1, 17);
    let u = centralized_control(&p, 1e-13).unwrap();
    let tm = u.to_order(SequenceOrder::TimeMajor, &p.permutation()).unwrap();
    assert!(rel_diff(&tm.values, &dense_pinv_solution(&p)) < 1e-9);
    assert!(control_error(&p, &u).unwrap() < 1e-10);
}

#[test]
fn centralized_fails_when_uncontrollable() {
    // A = 0, a single actuated channel of two: W is singular.
    let b = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0)]).unwrap();
    let p = ControlProblem::uniform(SparseMatrix::zeros(2, 2), b, 3, vec![0.0; 2], vec![1.0; 2], 2, 2).unwrap();
    assert!(centralized_control(&p, 1e-12).is_err());
    // The localized controller is still defined.
    assert!(build_localized(&p, 1).is_ok());
}

#[test]
fn localized_trivial_case() {
    let p = ControlProblem::uniform(
        SparseMatrix::zeros(6, 6),
        SparseMatrix::identity(6),
        2,
        vec![0.5; 6],
        vec![1.0; 6],
        2,
        2,
    )
    .unwrap();
    let c = build_localized(&p, 2).unwrap();
    assert_eq!(c.r_matrix.count_nonzero(), 0);
    let kt = node_major_controllability(&p).unwrap().transpose();
    assert_eq!(c.q_matrix.to_dense(), kt.to_dense());
}

#[test]
fn localized_full_pattern_equals_centralized() {
    let p = problem_on(&gen_lattice(3, 3).unwrap(), 2, 3, InputPreset::B1, 31);
    let n = p.state_dim();
    let c = build_localized_with_pattern(&p, 0, &SparsityPattern::full(n, n)).unwrap();
    let local = c.apply(&p.x0, &p.xd).unwrap();
    let central = centralized_control(&p, 1e-14).unwrap();
    assert!(rel_diff(&local.values, &central.values) < 1e-9);

    // Large enough q densifies the a-priori pattern on a small graph.
    let c = build_localized(&p, 4).unwrap();
    assert!(c.x_fill_in > 99.9);
    let local = c.apply(&p.x0, &p.xd).unwrap();
    assert!(rel_diff(&local.values, &central.values) < 1e-9);
}

#[test]
fn localized_path_respects_distance_three() {
    let g = path(12);
    let p = problem_on(&g, 3, 2, InputPreset::B1, 41);
    let c = build_localized(&p, 1).unwrap();
    for i in 0..12 {
        let d = g.bfs_distances(i).unwrap();
        for b in c.q_blocks().node(i) {
            if d[b.col_node] > 3 {
                assert_eq!(b.norm, 0.0);
            }
        }
    }
    assert_eq!(c.distance_violations(&g).unwrap().count(), 0);
}

#[test]
fn apply_matches_full_products() {
    let p = problem_on(&gen_lattice(4, 3).unwrap(), 3, 3, InputPreset::B2, 51);
    let c = build_localized(&p, 1).unwrap();
    let zero = vec![0.0; p.state_dim()];
    assert!(c.apply(&zero, &zero).unwrap().values.iter().all(|v| *v == 0.0));
    let got = c.apply(&p.x0, &p.xd).unwrap();
    let qx = c.q_matrix.matvec(&p.xd).unwrap();
    let rx = c.r_matrix.matvec(&p.x0).unwrap();
    let want: Vec<f64> = qx.iter().zip(&rx).map(|(a, b)| a - b).collect();
    assert!(rel_diff(&got.values, &want) < 1e-14);
    assert!(c.apply(&zero[1..], &zero).is_err());
}

#[test]
fn effective_sins_threshold_behaviour() {
    let g = gen_lattice(15, 15).unwrap();
    let p = problem_on(&g, 3, 3, InputPreset::B1, 61);
    let c = build_localized(&p, 2).unwrap();
    let same = c.effective_sins(0.0).unwrap();
    assert_eq!(same.sins_desired, c.sins_desired);
    assert_eq!(same.sins_initial, c.sins_initial);

    let none = c.effective_sins(f64::INFINITY).unwrap();
    assert!(none.sins_desired.iter().all(Vec::is_empty));
    assert!(none.apply(&p.x0, &p.xd).unwrap().values.iter().all(|v| *v == 0.0));
    assert!(c.effective_sins(-1.0).is_err());

    let mid = c.effective_sins(1e-6).unwrap();
    let coarse = c.effective_sins(1e-3).unwrap();
    let center = 7 * 15 + 7;
    let sizes: Vec<usize> = [&c, &mid, &coarse].iter().map(|x| x.sins_desired[center].len()).collect();
    assert!(sizes[0] >= sizes[1] && sizes[1] >= sizes[2] && sizes[0] > sizes[2], "{sizes:?}");
    for i in 0..g.node_count() {
        assert!(coarse.sins_desired[i].iter().all(|j| mid.sins_desired[i].contains(j)));
        assert!(mid.sins_desired[i].iter().all(|j| c.sins_desired[i].contains(j)));
        assert!(coarse.sins_initial[i].iter().all(|j| mid.sins_initial[i].contains(j)));
    }

    let u0 = c.apply(&p.x0, &p.xd).unwrap();
    let u6 = mid.apply(&p.x0, &p.xd).unwrap();
    assert!(rel_diff(&u6.values, &u0.values) < 1e-3);
}

#[test]
fn control_error_cases() {
    let p = ControlProblem::uniform(
        SparseMatrix::zeros(2, 2),
        SparseMatrix::identity(2),
        2,
        vec![1.0, 0.0],
        vec![0.0, 2.0],
        1,
        1,
    )
    .unwrap();
    let e = control_error(&p, &u_zero(&p)).unwrap();
    assert!((e - 2.0 / 5f64.sqrt()).abs() < 1e-15);
    let same = p.with_states(vec![1.0; 2], vec![1.0; 2]).unwrap();
    assert!(matches!(control_error(&same, &u_zero(&same)), Err(crate::Error::UndefinedError)));
}

#[test]
fn controllability_index_cases() {
    let p = problem_on(&path(4), 2, 3, InputPreset::B1, 2);
    assert_eq!(controllability_index(&p, 5).unwrap(), 1);

    let b = SparseMatrix::from_triplets(3, 3, [(0, 0, 1.0)]).unwrap();
    let p = ControlProblem::uniform(SparseMatrix::zeros(3, 3), b, 1, vec![0.0; 3], vec![0.0; 3], 1, 1).unwrap();
    assert!(matches!(controllability_index(&p, 6), Err(crate::Error::NotControllable { rank: 1, .. })));

    // x1 <- u, x2 <- x1, x3 <- x2.
    let a = SparseMatrix::from_triplets(3, 3, [(1, 0, 1.0), (2, 1, 1.0)]).unwrap();
    let b = SparseMatrix::from_triplets(3, 3, [(0, 0, 1.0)]).unwrap();
    let p = ControlProblem::uniform(a, b, 1, vec![0.0; 3], vec![0.0; 3], 1, 1).unwrap();
    assert_eq!(controllability_index(&p, 6).unwrap(), 3);
}

#[test]
fn terminal_exactness_and_minimum_energy() {
    for seed in 0..6u64 {
        let g = if seed % 2 == 0 { gen_lattice(3, 3).unwrap() } else { path(7) };
        let preset = [InputPreset::B1, InputPreset::B2][seed as usize % 2];
        let p = problem_on(&g, 2, 4, preset, 70 + seed);
        let Ok(u) = centralized_control(&p, 1e-12) else { continue };
        assert!(control_error(&p, &u).unwrap() <= 1e-8);

        // Every exact solution is u + (null space of K) z.
        let k = node_major_controllability(&p).unwrap().to_dense();
        let svd = k.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let rank = numerical_rank(&k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = u.norm();
        for _ in 0..100 {
            let mut alt = DVector::from_vec(u.values.clone());
            for r in rank..vt.nrows() {
                alt += vt.row(r).transpose() * rng.gen_range(-1.0..1.0);
            }
            let kv = &k * &alt;
            let ku = &k * DVector::from_vec(u.values.clone());
            assert!((kv - ku).amax() < 1e-9);
            assert!(base <= alt.norm() + 1e-12);
        }
    }
}

#[test]
fn sin_distance_bounds_on_rgn() {
    let g = gen_rgn(40, rgn_radius_for_degree(40, 4.0), 3).unwrap();
    for (q, f) in [(0, 2), (1, 3), (2, 2)] {
        let p = problem_on(&g, 3, f, InputPreset::B1, 90 + q as u64);
        let c = build_localized(&p, q).unwrap();
        assert_eq!(c.distance_violations(&g).unwrap(), SinViolations::default());
    }
}

#[test]
fn export_writes_three_files() {
    let p = problem_on(&path(4), 1, 2, InputPreset::B1, 3);
    let c = build_localized(&p, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    c.export(dir.path()).unwrap();
    let q = crate::sparse::read_matrix_market(dir.path().join("Q.mtx")).unwrap();
    assert_eq!(q, c.q_matrix);
    let listing = std::fs::read_to_string(dir.path().join("sins.txt")).unwrap();
    assert_eq!(listing.lines().count(), 5);
    assert!(listing.lines().nth(1).unwrap().starts_with("0: 0 1"));
}
