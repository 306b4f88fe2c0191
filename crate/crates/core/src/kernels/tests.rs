use super::*;
use crate::gates::{ChannelOp, GateKind};
use crate::linalg::random_unitary;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> PureState<f64> {
    let v: Vec<C64> = (0..1usize << n).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    PureState::from_amplitudes(v.into_iter().map(|z| z / norm).collect()).unwrap()
}

fn random_positions(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::new();
    while out.len() < m {
        let p = rng.gen_range(1..=n);
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Explicit `2^n x 2^n` matrix of an operator by tensor embedding.
fn embed(m: &Matrix, positions: &[usize], n: usize) -> Matrix {
    let mask: usize = positions.iter().map(|p| 1usize << (p - 1)).sum();
    let local = |k: usize| -> usize { positions.iter().enumerate().map(|(i, p)| ((k >> (p - 1)) & 1) << i).sum() };
    Matrix::from_fn(
        1 << n,
        |r, col| {
            if r & !mask != col & !mask {
                C64::new(0.0, 0.0)
            } else {
                m[(local(r), local(col))]
            }
        },
    )
}

fn random_dm(n: usize, rng: &mut ChaCha8Rng) -> MixedState<f64> {
    // Mixture of three random pure states.
    let dim = 1usize << n;
    let mut acc = alloc::vec![c(0.0, 0.0); dim * dim];
    let weights = [0.5, 0.3, 0.2];
    for w in weights {
        let psi = random_state(n, rng);
        let dm = MixedState::from_pure(&psi).unwrap();
        for (a, b) in acc.iter_mut().zip(dm.entries()) {
            *a += b * w;
        }
    }
    MixedState::from_entries(acc).unwrap()
}

fn dense_of(dm: &MixedState<f64>) -> Matrix {
    Matrix::from_fn(dm.dim(), |r, col| dm.entry(r, col))
}

#[test]
fn naive_hadamard_and_cnot() {
    let mut s = PureState::<f64>::new(1).unwrap();
    apply_gate_naive(&mut s, &GateOp::h(1)).unwrap();
    assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((s.amplitudes()[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);

    let mut s = PureState::from_amplitudes(alloc::vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    apply_gate_naive(&mut s, &GateOp::cnot(1, 2).unwrap()).unwrap();
    assert_eq!(s.amplitudes()[3], c(1.0, 0.0));
    assert_eq!(s.amplitudes()[1], c(0.0, 0.0));

    let mut s = PureState::<f64>::new(2).unwrap();
    assert!(matches!(apply_gate_naive(&mut s, &GateOp::x(3)), Err(Error::Index { index: 3, .. })));
    assert!(matches!(
        apply_gate_fast(&mut s, &GateOp::x(3), &ThreadConfig::serial()),
        Err(Error::Index { index: 3, .. })
    ));
}

#[test]
fn fast_matches_naive_in_each_aggregation_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = ThreadConfig::serial();
    for targets in [[2usize, 9], [1, 2], [6, 11], [9, 2], [4, 5], [14, 1]] {
        let u = GateOp::new(&targets, random_unitary(4, &mut rng)).unwrap();
        let psi = random_state(14, &mut rng);
        let mut a = psi.clone();
        let mut b = psi.clone();
        apply_gate_naive(&mut a, &u).unwrap();
        apply_gate_fast(&mut b, &u, &cfg).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12, "{targets:?}");
    }
}

#[test]
fn identity_is_bitwise_noop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let psi = random_state(6, &mut rng);
    let mut s = psi.clone();
    apply_gate_fast(&mut s, &GateOp::new(&[2, 5], Matrix::identity(4)).unwrap(), &ThreadConfig::serial()).unwrap();
    assert_eq!(s, psi);
}

#[test]
fn all_gate_widths_and_structures_match_naive() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = ThreadConfig::new(3).with_min_work(0);
    for n in 1..=10 {
        for _ in 0..6 {
            let m = rng.gen_range(1..=3.min(n));
            let positions = random_positions(n, m, &mut rng);
            let gate = match rng.gen_range(0..3) {
                0 => GateOp::new(&positions, random_unitary(1 << m, &mut rng)).unwrap(),
                1 => {
                    let kind = [GateKind::X, GateKind::Z, GateKind::S, GateKind::T, GateKind::H, GateKind::Y]
                        [rng.gen_range(0..6)];
                    GateOp::standard(kind, &positions[..1]).unwrap()
                }
                _ if m >= 2 => {
                    let kind = [GateKind::Cnot, GateKind::Cz, GateKind::Swap, GateKind::ISwap][rng.gen_range(0..4)];
                    GateOp::standard(kind, &positions[..2]).unwrap()
                }
                _ => GateOp::rz(positions[0], rng.gen(), false),
            };
            let psi = random_state(n, &mut rng);
            let mut a = psi.clone();
            let mut b = psi.clone();
            apply_gate_naive(&mut a, &gate).unwrap();
            apply_gate_fast(&mut b, &gate, &cfg).unwrap();
            assert!(a.max_abs_diff(&b) <= 1e-12, "n={n} gate={gate:?}");
        }
    }
}

#[test]
fn threads_give_identical_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 16;
    let gates: Vec<GateOp> = (0..40)
        .map(|_| {
            let m = rng.gen_range(1..=3);
            let p = random_positions(n, m, &mut rng);
            GateOp::new(&p, random_unitary(1 << m, &mut rng)).unwrap()
        })
        .collect();
    let psi = random_state(n, &mut rng);
    let run = |threads: usize| {
        let cfg = ThreadConfig::new(threads).with_min_work(0);
        let mut s = psi.clone();
        for g in &gates {
            apply_gate_fast(&mut s, g, &cfg).unwrap();
        }
        s
    };
    let reference = run(1);
    for t in [2, 4, 8] {
        assert!(reference.max_abs_diff(&run(t)) <= 1e-12);
    }
}

#[test]
fn norm_is_preserved_over_long_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8;
    let mut s = PureState::<f64>::new(n).unwrap();
    let cfg = ThreadConfig::serial();
    for _ in 0..1000 {
        let m = rng.gen_range(1..=2);
        let p = random_positions(n, m, &mut rng);
        apply_gate_fast(&mut s, &GateOp::new(&p, random_unitary(1 << m, &mut rng)).unwrap(), &cfg).unwrap();
    }
    assert!((s.norm() - 1.0).abs() <= 1e-10);
}

#[test]
fn disjoint_gates_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = ThreadConfig::serial();
    for _ in 0..20 {
        let p = random_positions(7, 2, &mut rng);
        let a = GateOp::new(&[p[0]], random_unitary(2, &mut rng)).unwrap();
        let b = GateOp::new(&[p[1]], random_unitary(2, &mut rng)).unwrap();
        let psi = random_state(7, &mut rng);
        let mut s1 = psi.clone();
        let mut s2 = psi.clone();
        apply_gate_fast(&mut s1, &a, &cfg).unwrap();
        apply_gate_fast(&mut s1, &b, &cfg).unwrap();
        apply_gate_fast(&mut s2, &b, &cfg).unwrap();
        apply_gate_fast(&mut s2, &a, &cfg).unwrap();
        assert!(s1.max_abs_diff(&s2) <= 1e-12);
    }
}

#[test]
fn embedded_unitary_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = ThreadConfig::serial();
    for n in 1..=6 {
        let mut total = Matrix::identity(1 << n);
        let mut s = PureState::<f64>::new(n).unwrap();
        for _ in 0..12 {
            let m = rng.gen_range(1..=3.min(n));
            let p = random_positions(n, m, &mut rng);
            let g = GateOp::new(&p, random_unitary(1 << m, &mut rng)).unwrap();
            total = &embed(g.matrix(), &p, n) * &total;
            apply_gate_fast(&mut s, &g, &cfg).unwrap();
        }
        let mut e0 = alloc::vec![c(0.0, 0.0); 1 << n];
        e0[0] = c(1.0, 0.0);
        let expect = total.apply_vec(&e0);
        for (a, b) in s.amplitudes().iter().zip(&expect) {
            assert!((a - b).norm() <= 1e-10);
        }
    }
}

#[test]
fn depolarizing_and_phase_damping_on_density_matrices() {
    let cfg = ThreadConfig::serial();
    let mut dm = MixedState::<f64>::new(1).unwrap();
    apply_channel(&mut dm, &ChannelOp::depolarizing(1, 1.0).unwrap(), &cfg).unwrap();
    let expect = [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)];
    for (a, b) in dm.entries().iter().zip(expect) {
        assert!((a - b).norm() < 1e-15);
    }

    let gamma = 0.36;
    let plus = PureState::from_amplitudes(alloc::vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap();
    let mut dm = MixedState::from_pure(&plus).unwrap();
    apply_channel(&mut dm, &ChannelOp::phase_damping(1, gamma).unwrap(), &cfg).unwrap();
    let off = 0.5 * (1.0 - gamma).sqrt();
    assert!((dm.entry(0, 1) - c(off, 0.0)).norm() < 1e-15);
    assert!((dm.entry(1, 0) - c(off, 0.0)).norm() < 1e-15);
    assert!((dm.entry(0, 0) - c(0.5, 0.0)).norm() < 1e-15);

    let mut dm = MixedState::<f64>::new(2).unwrap();
    assert!(matches!(
        apply_channel(&mut dm, &ChannelOp::depolarizing(3, 0.1).unwrap(), &cfg),
        Err(Error::Index { index: 3, num_qubits: 2 })
    ));
}

#[test]
fn amplitude_damping_empties_excited_state() {
    let mut dm = MixedState::<f64>::new(1).unwrap();
    let cfg = ThreadConfig::serial();
    apply_gate_mixed(&mut dm, &GateOp::x(1), &cfg).unwrap();
    assert_eq!(dm.entry(1, 1), c(1.0, 0.0));
    apply_channel(&mut dm, &ChannelOp::amplitude_damping(1, 1.0).unwrap(), &cfg).unwrap();
    assert!((dm.entry(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
    assert!(dm.entry(1, 1).norm() < 1e-15);
}

#[test]
fn hadamard_on_density_matrix() {
    let mut dm = MixedState::<f64>::new(1).unwrap();
    apply_gate_mixed(&mut dm, &GateOp::h(1), &ThreadConfig::serial()).unwrap();
    for z in dm.entries() {
        assert!((z - c(0.5, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn mixed_gates_match_dense_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = ThreadConfig::serial();
    let n = 3;
    for _ in 0..10 {
        let m = rng.gen_range(1..=3);
        let p = random_positions(n, m, &mut rng);
        let g = GateOp::new(&p, random_unitary(1 << m, &mut rng)).unwrap();
        let mut dm = random_dm(n, &mut rng);
        let full = embed(g.matrix(), &p, n);
        let expect = &(&full * &dense_of(&dm)) * &full.adjoint();
        apply_gate_mixed(&mut dm, &g, &cfg).unwrap();
        assert!(dense_of(&dm).max_abs_diff(&expect) <= 1e-12);
    }
}

#[test]
fn channels_match_kraus_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = ThreadConfig::serial();
    let n = 3;
    let mut dm = MixedState::<f64>::new(n).unwrap();
    let mut dense = dense_of(&dm);
    for step in 0..30 {
        if step % 2 == 0 {
            let p = random_positions(n, 2, &mut rng);
            let g = GateOp::new(&p, random_unitary(4, &mut rng)).unwrap();
            let full = embed(g.matrix(), &p, n);
            dense = &(&full * &dense) * &full.adjoint();
            apply_gate_mixed(&mut dm, &g, &cfg).unwrap();
        } else {
            let q = rng.gen_range(1..=n);
            let s: f64 = rng.gen();
            let ch = match rng.gen_range(0..3) {
                0 => ChannelOp::amplitude_damping(q, s),
                1 => ChannelOp::phase_damping(q, s),
                _ => ChannelOp::depolarizing(q, s),
            }
            .unwrap();
            let mut next = Matrix::zeros(1 << n);
            for k in ch.kraus() {
                let full = embed(k, &[q], n);
                next = &next + &(&(&full * &dense) * &full.adjoint());
            }
            dense = next;
            apply_channel(&mut dm, &ch, &cfg).unwrap();
        }
        assert!(dense_of(&dm).max_abs_diff(&dense) <= 1e-12);
    }
}

#[test]
fn channel_sequences_preserve_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = ThreadConfig::serial();
    let n = 4;
    let mut dm = random_dm(n, &mut rng);
    for _ in 0..100 {
        let q = rng.gen_range(1..=n);
        let s: f64 = rng.gen();
        let ch = match rng.gen_range(0..3) {
            0 => ChannelOp::amplitude_damping(q, s),
            1 => ChannelOp::phase_damping(q, s),
            _ => ChannelOp::depolarizing(q, s),
        }
        .unwrap();
        apply_channel(&mut dm, &ch, &cfg).unwrap();
    }
    assert!((dm.trace() - c(1.0, 0.0)).norm() <= 1e-10);
    assert!(dm.hermiticity_error() <= 1e-10);
}

#[test]
fn single_precision_tracks_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = ThreadConfig::serial();
    let mut d = PureState::<f64>::new(9).unwrap();
    let mut s = PureState::<f32>::new(9).unwrap();
    for _ in 0..50 {
        let p = random_positions(9, 2, &mut rng);
        let g = GateOp::new(&p, random_unitary(4, &mut rng)).unwrap();
        apply_gate_fast(&mut d, &g, &cfg).unwrap();
        apply_gate_fast(&mut s, &g, &cfg).unwrap();
    }
    for (a, b) in d.amplitudes().iter().zip(s.amplitudes()) {
        assert!((a.re - b.re as f64).abs() < 1e-5 && (a.im - b.im as f64).abs() < 1e-5);
    }
}

#[test]
fn reverse_step_matches_separate_passes() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = ThreadConfig::new(2).with_min_work(0);
    for (n, p) in [
        (10usize, alloc::vec![3usize]),
        (10, alloc::vec![7, 2]),
        (3, alloc::vec![1, 3]),
        (12, alloc::vec![1, 5, 9, 12]),
    ] {
        let dim = 1 << p.len();
        let a = random_unitary(dim, &mut rng);
        let b = random_unitary(dim, &mut rng);
        let mut d = random_unitary(dim, &mut rng);
        if p.len() == 1 {
            d = Matrix::from_rows(&[[c(0.0, 0.0), c(0.3, -0.1)], [c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        }
        let phi0 = random_state(n, &mut rng);
        let psi0 = random_state(n, &mut rng);
        let mut phi = phi0.clone();
        let mut psi = psi0.clone();
        let g = reverse_step(phi.amplitudes_mut(), &a, psi.amplitudes_mut(), &b, &[d.clone()], n, &p, &cfg).unwrap();

        let mut t = phi0.clone();
        apply_matrix_naive(t.amplitudes_mut(), n, &p, &d).unwrap();
        let expect = psi0.inner(&t);
        let mut phi_ref = phi0.clone();
        apply_matrix_naive(phi_ref.amplitudes_mut(), n, &p, &a).unwrap();
        let mut psi_ref = psi0.clone();
        apply_matrix_naive(psi_ref.amplitudes_mut(), n, &p, &b).unwrap();

        assert!(phi.max_abs_diff(&phi_ref) <= 1e-12);
        assert!(psi.max_abs_diff(&psi_ref) <= 1e-12);
        assert!((g[0] - expect).norm() <= 1e-12);
    }
}
