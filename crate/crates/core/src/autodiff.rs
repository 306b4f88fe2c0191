//! Reverse-mode gradients of expectation-value losses.
//!
//! The loss is `L = <psi0| C† H C |psi0>` for pure states and
//! `L = tr(H C(rho0))` for density matrices, with `H` replaced by its
//! Hermitian part (real parts of the coefficients). Instead of caching the
//! intermediate states of the forward pass, the reverse sweep recovers them
//! by applying gate inverses, so only two full-size states are alive:
//!
//! ```text
//! phi <- C psi0;  psi <- H phi
//! for each gate, last to first:
//!     dL/dtheta = 2 Re <psi| dU/dtheta U^-1 |phi>
//!     phi <- U^-1 phi
//!     psi <- U^-1 psi
//! ```
//!
//! Consecutive gates on identical positions share one pass over the two
//! states: their product is inverted at once, and the derivative overlaps of
//! the earlier gates are taken against the later state through conjugated
//! generators.
//!
//! Density matrices run the same sweep on their `2n`-qubit pseudo pure state
//! with superoperators `U ⊗ conj(U)` for gates and the Kraus superoperator for
//! channels. A channel is not unitary, so `phi` is stepped back with the
//! matrix inverse of its superoperator and `psi` with its adjoint.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{Circuit, Element};
use crate::gates::GateOp;
use crate::kernels::{apply_channel, apply_gate_fast, apply_gate_mixed, reverse_step, ThreadConfig};
use crate::linalg::Matrix;
use crate::observables::{
    apply_hermitian_part, hermitian_expectation, hermitian_expectation_mixed, vectorized_hermitian_part, PauliOperator,
};
use crate::statespace::{MixedState, PureState};
use crate::{Error, Real, Result};

/// Condition number above which a channel superoperator counts as singular.
pub const MAX_CHANNEL_CONDITION: f64 = 1e12;

/// Loss value and one derivative per active parameter, in traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult {
    pub loss: f64,
    pub grads: Vec<f64>,
}

fn noiseless_gates(c: &Circuit, n: usize) -> Result<Vec<&GateOp>> {
    c.flatten()
        .into_iter()
        .map(|e| match e {
            Element::Gate(g) if g.max_position() > n => Err(Error::Index { index: g.max_position(), num_qubits: n }),
            Element::Gate(g) => Ok(g),
            _ => Err(Error::Type("pure-state losses need a noiseless circuit".into())),
        })
        .collect()
}

/// `dU/dtheta U^-1` for every active parameter, so that the derivative
/// overlap can be taken against the state after the gate.
fn active_generators(g: &GateOp) -> Vec<Matrix> {
    (0..g.params().len()).filter(|&i| g.active()[i]).map(|i| g.generator_unchecked(i)).collect()
}

/// `Re <psi0| C† H C |psi0>`.
pub fn loss_pure<T: Real>(op: &PauliOperator, c: &Circuit, s0: &PureState<T>, cfg: &ThreadConfig) -> Result<f64> {
    let gates = noiseless_gates(c, s0.num_qubits())?;
    let mut phi = s0.clone();
    for g in gates {
        apply_gate_fast(&mut phi, g, cfg)?;
    }
    hermitian_expectation(op, &phi, cfg)
}

pub fn gradient_pure<T: Real>(
    op: &PauliOperator,
    c: &Circuit,
    s0: &PureState<T>,
    cfg: &ThreadConfig,
) -> Result<GradientResult> {
    gradient_pure_sweep(op, c, s0, cfg).map(|(r, _)| r)
}

/// Also returns the state recovered at the end of the reverse sweep.
pub(crate) fn gradient_pure_sweep<T: Real>(
    op: &PauliOperator,
    c: &Circuit,
    s0: &PureState<T>,
    cfg: &ThreadConfig,
) -> Result<(GradientResult, PureState<T>)> {
    let n = s0.num_qubits();
    let gates = noiseless_gates(c, n)?;
    let mut phi = s0.clone();
    for g in &gates {
        apply_gate_fast(&mut phi, g, cfg)?;
    }
    let mut psi = apply_hermitian_part(op, &phi, cfg)?;
    let loss = phi.inner(&psi).re;

    let mut grads = vec![0.0; c.num_active_parameters()];
    let mut end = grads.len();
    let mut stop = gates.len();
    while stop > 0 {
        // Consecutive gates on the same positions are stepped back together.
        let positions = gates[stop - 1].positions();
        let mut start = stop - 1;
        while start > 0 && gates[start - 1].positions() == positions {
            start -= 1;
        }
        let run = &gates[start..stop];

        // For the gate at j, `<psi_j|G|phi_j> = <psi|W G W†|phi>` with `W` the
        // product of the gates after j in the run.
        let mut after = Matrix::identity(run[0].matrix().dim());
        let mut ops = Vec::new();
        let mut counts = Vec::with_capacity(run.len());
        for g in run.iter().rev() {
            let gens = active_generators(g);
            counts.push(gens.len());
            let w_adj = after.adjoint();
            ops.extend(gens.iter().map(|gen| &(&after * gen) * &w_adj));
            after = &after * g.matrix();
        }
        let inv = if run.len() == 1 { run[0].inverse().matrix().clone() } else { after.adjoint() };
        let overlaps = reverse_step(phi.amplitudes_mut(), &inv, psi.amplitudes_mut(), &inv, &ops, n, positions, cfg)?;

        let mut next = overlaps.iter();
        for k in counts {
            for slot in &mut grads[end - k..end] {
                *slot = 2.0 * next.next().expect("one overlap per generator").re;
            }
            end -= k;
        }
        stop = start;
    }
    Ok((GradientResult { loss, grads }, phi))
}

fn check_mixed_fit(c: &Circuit, n: usize) -> Result<()> {
    match c.num_qubits() {
        m if m > n => Err(Error::Index { index: m, num_qubits: n }),
        _ => Ok(()),
    }
}

/// `tr(H C(rho0))`.
pub fn loss_mixed<T: Real>(op: &PauliOperator, c: &Circuit, dm0: &MixedState<T>, cfg: &ThreadConfig) -> Result<f64> {
    check_mixed_fit(c, dm0.num_qubits())?;
    let rho = c.applied(dm0, cfg)?;
    hermitian_expectation_mixed(op, &rho, cfg)
}

enum Step {
    Gate { positions: Vec<usize>, inv: Matrix, gens: Vec<Matrix> },
    Channel { positions: Vec<usize>, inv: Matrix, adjoint: Matrix },
}

/// With `S = U ⊗ conj(U)`, `dS/dtheta S^-1 = G ⊗ I + I ⊗ conj(G)` for `G = dU/dtheta U^-1`.
fn gate_step(g: &GateOp, n: usize) -> Step {
    let s = g.superoperator();
    let id = Matrix::identity(g.matrix().dim());
    let gens =
        active_generators(g).iter().map(|gen| &Matrix::kron(gen, &id) + &Matrix::kron(&id, &gen.conj())).collect();
    Step::Gate { positions: s.pseudo_positions(n), inv: s.matrix().adjoint(), gens }
}

pub fn gradient_mixed<T: Real>(
    op: &PauliOperator,
    c: &Circuit,
    dm0: &MixedState<T>,
    cfg: &ThreadConfig,
) -> Result<GradientResult> {
    let n = dm0.num_qubits();
    check_mixed_fit(c, n)?;
    let leaves = c.flatten();

    let mut steps = Vec::with_capacity(leaves.len());
    for (index, e) in leaves.iter().enumerate() {
        steps.push(match e {
            Element::Gate(g) => gate_step(g, n),
            Element::Channel(ch) => {
                let s = ch.superoperator();
                let (inv, condition) = s
                    .matrix()
                    .inverse_with_condition()
                    .ok_or(Error::NonInvertibleChannel { element: index, condition: f64::INFINITY })?;
                if condition.is_nan() || condition > MAX_CHANNEL_CONDITION {
                    return Err(Error::NonInvertibleChannel { element: index, condition });
                }
                Step::Channel { positions: s.pseudo_positions(n), inv, adjoint: s.matrix().adjoint() }
            }
            Element::Circuit(_) => unreachable!(),
        });
    }

    let mut rho = dm0.clone();
    for e in &leaves {
        match e {
            Element::Gate(g) => apply_gate_mixed(&mut rho, g, cfg)?,
            Element::Channel(ch) => apply_channel(&mut rho, ch, cfg)?,
            Element::Circuit(_) => unreachable!(),
        }
    }
    let mut psi = PureState::from_raw_unchecked(vectorized_hermitian_part::<T>(op, n, cfg)?)?;
    let mut phi = rho.into_pseudo_state();
    let loss = psi.inner(&phi).re;

    let mut grads = vec![0.0; c.num_active_parameters()];
    let mut end = grads.len();
    for step in steps.iter().rev() {
        match step {
            Step::Gate { positions, inv, gens } => {
                let overlaps =
                    reverse_step(phi.amplitudes_mut(), inv, psi.amplitudes_mut(), inv, gens, 2 * n, positions, cfg)?;
                let start = end - overlaps.len();
                for (slot, z) in grads[start..end].iter_mut().zip(&overlaps) {
                    *slot = z.re;
                }
                end = start;
            }
            Step::Channel { positions, inv, adjoint } => {
                reverse_step(phi.amplitudes_mut(), inv, psi.amplitudes_mut(), adjoint, &[], 2 * n, positions, cfg)?;
            }
        }
    }
    Ok(GradientResult { loss, grads })
}

/// Central differences `(L(theta + h e_j) - L(theta - h e_j)) / 2h` over the
/// active parameters. The circuit's parameters are restored afterwards.
pub fn finite_difference_gradient<F>(c: &mut Circuit, h: f64, mut loss: F) -> Result<Vec<f64>>
where
    F: FnMut(&Circuit) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let theta = c.active_parameters();
    let mut shifted = theta.clone();
    let mut grads = Vec::with_capacity(theta.len());
    let mut run = |c: &mut Circuit| -> Result<Vec<f64>> {
        for j in 0..theta.len() {
            shifted[j] = theta[j] + h;
            c.reset_parameters(&shifted)?;
            let up = loss(c)?;
            shifted[j] = theta[j] - h;
            c.reset_parameters(&shifted)?;
            let down = loss(c)?;
            shifted[j] = theta[j];
            grads.push((up - down) / (2.0 * h));
        }
        Ok(grads.clone())
    };
    let out = run(c);
    c.reset_parameters(&theta)?;
    out
}
