//! Circuits as ordered lists of gates, channels and nested circuits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
use num_traits::{Float, Zero};
use rand_core::RngCore;

use crate::gates::{ChannelOp, GateOp};
use crate::kernels::{apply_channel, apply_gate_fast, apply_gate_mixed, ThreadConfig};
use crate::linalg::{uniform01, Matrix};
use crate::statespace::{MixedState, PureState};
use crate::{Error, Real, Result};

/// One step of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Gate(GateOp),
    Channel(ChannelOp),
    Circuit(Circuit),
}

impl From<GateOp> for Element {
    fn from(g: GateOp) -> Self {
        Element::Gate(g)
    }
}

impl From<ChannelOp> for Element {
    fn from(c: ChannelOp) -> Self {
        Element::Channel(c)
    }
}

impl From<Circuit> for Element {
    fn from(c: Circuit) -> Self {
        Element::Circuit(c)
    }
}

/// Elements in application order: the first element acts first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    elements: Vec<Element>,
}

/// Result of a projective single-qubit measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub outcome: u8,
    pub probability: f64,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_elements(elements: Vec<Element>) -> Self {
        Circuit { elements }
    }

    pub fn push(&mut self, e: impl Into<Element>) -> &mut Self {
        self.elements.push(e.into());
        self
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Gates and channels in application order, nested circuits expanded.
    pub fn flatten(&self) -> Vec<&Element> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Element>) {
        for e in &self.elements {
            match e {
                Element::Circuit(c) => c.collect_leaves(out),
                leaf => out.push(leaf),
            }
        }
    }

    fn for_each_gate_mut(&mut self, f: &mut impl FnMut(&mut GateOp) -> Result<()>) -> Result<()> {
        for e in &mut self.elements {
            match e {
                Element::Gate(g) => f(g)?,
                Element::Circuit(c) => c.for_each_gate_mut(f)?,
                Element::Channel(_) => {}
            }
        }
        Ok(())
    }

    /// Smallest register size the circuit fits on.
    pub fn num_qubits(&self) -> usize {
        self.flatten()
            .into_iter()
            .map(|e| match e {
                Element::Gate(g) => g.max_position(),
                Element::Channel(c) => c.max_position(),
                Element::Circuit(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn has_channels(&self) -> bool {
        self.flatten().iter().any(|e| matches!(e, Element::Channel(_)))
    }

    pub fn num_active_parameters(&self) -> usize {
        self.flatten()
            .into_iter()
            .map(|e| match e {
                Element::Gate(g) => g.num_active(),
                _ => 0,
            })
            .sum()
    }

    /// Values of the variational parameters, depth first in element order.
    pub fn active_parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in self.flatten() {
            if let Element::Gate(g) = e {
                out.extend(g.params().iter().zip(g.active()).filter(|(_, &a)| a).map(|(&p, _)| p));
            }
        }
        out
    }

    /// Overwrites the variational parameters in the order of [`Self::active_parameters`].
    pub fn reset_parameters(&mut self, values: &[f64]) -> Result<()> {
        let expected = self.num_active_parameters();
        if values.len() != expected {
            return Err(Error::Shape(format!("{} values for {expected} active parameters", values.len())));
        }
        let mut next = values.iter();
        self.for_each_gate_mut(&mut |g| {
            if g.num_active() == 0 {
                return Ok(());
            }
            let mut params = g.params().to_vec();
            for (p, &a) in params.iter_mut().zip(g.active()) {
                if a {
                    *p = *next.next().expect("length checked");
                }
            }
            g.set_params(&params)
        })
    }

    fn check_fits<S: QuantumState>(&self, state: &S) -> Result<()> {
        let n = state.num_qubits();
        for e in self.flatten() {
            match e {
                Element::Gate(g) if g.max_position() > n => {
                    return Err(Error::Index { index: g.max_position(), num_qubits: n })
                }
                Element::Channel(c) => {
                    if !S::SUPPORTS_CHANNELS {
                        return Err(Error::Type("channels need a mixed state".into()));
                    }
                    if c.max_position() > n {
                        return Err(Error::Index { index: c.max_position(), num_qubits: n });
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Applies every element in order. The state is left untouched on error.
    pub fn apply<S: QuantumState>(&self, state: &mut S, cfg: &ThreadConfig) -> Result<()> {
        self.check_fits(state)?;
        for e in self.flatten() {
            match e {
                Element::Gate(g) => state.apply_gate(g, cfg)?,
                Element::Channel(c) => state.apply_channel(c, cfg)?,
                Element::Circuit(_) => unreachable!(),
            }
        }
        Ok(())
    }

    pub fn applied<S: QuantumState>(&self, state: &S, cfg: &ThreadConfig) -> Result<S> {
        let mut out = state.clone();
        self.apply(&mut out, cfg)?;
        Ok(out)
    }

    /// Absorbs single-qubit gates into a neighbouring two-qubit gate on the
    /// same qubit. A single-qubit gate joins the next gate touching its qubit
    /// when that gate is a two-qubit gate, otherwise the previous one under
    /// the same condition. The result is flat and every gate is `Generic`.
    pub fn fuse_gates(&self) -> Result<Circuit> {
        let mut gates = Vec::new();
        for e in self.flatten() {
            match e {
                Element::Gate(g) => gates.push(g),
                _ => return Err(Error::Unsupported("gate fusion needs a noiseless circuit".into())),
            }
        }

        // next[i]: index of the next gate sharing the qubit of single-qubit gate i.
        let mut next = vec![None; gates.len()];
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (i, g) in gates.iter().enumerate().rev() {
            if let [q] = g.positions() {
                next[i] = seen.iter().find(|(p, _)| p == q).map(|&(_, j)| j);
            }
            for &p in g.positions() {
                match seen.iter_mut().find(|(s, _)| *s == p) {
                    Some(slot) => slot.1 = i,
                    None => seen.push((p, i)),
                }
            }
        }

        let mut pending: Vec<Option<Matrix>> = vec![None; gates.len()];
        let mut out: Vec<(Vec<usize>, Matrix)> = Vec::new();
        let mut last: Vec<(usize, usize)> = Vec::new();
        for (i, g) in gates.iter().enumerate() {
            if let [q] = g.positions() {
                if let Some(j) = next[i].filter(|&j| gates[j].positions().len() == 2) {
                    let lifted = lift(g.matrix(), *q, gates[j].positions());
                    pending[j] = Some(match pending[j].take() {
                        Some(m) => &lifted * &m,
                        None => lifted,
                    });
                    continue;
                }
                let prev = last.iter().find(|(p, _)| p == q).map(|&(_, k)| k);
                if let Some(k) = prev.filter(|&k| out[k].0.len() == 2) {
                    let lifted = lift(g.matrix(), *q, &out[k].0);
                    out[k].1 = &lifted * &out[k].1;
                    continue;
                }
            }
            let m = match pending[i].take() {
                Some(pre) => g.matrix() * &pre,
                None => g.matrix().clone(),
            };
            let k = out.len();
            for &p in g.positions() {
                match last.iter_mut().find(|(s, _)| *s == p) {
                    Some(slot) => slot.1 = k,
                    None => last.push((p, k)),
                }
            }
            out.push((g.positions().to_vec(), m));
        }
        Ok(Circuit {
            elements: out.into_iter().map(|(p, m)| Element::Gate(GateOp::from_parts_unchecked(p, m))).collect(),
        })
    }
}

/// Embeds a one-qubit matrix acting on `q` into the local space of a two-qubit gate.
fn lift(m: &Matrix, q: usize, pair: &[usize]) -> Matrix {
    let id = Matrix::identity(2);
    if pair[0] == q {
        Matrix::kron(m, &id)
    } else {
        Matrix::kron(&id, m)
    }
}

/// Operations shared by pure and mixed states.
pub trait QuantumState: Clone {
    const SUPPORTS_CHANNELS: bool;

    fn num_qubits(&self) -> usize;
    fn apply_gate(&mut self, g: &GateOp, cfg: &ThreadConfig) -> Result<()>;
    fn apply_channel(&mut self, c: &ChannelOp, cfg: &ThreadConfig) -> Result<()>;

    /// Probabilities of reading 0 and 1 on `qubit`, clamped to `[0, 1]`.
    fn outcome_probabilities(&self, qubit: usize) -> Result<[f64; 2]>;

    /// Keeps the branch where `qubit` reads `outcome` and rescales by `1/sqrt(p)`
    /// on amplitudes or `1/p` on density entries.
    fn project(&mut self, qubit: usize, outcome: u8, probability: f64);

    /// Projective measurement in the computational basis.
    fn measure<R: RngCore + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> Result<MeasurementOutcome> {
        let [p0, p1] = self.outcome_probabilities(qubit)?;
        let total = p0 + p1;
        if total <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateState(format!("qubit {qubit} has no weight on either outcome")));
        }
        let outcome = u8::from(uniform01(rng) < p1 / total);
        let raw = if outcome == 1 { p1 } else { p0 };
        self.project(qubit, outcome, raw);
        Ok(MeasurementOutcome { outcome, probability: (raw / total).clamp(0.0, 1.0) })
    }
}

fn check_qubit(qubit: usize, n: usize) -> Result<()> {
    if qubit == 0 || qubit > n {
        Err(Error::Index { index: qubit, num_qubits: n })
    } else {
        Ok(())
    }
}

impl<T: Real> QuantumState for PureState<T> {
    const SUPPORTS_CHANNELS: bool = false;

    fn num_qubits(&self) -> usize {
        PureState::num_qubits(self)
    }

    fn apply_gate(&mut self, g: &GateOp, cfg: &ThreadConfig) -> Result<()> {
        apply_gate_fast(self, g, cfg)
    }

    fn apply_channel(&mut self, _: &ChannelOp, _: &ThreadConfig) -> Result<()> {
        Err(Error::Type("channels need a mixed state".into()))
    }

    fn outcome_probabilities(&self, qubit: usize) -> Result<[f64; 2]> {
        check_qubit(qubit, self.num_qubits())?;
        let bit = 1usize << (qubit - 1);
        let mut p = [0.0f64; 2];
        for (k, a) in self.amplitudes().iter().enumerate() {
            p[usize::from(k & bit != 0)] += a.norm_sqr().as_f64();
        }
        Ok(p.map(|x| x.clamp(0.0, 1.0)))
    }

    fn project(&mut self, qubit: usize, outcome: u8, probability: f64) {
        let bit = 1usize << (qubit - 1);
        let keep = if outcome == 1 { bit } else { 0 };
        let scale = T::from_f64(1.0 / Float::sqrt(probability));
        for (k, a) in self.amplitudes_mut().iter_mut().enumerate() {
            if k & bit == keep {
                *a = *a * scale;
            } else {
                *a = Complex::zero();
            }
        }
    }
}

impl<T: Real> QuantumState for MixedState<T> {
    const SUPPORTS_CHANNELS: bool = true;

    fn num_qubits(&self) -> usize {
        MixedState::num_qubits(self)
    }

    fn apply_gate(&mut self, g: &GateOp, cfg: &ThreadConfig) -> Result<()> {
        apply_gate_mixed(self, g, cfg)
    }

    fn apply_channel(&mut self, c: &ChannelOp, cfg: &ThreadConfig) -> Result<()> {
        apply_channel(self, c, cfg)
    }

    fn outcome_probabilities(&self, qubit: usize) -> Result<[f64; 2]> {
        check_qubit(qubit, self.num_qubits())?;
        let bit = 1usize << (qubit - 1);
        let mut p = [0.0f64; 2];
        for r in 0..self.dim() {
            p[usize::from(r & bit != 0)] += self.entry(r, r).re.as_f64();
        }
        Ok(p.map(|x| x.clamp(0.0, 1.0)))
    }

    fn project(&mut self, qubit: usize, outcome: u8, probability: f64) {
        let bit = 1usize << (qubit - 1);
        let keep = if outcome == 1 { bit } else { 0 };
        let dim = self.dim();
        let scale = T::from_f64(1.0 / probability);
        for (idx, z) in self.entries_mut().iter_mut().enumerate() {
            let (r, c) = (idx % dim, idx / dim);
            if r & bit == keep && c & bit == keep {
                *z = *z * scale;
            } else {
                *z = Complex::zero();
            }
        }
    }
}

/// Measures `qubit` of `state` and collapses it onto the drawn outcome.
pub fn measure<S: QuantumState, R: RngCore + ?Sized>(
    state: &mut S,
    qubit: usize,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    state.measure(qubit, rng)
}
