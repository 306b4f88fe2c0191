//! Pauli-string operators and their expectation values.
//!
//! A Pauli string acts on a basis state as a signed bit flip,
//! `P|k> = i^ny (-1)^popcount(k & zy) |k ^ xy>`, where `xy` marks the
//! x and y factors, `zy` the z and y factors and `ny` counts the y factors.
//! Every routine here runs on that rule directly; no matrix is formed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Add;
use core::str::FromStr;

use num_complex::Complex;
use num_traits::Zero;

use crate::kernels::{fill_chunks, map_ranges, ThreadConfig};
use crate::linalg::Matrix;
use crate::statespace::{MixedState, PureState};
use crate::{Error, Real, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliLabel {
    X,
    Y,
    Z,
}

impl PauliLabel {
    pub fn as_char(self) -> char {
        match self {
            PauliLabel::X => 'x',
            PauliLabel::Y => 'y',
            PauliLabel::Z => 'z',
        }
    }

    pub fn matrix(self) -> Matrix {
        let (o, i) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        let z = C64::zero();
        let rows = match self {
            PauliLabel::X => [[z, o], [o, z]],
            PauliLabel::Y => [[z, -i], [i, z]],
            PauliLabel::Z => [[o, z], [z, -o]],
        };
        Matrix::from_rows(&rows).expect("2x2")
    }
}

impl FromStr for PauliLabel {
    type Err = Error;

    /// Accepts `x`, `y`, `z` in either case.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(PauliLabel::X),
            "y" | "Y" => Ok(PauliLabel::Y),
            "z" | "Z" => Ok(PauliLabel::Z),
            other => Err(Error::Domain(format!("unknown Pauli label {other:?}"))),
        }
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// `coeff` times a tensor product of Pauli factors, identity elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    factors: Vec<(usize, PauliLabel)>,
    coeff: C64,
}

impl PauliTerm {
    /// Factors are sorted by qubit. Qubit indices start at 1 and must be distinct.
    pub fn new(factors: impl IntoIterator<Item = (usize, PauliLabel)>, coeff: C64) -> Result<Self> {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_by_key(|f| f.0);
        if factors.first().is_some_and(|f| f.0 == 0) {
            return Err(Error::Index { index: 0, num_qubits: 0 });
        }
        if let Some(w) = factors.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validity(format!("qubit {} appears twice in one term", w[0].0)));
        }
        Ok(PauliTerm { factors, coeff })
    }

    /// Like [`Self::new`] with labels given as strings.
    pub fn parse(factors: &[(usize, &str)], coeff: C64) -> Result<Self> {
        let parsed = factors.iter().map(|&(q, l)| l.parse().map(|l| (q, l))).collect::<Result<Vec<_>>>()?;
        Self::new(parsed, coeff)
    }

    pub fn factors(&self) -> &[(usize, PauliLabel)] {
        &self.factors
    }

    pub fn coeff(&self) -> C64 {
        self.coeff
    }

    pub fn max_index(&self) -> usize {
        self.factors.last().map_or(0, |f| f.0)
    }

    fn compile(&self, coeff: C64) -> Compiled {
        let (mut flip, mut sign, mut ny) = (0usize, 0usize, 0u32);
        for &(q, l) in &self.factors {
            let bit = 1usize << (q - 1);
            match l {
                PauliLabel::X => flip |= bit,
                PauliLabel::Y => {
                    flip |= bit;
                    sign |= bit;
                    ny += 1;
                }
                PauliLabel::Z => sign |= bit,
            }
        }
        let ipow = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
        Compiled { flip, sign, factor: coeff * ipow[(ny % 4) as usize] }
    }

    /// Dense `2^n x 2^n` matrix including the coefficient.
    pub fn dense_matrix(&self, n: usize) -> Result<Matrix> {
        check_index(self.max_index(), n)?;
        let c = self.compile(self.coeff);
        let mut m = Matrix::zeros(1 << n);
        for k in 0..1usize << n {
            m[(k ^ c.flip, k)] = c.phase(k);
        }
        Ok(m)
    }
}

/// A sum of Pauli terms. Repeated strings are kept as separate terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PauliOperator {
    terms: Vec<PauliTerm>,
}

impl PauliOperator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<PauliTerm>) -> Self {
        PauliOperator { terms }
    }

    pub fn push(&mut self, t: PauliTerm) -> &mut Self {
        self.terms.push(t);
        self
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> usize {
        self.terms.iter().map(PauliTerm::max_index).max().unwrap_or(0)
    }

    /// True when every coefficient is real, so the operator is Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im == 0.0)
    }

    pub fn dense_matrix(&self, n: usize) -> Result<Matrix> {
        let mut m = Matrix::zeros(1 << n);
        for t in &self.terms {
            m = &m + &t.dense_matrix(n)?;
        }
        Ok(m)
    }

    fn compiled(&self, real_part: bool) -> Vec<Compiled> {
        self.terms.iter().map(|t| t.compile(if real_part { C64::new(t.coeff.re, 0.0) } else { t.coeff })).collect()
    }
}

impl Add for PauliOperator {
    type Output = PauliOperator;

    fn add(mut self, rhs: PauliOperator) -> PauliOperator {
        self.terms.extend(rhs.terms);
        self
    }
}

struct Compiled {
    flip: usize,
    sign: usize,
    factor: C64,
}

impl Compiled {
    #[inline(always)]
    fn phase(&self, k: usize) -> C64 {
        if (k & self.sign).count_ones() & 1 == 1 {
            -self.factor
        } else {
            self.factor
        }
    }
}

fn check_index(max: usize, n: usize) -> Result<()> {
    if max > n {
        Err(Error::Index { index: max, num_qubits: n })
    } else {
        Ok(())
    }
}

#[inline(always)]
fn widen<T: Real>(z: Complex<T>) -> C64 {
    C64::new(z.re.as_f64(), z.im.as_f64())
}

/// `sum_k conj(v[k ^ flip]) (-1)^popcount(k & sign) v[k]` for every term, then weighted.
fn pure_overlaps<T: Real>(terms: &[Compiled], amps: &[Complex<T>], cfg: &ThreadConfig) -> C64 {
    let partials = map_ranges(amps.len(), cfg, |range| {
        let mut acc = vec![C64::zero(); terms.len()];
        for k in range {
            let a = widen(amps[k]);
            for (slot, t) in acc.iter_mut().zip(terms) {
                let b = widen(amps[k ^ t.flip]).conj() * a;
                if (k & t.sign).count_ones() & 1 == 1 {
                    *slot -= b;
                } else {
                    *slot += b;
                }
            }
        }
        acc
    });
    let mut total = vec![C64::zero(); terms.len()];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total.iter().zip(terms).map(|(s, t)| s * t.factor).sum()
}

/// `<psi|H|psi>`.
pub fn expectation<T: Real>(op: &PauliOperator, state: &PureState<T>) -> Result<C64> {
    expectation_with(op, state, &ThreadConfig::serial())
}

pub fn expectation_with<T: Real>(op: &PauliOperator, state: &PureState<T>, cfg: &ThreadConfig) -> Result<C64> {
    check_index(op.max_index(), state.num_qubits())?;
    Ok(pure_overlaps(&op.compiled(false), state.amplitudes(), cfg))
}

/// `<psi|H_h|psi>` with `H_h` built from the real parts of the coefficients.
pub(crate) fn hermitian_expectation<T: Real>(
    op: &PauliOperator,
    state: &PureState<T>,
    cfg: &ThreadConfig,
) -> Result<f64> {
    check_index(op.max_index(), state.num_qubits())?;
    Ok(pure_overlaps(&op.compiled(true), state.amplitudes(), cfg).re)
}

/// `tr(H rho)`.
pub fn expectation_mixed<T: Real>(op: &PauliOperator, dm: &MixedState<T>) -> Result<C64> {
    expectation_mixed_with(op, dm, &ThreadConfig::serial())
}

pub fn expectation_mixed_with<T: Real>(op: &PauliOperator, dm: &MixedState<T>, cfg: &ThreadConfig) -> Result<C64> {
    check_index(op.max_index(), dm.num_qubits())?;
    Ok(mixed_trace(&op.compiled(false), dm, cfg))
}

pub(crate) fn hermitian_expectation_mixed<T: Real>(
    op: &PauliOperator,
    dm: &MixedState<T>,
    cfg: &ThreadConfig,
) -> Result<f64> {
    check_index(op.max_index(), dm.num_qubits())?;
    Ok(mixed_trace(&op.compiled(true), dm, cfg).re)
}

fn mixed_trace<T: Real>(terms: &[Compiled], dm: &MixedState<T>, cfg: &ThreadConfig) -> C64 {
    let dim = dm.dim();
    let entries = dm.entries();
    let partials = map_ranges(dim, cfg, |range| {
        let mut acc = C64::zero();
        for t in terms {
            for k in range.clone() {
                acc += t.phase(k) * widen(entries[k + dim * (k ^ t.flip)]);
            }
        }
        acc
    });
    partials.into_iter().sum()
}

/// `H|psi>`, generally unnormalized.
pub fn apply_operator<T: Real>(op: &PauliOperator, state: &PureState<T>) -> Result<PureState<T>> {
    apply_operator_with(op, state, &ThreadConfig::serial())
}

pub fn apply_operator_with<T: Real>(
    op: &PauliOperator,
    state: &PureState<T>,
    cfg: &ThreadConfig,
) -> Result<PureState<T>> {
    check_index(op.max_index(), state.num_qubits())?;
    apply_terms(&op.compiled(false), state, cfg)
}

/// `H_h|psi>` with `H_h` built from the real parts of the coefficients.
pub(crate) fn apply_hermitian_part<T: Real>(
    op: &PauliOperator,
    state: &PureState<T>,
    cfg: &ThreadConfig,
) -> Result<PureState<T>> {
    check_index(op.max_index(), state.num_qubits())?;
    apply_terms(&op.compiled(true), state, cfg)
}

fn apply_terms<T: Real>(terms: &[Compiled], state: &PureState<T>, cfg: &ThreadConfig) -> Result<PureState<T>> {
    let src = state.amplitudes();
    let mut out = vec![Complex::<T>::zero(); src.len()];
    fill_chunks(&mut out, cfg, |start, chunk| {
        for (i, slot) in chunk.iter_mut().enumerate() {
            let r = start + i;
            let mut acc = C64::zero();
            for t in terms {
                let k = r ^ t.flip;
                acc += t.phase(k) * widen(src[k]);
            }
            *slot = Complex::new(T::from_f64(acc.re), T::from_f64(acc.im));
        }
    });
    PureState::from_raw_unchecked(out)
}

/// The matrix of `H_h` on `n` qubits, column-major, as a `4^n` vector.
pub(crate) fn vectorized_hermitian_part<T: Real>(
    op: &PauliOperator,
    n: usize,
    cfg: &ThreadConfig,
) -> Result<Vec<Complex<T>>> {
    check_index(op.max_index(), n)?;
    let terms = op.compiled(true);
    let dim = 1usize << n;
    let mut out = vec![Complex::<T>::zero(); dim * dim];
    fill_chunks(&mut out, cfg, |start, chunk| {
        for (i, slot) in chunk.iter_mut().enumerate() {
            let (r, c) = ((start + i) % dim, (start + i) / dim);
            let mut acc = C64::zero();
            for t in &terms {
                if r == c ^ t.flip {
                    acc += t.phase(c);
                }
            }
            *slot = Complex::new(T::from_f64(acc.re), T::from_f64(acc.im));
        }
    });
    Ok(out)
}

/// Open-chain Heisenberg model with a longitudinal field:
/// `hz * sum_i z_i + j * sum_i (x_i x_{i+1} + y_i y_{i+1} + z_i z_{i+1})`.
pub fn heisenberg_1d(sites: usize, hz: f64, j: f64) -> Result<PauliOperator> {
    if sites == 0 {
        return Err(Error::Domain("the chain needs at least one site".into()));
    }
    let mut op = PauliOperator::new();
    for i in 1..=sites {
        op.push(PauliTerm::new([(i, PauliLabel::Z)], C64::new(hz, 0.0))?);
    }
    for i in 1..sites {
        for l in [PauliLabel::X, PauliLabel::Y, PauliLabel::Z] {
            op.push(PauliTerm::new([(i, l), (i + 1, l)], C64::new(j, 0.0))?);
        }
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{apply_gate_fast, ThreadConfig};
    use crate::GateOp;
    use core::f64::consts::FRAC_1_SQRT_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z1() -> PauliOperator {
        PauliOperator::from_terms(vec![PauliTerm::new([(1, PauliLabel::Z)], C64::new(1.0, 0.0)).unwrap()])
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> PureState<f64> {
        let v: Vec<C64> = (0..1usize << n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        PureState::from_amplitudes(v.into_iter().map(|z| z / norm).collect()).unwrap()
    }

    fn random_op(n: usize, terms: usize, complex: bool, rng: &mut ChaCha8Rng) -> PauliOperator {
        let labels = [PauliLabel::X, PauliLabel::Y, PauliLabel::Z];
        let mut op = PauliOperator::new();
        for _ in 0..terms {
            let mut factors = Vec::new();
            for q in 1..=n {
                if rng.gen_bool(0.5) {
                    factors.push((q, labels[rng.gen_range(0..3)]));
                }
            }
            let im = if complex { rng.gen::<f64>() - 0.5 } else { 0.0 };
            op.push(PauliTerm::new(factors, C64::new(rng.gen::<f64>() - 0.5, im)).unwrap());
        }
        op
    }

    fn dense_expectation(m: &Matrix, psi: &PureState<f64>) -> C64 {
        let hv = m.apply_vec(psi.amplitudes());
        psi.amplitudes().iter().zip(&hv).map(|(a, b)| a.conj() * b).sum()
    }

    #[test]
    fn labels_parse_in_either_case() {
        assert_eq!("Z".parse::<PauliLabel>().unwrap(), PauliLabel::Z);
        assert_eq!("y".parse::<PauliLabel>().unwrap(), PauliLabel::Y);
        assert!("w".parse::<PauliLabel>().is_err());
        let t = PauliTerm::parse(&[(2, "X"), (1, "z")], C64::new(1.0, 0.0)).unwrap();
        assert_eq!(t.factors(), &[(1, PauliLabel::Z), (2, PauliLabel::X)]);
        assert!(PauliTerm::parse(&[(1, "x"), (1, "z")], C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn basic_expectations() {
        let zero = PureState::<f64>::new(1).unwrap();
        assert_eq!(expectation(&z1(), &zero).unwrap(), C64::new(1.0, 0.0));

        let h = heisenberg_1d(3, 1.0, 1.0).unwrap();
        assert_eq!(expectation(&h, &PureState::<f64>::new(3).unwrap()).unwrap(), C64::new(5.0, 0.0));

        let plus = PureState::from_amplitudes(vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]).unwrap();
        let x = PauliOperator::from_terms(vec![PauliTerm::new([(1, PauliLabel::X)], C64::new(1.0, 0.0)).unwrap()]);
        assert!((expectation(&x, &plus).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);

        assert!(matches!(expectation(&h, &PureState::<f64>::new(2).unwrap()), Err(Error::Index { index: 3, .. })));
    }

    #[test]
    fn mixed_expectations() {
        let mixed = MixedState::<f64>::from_rows(&[
            vec![C64::new(0.5, 0.0), C64::zero()],
            vec![C64::zero(), C64::new(0.5, 0.0)],
        ])
        .unwrap();
        assert_eq!(expectation_mixed(&z1(), &mixed).unwrap(), C64::zero());
        let mut one = PureState::<f64>::new(1).unwrap();
        apply_gate_fast(&mut one, &GateOp::x(1), &ThreadConfig::serial()).unwrap();
        let dm = MixedState::from_pure(&one).unwrap();
        assert_eq!(expectation_mixed(&z1(), &dm).unwrap(), C64::new(-1.0, 0.0));
    }

    #[test]
    fn operator_application() {
        let zero = PureState::<f64>::new(1).unwrap();
        assert_eq!(apply_operator(&z1(), &zero).unwrap(), zero);
        let mut one = PureState::<f64>::new(1).unwrap();
        apply_gate_fast(&mut one, &GateOp::x(1), &ThreadConfig::serial()).unwrap();
        let two_z = PauliOperator::from_terms(vec![PauliTerm::new([(1, PauliLabel::Z)], C64::new(2.0, 0.0)).unwrap()]);
        let out = apply_operator(&two_z, &one).unwrap();
        assert_eq!(out.amplitudes(), &[C64::zero(), C64::new(-2.0, 0.0)]);
    }

    #[test]
    fn heisenberg_shapes() {
        assert!(matches!(heisenberg_1d(0, 1.0, 1.0), Err(Error::Domain(_))));
        let one = heisenberg_1d(1, 0.7, 1.0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.terms()[0].coeff(), C64::new(0.7, 0.0));
        assert_eq!(heisenberg_1d(3, 1.0, 1.0).unwrap().len(), 9);
        for l in 1..8 {
            assert_eq!(heisenberg_1d(l, 1.0, 1.0).unwrap().len(), 3 * (l - 1) + l);
        }
    }

    #[test]
    fn matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 1..=6 {
            for complex in [false, true] {
                let op = random_op(n, 5, complex, &mut rng);
                let psi = random_state(n, &mut rng);
                let m = op.dense_matrix(n).unwrap();
                let e = expectation(&op, &psi).unwrap();
                assert!((e - dense_expectation(&m, &psi)).norm() <= 1e-10);
                if !complex {
                    assert!(e.im.abs() <= 1e-10);
                }
                let applied = apply_operator(&op, &psi).unwrap();
                let dense = m.apply_vec(psi.amplitudes());
                for (a, b) in applied.amplitudes().iter().zip(&dense) {
                    assert!((a - b).norm() <= 1e-12);
                }
                assert!((psi.inner(&applied) - e).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn mixed_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let n = 3;
        let dim = 1 << n;
        let mut entries = vec![C64::zero(); dim * dim];
        for w in [0.6, 0.4] {
            let psi = random_state(n, &mut rng);
            let dm = MixedState::from_pure(&psi).unwrap();
            for (a, b) in entries.iter_mut().zip(dm.entries()) {
                *a += b * w;
            }
        }
        let dm = MixedState::from_entries(entries).unwrap();
        let op = random_op(n, 6, true, &mut rng);
        let m = op.dense_matrix(n).unwrap();
        let rho = Matrix::from_fn(dim, |r, c| dm.entry(r, c));
        let oracle = (&m * &rho).trace();
        assert!((expectation_mixed(&op, &dm).unwrap() - oracle).norm() <= 1e-10);

        let vec_h: Vec<C64> = vectorized_hermitian_part(&op, n, &ThreadConfig::serial()).unwrap();
        let overlap: C64 = vec_h.iter().zip(dm.entries()).map(|(a, b)| a.conj() * b).sum();
        let real_part = hermitian_expectation_mixed(&op, &dm, &ThreadConfig::serial()).unwrap();
        assert!((overlap.re - real_part).abs() <= 1e-12 && overlap.im.abs() <= 1e-12);
    }

    #[test]
    fn pure_and_mixed_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for n in 1..=5 {
            let psi = random_state(n, &mut rng);
            let op = random_op(n, 4, false, &mut rng);
            let dm = MixedState::from_pure(&psi).unwrap();
            let a = expectation(&op, &psi).unwrap();
            let b = expectation_mixed(&op, &dm).unwrap();
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn two_site_ground_energy() {
        // Power iteration on (c - H) finds the lowest eigenvalue of H.
        let h = heisenberg_1d(2, 0.0, 1.0).unwrap().dense_matrix(2).unwrap();
        let shift = &Matrix::identity(4).scale(C64::new(4.0, 0.0)) - &h;
        let mut v = vec![C64::new(0.3, 0.0), C64::new(0.9, 0.1), C64::new(-0.4, 0.0), C64::new(0.2, 0.0)];
        for _ in 0..200 {
            v = shift.apply_vec(&v);
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= norm);
        }
        let hv = h.apply_vec(&v);
        let e: C64 = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        assert!((e.re + 3.0).abs() <= 1e-10);
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let a = random_op(4, 3, false, &mut rng);
        let b = random_op(4, 3, false, &mut rng);
        let psi = random_state(4, &mut rng);
        let sum = expectation(&(a.clone() + b.clone()), &psi).unwrap();
        let parts = expectation(&a, &psi).unwrap() + expectation(&b, &psi).unwrap();
        assert!((sum - parts).norm() <= 1e-10);
    }

    #[test]
    fn threads_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let psi = random_state(15, &mut rng);
        let op = heisenberg_1d(15, 0.5, 1.0).unwrap();
        let serial = expectation(&op, &psi).unwrap();
        for t in [2, 4] {
            let cfg = ThreadConfig::new(t).with_min_work(0);
            assert!((expectation_with(&op, &psi, &cfg).unwrap() - serial).norm() <= 1e-12);
            let a = apply_operator_with(&op, &psi, &cfg).unwrap();
            assert_eq!(a, apply_operator(&op, &psi).unwrap());
        }
    }
}
