//! Pure and mixed state storage.
//!
//! Amplitude `k` of an `n`-qubit pure state belongs to the basis state whose
//! qubit `j` (1-based) is `(k >> (j - 1)) & 1`, i.e. qubit 1 varies fastest.
//! A mixed state stores entry `(row, col)` of its `2^n x 2^n` density matrix at
//! `row + 2^n * col`: ket qubits are labelled `1..=n` and bra qubits
//! `n+1..=2n`, so the entries are also a `2n`-qubit pseudo pure state.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::{Error, Real, Result};

/// Largest qubit count accepted for a pure state: `2^n` complex doubles must be
/// addressable. Allocation failure below this bound is still reported as a size error.
pub const MAX_QUBITS: usize = (usize::BITS as usize) - 5;

/// Tolerance used when validating user-provided states.
pub const INPUT_TOLERANCE: f64 = 1e-8;

/// Flat amplitude index of the basis state with the given qubit values (qubit 1 first).
pub fn basis_index(bits: &[u8]) -> Result<usize> {
    if bits.len() >= usize::BITS as usize {
        return Err(Error::Size(format!("{} bits do not fit an index", bits.len())));
    }
    bits.iter().enumerate().try_fold(0usize, |acc, (j, &b)| match b {
        0 => Ok(acc),
        1 => Ok(acc | (1 << j)),
        other => Err(Error::Domain(format!("bit {} of qubit {} is not 0 or 1", other, j + 1))),
    })
}

fn zeroed<T: Real>(len: usize) -> Result<Vec<Complex<T>>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| Error::Size(format!("cannot allocate {len} amplitudes")))?;
    v.resize(len, Complex::zero());
    Ok(v)
}

fn log2_exact(len: usize, what: &str) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::Shape(format!("{what} length {len} is not a power of two >= 2")));
    }
    Ok(len.trailing_zeros() as usize)
}

fn check_qubits(n: usize, max: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Size("a state needs at least one qubit".into()));
    }
    if n > max {
        return Err(Error::Size(format!("{n} qubits exceed the limit of {max}")));
    }
    Ok(())
}

/// An `n`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Real = f64> {
    num_qubits: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    /// `|0...0>` on `n` qubits.
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n, MAX_QUBITS)?;
        let mut amps = zeroed(1usize << n)?;
        amps[0] = Complex::one();
        Ok(PureState { num_qubits: n, amps })
    }

    /// Wraps user amplitudes. The norm must lie within `1e-8` of one; the data
    /// is renormalized exactly.
    pub fn from_amplitudes(mut amps: Vec<Complex<T>>) -> Result<Self> {
        let n = log2_exact(amps.len(), "amplitude vector")?;
        let norm = norm_of(&amps);
        if norm == 0.0 {
            return Err(Error::DegenerateInput("zero amplitude vector".into()));
        }
        if (norm - 1.0).abs() > INPUT_TOLERANCE {
            return Err(Error::Validity(format!("amplitude vector has norm {norm}")));
        }
        let inv = T::from_f64(1.0 / norm);
        amps.iter_mut().for_each(|a| *a = *a * inv);
        Ok(PureState { num_qubits: n, amps })
    }

    /// Wraps amplitudes without any normalization check. Used for unnormalized
    /// intermediate vectors such as `H|psi>` and for test oracles.
    pub fn from_raw_unchecked(amps: Vec<Complex<T>>) -> Result<Self> {
        let n = log2_exact(amps.len(), "amplitude vector")?;
        Ok(PureState { num_qubits: n, amps })
    }

    /// All-zero vector on `n` qubits (not a physical state).
    pub fn zeros_unchecked(n: usize) -> Result<Self> {
        check_qubits(n, MAX_QUBITS)?;
        Ok(PureState { num_qubits: n, amps: zeroed(1usize << n)? })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn amplitude(&self, bits: &[u8]) -> Result<Complex<T>> {
        if bits.len() != self.num_qubits {
            return Err(Error::Shape(format!("{} bits for a {}-qubit state", bits.len(), self.num_qubits)));
        }
        Ok(self.amps[basis_index(bits)?])
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState<T>) -> Complex<f64> {
        assert_eq!(self.amps.len(), other.amps.len());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| {
                let p = a.conj() * b;
                Complex::new(p.re.as_f64(), p.im.as_f64())
            })
            .sum()
    }

    pub fn max_abs_diff(&self, other: &PureState<T>) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len());
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm().as_f64()).fold(0.0, f64::max)
    }
}

pub(crate) fn norm_of<T: Real>(amps: &[Complex<T>]) -> f64 {
    num_traits::Float::sqrt(amps.iter().map(|a| a.norm_sqr().as_f64()).sum::<f64>())
}

/// An `n`-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState<T: Real = f64> {
    num_qubits: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> MixedState<T> {
    /// `|0...0><0...0|` on `n` qubits.
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n, MAX_QUBITS / 2)?;
        let mut entries = zeroed(1usize << (2 * n))?;
        entries[0] = Complex::one();
        Ok(MixedState { num_qubits: n, entries })
    }

    /// Wraps `4^n` column-major entries after checking unit trace and
    /// hermiticity within `1e-8`.
    pub fn from_entries(entries: Vec<Complex<T>>) -> Result<Self> {
        let total = log2_exact(entries.len(), "density matrix")?;
        if total % 2 != 0 {
            return Err(Error::Shape(format!("density matrix with {} entries is not square", entries.len())));
        }
        let dm = MixedState { num_qubits: total / 2, entries };
        let tr = dm.trace();
        if (tr.re - 1.0).abs() > INPUT_TOLERANCE || tr.im.abs() > INPUT_TOLERANCE {
            return Err(Error::Validity(format!("trace is {tr}, expected 1")));
        }
        let herm = dm.hermiticity_error();
        if herm > INPUT_TOLERANCE {
            return Err(Error::Validity(format!("not Hermitian (deviation {herm:e})")));
        }
        Ok(dm)
    }

    /// Wraps a `2^n x 2^n` matrix given as rows.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("density matrix rows must form a square matrix".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for col in 0..dim {
            for row in rows {
                entries.push(row[col]);
            }
        }
        Self::from_entries(entries)
    }

    /// `|psi><psi|`.
    pub fn from_pure(psi: &PureState<T>) -> Result<Self> {
        let n = psi.num_qubits();
        check_qubits(n, MAX_QUBITS / 2)?;
        let dim = 1usize << n;
        let mut entries = zeroed(dim * dim)?;
        let a = psi.amplitudes();
        for col in 0..dim {
            let cc = a[col].conj();
            for row in 0..dim {
                entries[row + dim * col] = a[row] * cc;
            }
        }
        Ok(MixedState { num_qubits: n, entries })
    }

    /// Wraps entries without validation.
    pub fn from_raw_unchecked(entries: Vec<Complex<T>>) -> Result<Self> {
        let total = log2_exact(entries.len(), "density matrix")?;
        if total % 2 != 0 {
            return Err(Error::Shape("density matrix is not square".into()));
        }
        Ok(MixedState { num_qubits: total / 2, entries })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    #[inline]
    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    #[inline]
    pub fn entries_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<Complex<T>> {
        self.entries
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row + self.dim() * col]
    }

    pub fn trace(&self) -> Complex<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| {
                let e = self.entries[i * (dim + 1)];
                Complex::new(e.re.as_f64(), e.im.as_f64())
            })
            .sum()
    }

    /// `max |rho(a,b) - conj(rho(b,a))|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for a in 0..dim {
            for b in a..dim {
                let d = (self.entry(a, b) - self.entry(b, a).conj()).norm().as_f64();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// The same storage seen as a `2n`-qubit pseudo pure state. Nothing is
    /// copied and the view is not norm-checked.
    pub fn purify_index_view(&self) -> PseudoState<'_, T> {
        PseudoState { num_qubits: 2 * self.num_qubits, amps: &self.entries }
    }

    pub fn purify_index_view_mut(&mut self) -> PseudoStateMut<'_, T> {
        PseudoStateMut { num_qubits: 2 * self.num_qubits, amps: &mut self.entries }
    }

    /// Moves the entries into a `2n`-qubit pseudo pure state.
    pub fn into_pseudo_state(self) -> PureState<T> {
        PureState { num_qubits: 2 * self.num_qubits, amps: self.entries }
    }

    /// Reinterprets a `2n`-qubit pseudo pure state as a density matrix, without validation.
    pub fn from_pseudo_state(state: PureState<T>) -> Result<Self> {
        if !state.num_qubits.is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "a {}-qubit pseudo state has no density matrix reading",
                state.num_qubits
            )));
        }
        Ok(MixedState { num_qubits: state.num_qubits / 2, entries: state.amps })
    }

    pub fn max_abs_diff(&self, other: &MixedState<T>) -> f64 {
        assert_eq!(self.entries.len(), other.entries.len());
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm().as_f64()).fold(0.0, f64::max)
    }
}

/// Borrowed `2n`-qubit reading of a density matrix.
#[derive(Debug, Clone, Copy)]
pub struct PseudoState<'a, T: Real> {
    pub num_qubits: usize,
    pub amps: &'a [Complex<T>],
}

#[derive(Debug)]
pub struct PseudoStateMut<'a, T: Real> {
    pub num_qubits: usize,
    pub amps: &'a mut [Complex<T>],
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn fresh_pure_states_are_all_zero_basis_state() {
        let s = PureState::<f64>::new(1).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0)]);
        let s = PureState::<f64>::new(2).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(matches!(PureState::<f64>::new(0), Err(Error::Size(_))));
        assert!(matches!(PureState::<f64>::new(200), Err(Error::Size(_))));
        let s = PureState::<f32>::new(3).unwrap();
        assert_eq!(s.norm(), 1.0);
    }

    #[test]
    fn amplitudes_follow_qubit_one_fastest() {
        let s = PureState::from_amplitudes(vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(s.num_qubits(), 2);
        assert_eq!(s.amplitude(&[1, 0]).unwrap(), c(1.0));
        let s = PureState::from_amplitudes(vec![c(1.0), c(0.0)]).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0));
        assert!(matches!(PureState::from_amplitudes(vec![c(1.0), c(1.0), c(1.0)]), Err(Error::Shape(_))));
        assert!(matches!(PureState::from_amplitudes(vec![c(0.0), c(0.0)]), Err(Error::DegenerateInput(_))));
        assert!(matches!(PureState::from_amplitudes(vec![c(2.0), c(0.0)]), Err(Error::Validity(_))));
    }

    #[test]
    fn near_unit_input_is_renormalized() {
        let s = PureState::from_amplitudes(vec![c(1.0 + 5e-9), c(0.0)]).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0));
    }

    #[test]
    fn raw_constructor_skips_normalization() {
        let s = PureState::from_raw_unchecked(vec![c(2.0), c(0.0)]).unwrap();
        assert_eq!(s.norm(), 2.0);
    }

    #[test]
    fn basis_index_convention() {
        assert_eq!(basis_index(&[1, 0]).unwrap(), 1);
        assert_eq!(basis_index(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(basis_index(&[1, 1]).unwrap(), 3);
        assert!(matches!(basis_index(&[2]), Err(Error::Domain(_))));
    }

    #[test]
    fn mixed_state_construction() {
        let dm = MixedState::<f64>::new(1).unwrap();
        assert_eq!(dm.entries(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let dm = MixedState::<f64>::new(2).unwrap();
        assert_eq!(dm.entries().len(), 16);
        assert_eq!(dm.entry(0, 0), c(1.0));
        assert!(dm.entries()[1..].iter().all(|z| *z == c(0.0)));
        assert!(matches!(MixedState::<f64>::new(0), Err(Error::Size(_))));

        let mut last = vec![c(0.0); 16];
        last[15] = c(1.0);
        let dm = MixedState::from_entries(last).unwrap();
        assert_eq!(dm.num_qubits(), 2);
        assert_eq!(dm.entry(3, 3), c(1.0));

        let mixed = MixedState::from_rows(&[vec![c(0.5), c(0.0)], vec![c(0.0), c(0.5)]]).unwrap();
        assert!((mixed.trace() - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            MixedState::from_rows(&[vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]),
            Err(Error::Validity(_))
        ));
        let non_herm = vec![c(0.5), C64::new(0.0, 0.3), C64::new(0.0, 0.3), c(0.5)];
        assert!(matches!(MixedState::from_entries(non_herm), Err(Error::Validity(_))));
        assert!(matches!(MixedState::from_entries(vec![c(1.0); 8]), Err(Error::Shape(_))));
    }

    #[test]
    fn purified_view_shares_storage() {
        let dm = MixedState::<f64>::new(1).unwrap();
        let view = dm.purify_index_view();
        assert_eq!(view.num_qubits, 2);
        assert_eq!(view.amps, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(core::ptr::eq(view.amps.as_ptr(), dm.entries().as_ptr()));

        let half = MixedState::from_rows(&[vec![c(0.5), c(0.0)], vec![c(0.0), c(0.5)]]).unwrap();
        assert_eq!(half.purify_index_view().amps, &[c(0.5), c(0.0), c(0.0), c(0.5)]);
    }

    #[test]
    fn purified_one_one_projector_is_last_index() {
        // Flatten oracle: explicit matrix rows, column-major flattening.
        let dim = 4;
        let rows: Vec<Vec<C64>> =
            (0..dim).map(|r| (0..dim).map(|cc| if r == 3 && cc == 3 { c(1.0) } else { c(0.0) }).collect()).collect();
        let mut flat = Vec::new();
        for col in 0..dim {
            for row in &rows {
                flat.push(row[col]);
            }
        }
        let dm = MixedState::from_rows(&rows).unwrap();
        let view = dm.purify_index_view();
        assert_eq!(view.amps, &flat[..]);
        assert_eq!(view.amps.iter().position(|z| *z == c(1.0)), Some(15));
    }

    #[test]
    fn pseudo_state_round_trip_is_bitwise() {
        let psi = PureState::from_amplitudes(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let dm = MixedState::from_pure(&psi).unwrap();
        let copy = dm.clone();
        let pseudo = dm.into_pseudo_state();
        assert_eq!(pseudo.num_qubits(), 2);
        let back = MixedState::from_pseudo_state(pseudo).unwrap();
        assert_eq!(back, copy);
        assert!(back.hermiticity_error() < 1e-15);
    }
}
