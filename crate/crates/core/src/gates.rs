//! Gate and channel definitions.
//!
//! All matrices use the internal ordering described in [`crate::linalg`]: for
//! an operator on positions `(p1, .., pm)` the first listed qubit is the least
//! significant local bit. Textbook matrices (first qubit most significant)
//! must go through [`row_major_to_column_major`].
//!
//! The depolarizing channel uses the trace-preserving Kraus set
//! `sqrt(1 - 3p/4) I, sqrt(p)/2 X, sqrt(p)/2 Y, sqrt(p)/2 Z`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;
use num_traits::{One, Zero};

use crate::linalg::Matrix;
use crate::{Error, Result, C64};

/// Tolerance for unitarity and completeness checks at construction.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-8;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn expi(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    T,
    SqrtX,
    SqrtY,
    Swap,
    ISwap,
    Cz,
    Cnot,
    Toffoli,
    Fredkin,
    Rx,
    Ry,
    Rz,
    CRx,
    CRy,
    CRz,
    Fsim,
    Generic,
}

impl GateKind {
    pub const FIXED: [GateKind; 14] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::T,
        GateKind::SqrtX,
        GateKind::SqrtY,
        GateKind::Swap,
        GateKind::ISwap,
        GateKind::Cz,
        GateKind::Cnot,
        GateKind::Toffoli,
        GateKind::Fredkin,
    ];

    pub const PARAMETRIC: [GateKind; 7] =
        [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::CRx, GateKind::CRy, GateKind::CRz, GateKind::Fsim];

    /// Number of qubits, for named kinds.
    pub fn arity(self) -> Option<usize> {
        use GateKind::*;
        match self {
            X | Y | Z | H | S | T | SqrtX | SqrtY | Rx | Ry | Rz => Some(1),
            Swap | ISwap | Cz | Cnot | CRx | CRy | CRz | Fsim => Some(2),
            Toffoli | Fredkin => Some(3),
            Generic => None,
        }
    }

    /// Number of parameters of a parametric kind, zero otherwise.
    pub fn param_count(self) -> usize {
        use GateKind::*;
        match self {
            Rx | Ry | Rz | CRx | CRy | CRz => 1,
            Fsim => 5,
            _ => 0,
        }
    }

    pub fn is_parametric(self) -> bool {
        self.param_count() > 0
    }

    pub fn name(self) -> &'static str {
        use GateKind::*;
        match self {
            X => "X",
            Y => "Y",
            Z => "Z",
            H => "H",
            S => "S",
            T => "T",
            SqrtX => "sqrtX",
            SqrtY => "sqrtY",
            Swap => "SWAP",
            ISwap => "iSWAP",
            Cz => "CZ",
            Cnot => "CNOT",
            Toffoli => "TOFFOLI",
            Fredkin => "FREDKIN",
            Rx => "Rx",
            Ry => "Ry",
            Rz => "Rz",
            CRx => "CRx",
            CRy => "CRy",
            CRz => "CRz",
            Fsim => "FSIM",
            Generic => "Generic",
        }
    }

    /// Case-insensitive lookup by name.
    pub fn from_name(name: &str) -> Option<Self> {
        Self::FIXED
            .iter()
            .chain(Self::PARAMETRIC.iter())
            .chain(core::iter::once(&GateKind::Generic))
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

/// Sparsity pattern of a gate matrix, used by the kernels to pick a fast path.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Dense,
    /// Diagonal entries.
    Diagonal(Vec<C64>),
    /// For each input column, the output row and the factor.
    Monomial(Vec<(usize, C64)>),
}

impl Structure {
    pub(crate) fn of(m: &Matrix) -> Self {
        if m.is_diagonal() {
            Structure::Diagonal((0..m.dim()).map(|i| m[(i, i)]).collect())
        } else if let Some(form) = m.monomial_form() {
            Structure::Monomial(form)
        } else {
            Structure::Dense
        }
    }
}

fn fixed_matrix(kind: GateKind) -> Matrix {
    use GateKind::*;
    let h = FRAC_1_SQRT_2;
    let one = C64::one();
    let zero = C64::zero();
    match kind {
        X => Matrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap(),
        Y => Matrix::from_rows(&[[zero, -I], [I, zero]]).unwrap(),
        Z => Matrix::diagonal(&[one, -one]),
        H => Matrix::from_real_rows(&[[h, h], [h, -h]]).unwrap(),
        S => Matrix::diagonal(&[one, I]),
        T => Matrix::diagonal(&[one, expi(FRAC_PI_4)]),
        SqrtX => Matrix::from_rows(&[[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]]).unwrap(),
        SqrtY => Matrix::from_rows(&[[c(0.5, 0.5), c(-0.5, -0.5)], [c(0.5, 0.5), c(0.5, 0.5)]]).unwrap(),
        Swap => permutation(&[0, 2, 1, 3]),
        ISwap => {
            let mut m = Matrix::zeros(4);
            m[(0, 0)] = one;
            m[(2, 1)] = I;
            m[(1, 2)] = I;
            m[(3, 3)] = one;
            m
        }
        Cz => Matrix::diagonal(&[one, one, one, -one]),
        // Control is the first position (local bit 0).
        Cnot => permutation(&[0, 3, 2, 1]),
        Toffoli => permutation(&[0, 1, 2, 7, 4, 5, 6, 3]),
        Fredkin => permutation(&[0, 1, 2, 5, 4, 3, 6, 7]),
        _ => unreachable!("{kind:?} is not a fixed gate"),
    }
}

/// Matrix mapping column `c` to row `perm[c]`.
fn permutation(perm: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(perm.len());
    for (col, &row) in perm.iter().enumerate() {
        m[(row, col)] = C64::one();
    }
    m
}

fn rotation(kind: GateKind, theta: f64) -> Matrix {
    let (s, co) = (theta / 2.0).sin_cos();
    match kind {
        GateKind::Rx => Matrix::from_rows(&[[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]).unwrap(),
        GateKind::Ry => Matrix::from_real_rows(&[[co, -s], [s, co]]).unwrap(),
        GateKind::Rz => Matrix::diagonal(&[expi(-theta / 2.0), expi(theta / 2.0)]),
        _ => unreachable!(),
    }
}

fn rotation_derivative(kind: GateKind, theta: f64) -> Matrix {
    let (s, co) = (theta / 2.0).sin_cos();
    match kind {
        GateKind::Rx => {
            Matrix::from_rows(&[[c(-s / 2.0, 0.0), c(0.0, -co / 2.0)], [c(0.0, -co / 2.0), c(-s / 2.0, 0.0)]]).unwrap()
        }
        GateKind::Ry => Matrix::from_real_rows(&[[-s / 2.0, -co / 2.0], [co / 2.0, -s / 2.0]]).unwrap(),
        GateKind::Rz => Matrix::diagonal(&[c(0.0, -0.5) * expi(-theta / 2.0), c(0.0, 0.5) * expi(theta / 2.0)]),
        _ => unreachable!(),
    }
}

/// `dR/dtheta R^-1 = -i/2 P` for the Pauli matrix `P` of the rotation axis.
fn rotation_generator(kind: GateKind) -> Matrix {
    let h = c(0.0, -0.5);
    match kind {
        GateKind::Rx => Matrix::from_rows(&[[C64::zero(), h], [h, C64::zero()]]).unwrap(),
        GateKind::Ry => Matrix::from_real_rows(&[[0.0, -0.5], [0.5, 0.0]]).unwrap(),
        GateKind::Rz => Matrix::diagonal(&[h, -h]),
        _ => unreachable!(),
    }
}

fn base_rotation(kind: GateKind) -> GateKind {
    match kind {
        GateKind::CRx => GateKind::Rx,
        GateKind::CRy => GateKind::Ry,
        GateKind::CRz => GateKind::Rz,
        k => k,
    }
}

/// Places `block` on the controlled subspace: controls occupy the low
/// `num_controls` local bits, the target the bit above them. Entries outside
/// the block are taken from `rest` (identity for gates, zero for derivatives).
fn controlled_embed(num_controls: usize, block: &Matrix, rest: C64) -> Matrix {
    let dim = 1usize << (num_controls + 1);
    let on = (1usize << num_controls) - 1;
    let idx = [on, on | (1 << num_controls)];
    let mut m = Matrix::zeros(dim);
    for i in 0..dim {
        if i != idx[0] && i != idx[1] {
            m[(i, i)] = rest;
        }
    }
    for r in 0..2 {
        for cc in 0..2 {
            m[(idx[r], idx[cc])] = block[(r, cc)];
        }
    }
    m
}

/// FSIM with parameter order `(theta, phi, delta_plus, delta_minus, delta_minus_off)`.
fn fsim(p: &[f64]) -> Matrix {
    let (theta, phi, dp, dm, doff) = (p[0], p[1], p[2], p[3], p[4]);
    let (s, co) = theta.sin_cos();
    let mut m = Matrix::zeros(4);
    m[(0, 0)] = C64::one();
    m[(1, 1)] = expi(dp + dm) * co;
    m[(1, 2)] = -I * expi(dp - doff) * s;
    m[(2, 1)] = -I * expi(dp + doff) * s;
    m[(2, 2)] = expi(dp - dm) * co;
    m[(3, 3)] = expi(2.0 * dp - phi);
    m
}

fn fsim_derivative(p: &[f64], which: usize) -> Matrix {
    let (theta, phi, dp, dm, doff) = (p[0], p[1], p[2], p[3], p[4]);
    let (s, co) = theta.sin_cos();
    let mut d = Matrix::zeros(4);
    match which {
        0 => {
            d[(1, 1)] = expi(dp + dm) * (-s);
            d[(1, 2)] = -I * expi(dp - doff) * co;
            d[(2, 1)] = -I * expi(dp + doff) * co;
            d[(2, 2)] = expi(dp - dm) * (-s);
        }
        1 => d[(3, 3)] = -I * expi(2.0 * dp - phi),
        2 => {
            let m = fsim(p);
            for (r, cc) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                d[(r, cc)] = I * m[(r, cc)];
            }
            d[(3, 3)] = 2.0 * I * m[(3, 3)];
        }
        3 => {
            let m = fsim(p);
            d[(1, 1)] = I * m[(1, 1)];
            d[(2, 2)] = -I * m[(2, 2)];
        }
        4 => {
            let m = fsim(p);
            d[(1, 2)] = -I * m[(1, 2)];
            d[(2, 1)] = I * m[(2, 1)];
        }
        _ => unreachable!(),
    }
    d
}

fn parametric_matrix(kind: GateKind, params: &[f64]) -> Matrix {
    match kind {
        GateKind::Rx | GateKind::Ry | GateKind::Rz => rotation(kind, params[0]),
        GateKind::CRx | GateKind::CRy | GateKind::CRz => {
            controlled_embed(1, &rotation(base_rotation(kind), params[0]), C64::one())
        }
        GateKind::Fsim => fsim(params),
        _ => unreachable!(),
    }
}

fn check_positions(positions: &[usize]) -> Result<()> {
    if positions.is_empty() {
        return Err(Error::Shape("an operation needs at least one position".into()));
    }
    for (i, &p) in positions.iter().enumerate() {
        if p == 0 {
            return Err(Error::Validity("qubit positions are 1-based".into()));
        }
        if positions[..i].contains(&p) {
            return Err(Error::Validity(format!("qubit {p} listed twice")));
        }
    }
    Ok(())
}

fn check_dim(positions: &[usize], m: &Matrix) -> Result<()> {
    if positions.len() >= 16 || m.dim() != 1usize << positions.len() {
        return Err(Error::Shape(format!("{}x{} matrix on {} qubits", m.dim(), m.dim(), positions.len())));
    }
    Ok(())
}

/// A unitary gate on one or more qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    positions: Vec<usize>,
    matrix: Matrix,
    kind: GateKind,
    params: Vec<f64>,
    active: Vec<bool>,
    structure: Structure,
}

impl GateOp {
    fn build(positions: Vec<usize>, matrix: Matrix, kind: GateKind, params: Vec<f64>, active: Vec<bool>) -> Self {
        let structure = Structure::of(&matrix);
        GateOp { positions, matrix, kind, params, active, structure }
    }

    /// Generic gate from a matrix in internal ordering.
    pub fn new(positions: &[usize], matrix: Matrix) -> Result<Self> {
        check_positions(positions)?;
        check_dim(positions, &matrix)?;
        let err = matrix.unitarity_error();
        if err > CONSTRUCTION_TOLERANCE {
            return Err(Error::Validity(format!("matrix is not unitary (deviation {err:e})")));
        }
        Ok(Self::build(positions.to_vec(), matrix, GateKind::Generic, Vec::new(), Vec::new()))
    }

    /// A named non-parametric gate. Controlled kinds take their controls first.
    pub fn standard(kind: GateKind, positions: &[usize]) -> Result<Self> {
        if kind.is_parametric() || kind == GateKind::Generic {
            return Err(Error::Unsupported(format!("{} is not a fixed gate", kind.name())));
        }
        if Some(positions.len()) != kind.arity() {
            return Err(Error::Shape(format!(
                "{} acts on {} qubits, got {}",
                kind.name(),
                kind.arity().unwrap_or(0),
                positions.len()
            )));
        }
        check_positions(positions)?;
        Ok(Self::build(positions.to_vec(), fixed_matrix(kind), kind, Vec::new(), Vec::new()))
    }

    /// Applies `target_matrix` to `target` when every control qubit is 1.
    pub fn controlled(controls: &[usize], target: usize, target_matrix: &Matrix) -> Result<Self> {
        if controls.is_empty() || controls.len() > 2 {
            return Err(Error::Shape(format!("{} control qubits, expected 1 or 2", controls.len())));
        }
        if target_matrix.dim() != 2 {
            return Err(Error::Shape("target matrix must be 2x2".into()));
        }
        let mut positions = controls.to_vec();
        positions.push(target);
        check_positions(&positions)?;
        let err = target_matrix.unitarity_error();
        if err > CONSTRUCTION_TOLERANCE {
            return Err(Error::Validity(format!("target matrix is not unitary (deviation {err:e})")));
        }
        let m = controlled_embed(controls.len(), target_matrix, C64::one());
        Ok(Self::build(positions, m, GateKind::Generic, Vec::new(), Vec::new()))
    }

    /// A named parametric gate; `active[k]` marks `params[k]` as variational.
    pub fn parametric(kind: GateKind, positions: &[usize], params: &[f64], active: &[bool]) -> Result<Self> {
        if !kind.is_parametric() {
            return Err(Error::Unsupported(format!("{} is not parametric", kind.name())));
        }
        if Some(positions.len()) != kind.arity() {
            return Err(Error::Shape(format!(
                "{} acts on {} qubits, got {}",
                kind.name(),
                kind.arity().unwrap_or(0),
                positions.len()
            )));
        }
        if params.len() != kind.param_count() || active.len() != params.len() {
            return Err(Error::Shape(format!(
                "{} takes {} parameters, got {} values and {} flags",
                kind.name(),
                kind.param_count(),
                params.len(),
                active.len()
            )));
        }
        check_positions(positions)?;
        let m = parametric_matrix(kind, params);
        Ok(Self::build(positions.to_vec(), m, kind, params.to_vec(), active.to_vec()))
    }

    pub fn x(q: usize) -> Self {
        Self::standard(GateKind::X, &[q]).expect("valid position")
    }
    pub fn y(q: usize) -> Self {
        Self::standard(GateKind::Y, &[q]).expect("valid position")
    }
    pub fn z(q: usize) -> Self {
        Self::standard(GateKind::Z, &[q]).expect("valid position")
    }
    pub fn h(q: usize) -> Self {
        Self::standard(GateKind::H, &[q]).expect("valid position")
    }
    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::standard(GateKind::Cnot, &[control, target])
    }
    pub fn rx(q: usize, theta: f64, active: bool) -> Self {
        Self::parametric(GateKind::Rx, &[q], &[theta], &[active]).expect("valid position")
    }
    pub fn ry(q: usize, theta: f64, active: bool) -> Self {
        Self::parametric(GateKind::Ry, &[q], &[theta], &[active]).expect("valid position")
    }
    pub fn rz(q: usize, theta: f64, active: bool) -> Self {
        Self::parametric(GateKind::Rz, &[q], &[theta], &[active]).expect("valid position")
    }

    #[inline]
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }
    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
    #[inline]
    pub fn kind(&self) -> GateKind {
        self.kind
    }
    #[inline]
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    #[inline]
    pub fn active(&self) -> &[bool] {
        &self.active
    }
    #[inline]
    pub fn structure(&self) -> &Structure {
        &self.structure
    }
    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
    pub fn max_position(&self) -> usize {
        self.positions.iter().copied().max().unwrap_or(0)
    }

    /// Replaces the parameter values and rebuilds the matrix.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!("{} parameters for a gate with {}", params.len(), self.params.len())));
        }
        self.params.copy_from_slice(params);
        if self.kind.is_parametric() {
            self.matrix = parametric_matrix(self.kind, &self.params);
            self.structure = Structure::of(&self.matrix);
        }
        Ok(())
    }

    /// Same operation with every parameter frozen and the kind dropped to `Generic`.
    pub fn to_generic(&self) -> Self {
        Self::build(self.positions.clone(), self.matrix.clone(), GateKind::Generic, Vec::new(), Vec::new())
    }

    pub(crate) fn from_parts_unchecked(positions: Vec<usize>, matrix: Matrix) -> Self {
        Self::build(positions, matrix, GateKind::Generic, Vec::new(), Vec::new())
    }

    /// Analytic derivative of the matrix with respect to parameter `index`.
    pub fn derivative(&self, index: usize) -> Result<Matrix> {
        if !self.kind.is_parametric() {
            return Err(Error::Unsupported(format!("{} gates have no parameters", self.kind.name())));
        }
        if index >= self.params.len() {
            return Err(Error::Domain(format!("parameter {index} of {}", self.params.len())));
        }
        if !self.active[index] {
            return Err(Error::Domain(format!("parameter {index} is not variational")));
        }
        Ok(self.derivative_unchecked(index))
    }

    pub(crate) fn derivative_unchecked(&self, index: usize) -> Matrix {
        match self.kind {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => rotation_derivative(self.kind, self.params[0]),
            GateKind::CRx | GateKind::CRy | GateKind::CRz => {
                controlled_embed(1, &rotation_derivative(base_rotation(self.kind), self.params[0]), C64::zero())
            }
            GateKind::Fsim => fsim_derivative(&self.params, index),
            _ => unreachable!(),
        }
    }

    /// `dU/dtheta_index U^-1`: maps the state after the gate to the
    /// derivative of that state.
    pub(crate) fn generator_unchecked(&self, index: usize) -> Matrix {
        match self.kind {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => rotation_generator(self.kind),
            GateKind::CRx | GateKind::CRy | GateKind::CRz => {
                controlled_embed(1, &rotation_generator(base_rotation(self.kind)), C64::zero())
            }
            GateKind::Fsim => &fsim_derivative(&self.params, index) * &self.matrix.adjoint(),
            _ => unreachable!(),
        }
    }

    /// The inverse gate. Parametric kinds keep their kind with negated
    /// angles; kinds whose inverse has no named form become `Generic`.
    pub fn inverse(&self) -> Self {
        use GateKind::*;
        match self.kind {
            X | Y | Z | H | Swap | Cz | Cnot | Toffoli | Fredkin => self.clone(),
            Rx | Ry | Rz | CRx | CRy | CRz => {
                let params = [-self.params[0]];
                Self::build(
                    self.positions.clone(),
                    parametric_matrix(self.kind, &params),
                    self.kind,
                    params.to_vec(),
                    self.active.clone(),
                )
            }
            Fsim => {
                let p = &self.params;
                let params = [-p[0], -p[1], -p[2], -p[3], p[4]];
                Self::build(
                    self.positions.clone(),
                    parametric_matrix(Fsim, &params),
                    Fsim,
                    params.to_vec(),
                    self.active.clone(),
                )
            }
            S | T | SqrtX | SqrtY | ISwap | Generic => {
                Self::from_parts_unchecked(self.positions.clone(), self.matrix.adjoint())
            }
        }
    }

    /// `U ⊗ conj(U)` acting on the ket positions and their bra mirrors.
    pub fn superoperator(&self) -> Superoperator {
        Superoperator { positions: self.positions.clone(), matrix: Matrix::kron(&self.matrix, &self.matrix.conj()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    AmplitudeDamping(f64),
    PhaseDamping(f64),
    Depolarizing(f64),
    Generic,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::AmplitudeDamping(_) => "AmplitudeDamping",
            ChannelKind::PhaseDamping(_) => "PhaseDamping",
            ChannelKind::Depolarizing(_) => "Depolarizing",
            ChannelKind::Generic => "Generic",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            ChannelKind::AmplitudeDamping(g) | ChannelKind::PhaseDamping(g) | ChannelKind::Depolarizing(g) => Some(g),
            ChannelKind::Generic => None,
        }
    }
}

/// A completely positive, trace-preserving map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOp {
    positions: Vec<usize>,
    kraus: Vec<Matrix>,
    kind: ChannelKind,
}

/// `max |Σ K†K - I|`.
pub fn completeness_error(kraus: &[Matrix]) -> f64 {
    let dim = kraus[0].dim();
    let mut sum = Matrix::zeros(dim);
    for k in kraus {
        sum = &sum + &(&k.adjoint() * k);
    }
    sum.max_abs_diff(&Matrix::identity(dim))
}

impl ChannelOp {
    pub fn new(positions: &[usize], kraus: Vec<Matrix>) -> Result<Self> {
        check_positions(positions)?;
        if kraus.is_empty() {
            return Err(Error::Validity("a channel needs at least one Kraus operator".into()));
        }
        for k in &kraus {
            check_dim(positions, k)?;
        }
        let err = completeness_error(&kraus);
        if err > CONSTRUCTION_TOLERANCE {
            return Err(Error::Validity(format!("Kraus operators are not complete (deviation {err:e})")));
        }
        Ok(ChannelOp { positions: positions.to_vec(), kraus, kind: ChannelKind::Generic })
    }

    /// One of the named single-qubit noise channels on qubit `pos`.
    pub fn standard(kind: ChannelKind, pos: usize) -> Result<Self> {
        let p = kind
            .parameter()
            .ok_or_else(|| Error::Unsupported("Generic channels are built with ChannelOp::new".into()))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("{} strength {p} outside [0, 1]", kind.name())));
        }
        check_positions(&[pos])?;
        let zero = C64::zero();
        let r = |x: f64| C64::new(x, 0.0);
        let kraus = match kind {
            ChannelKind::AmplitudeDamping(g) => vec![
                Matrix::diagonal(&[r(1.0), r((1.0 - g).sqrt())]),
                Matrix::from_rows(&[[zero, r(g.sqrt())], [zero, zero]]).unwrap(),
            ],
            ChannelKind::PhaseDamping(g) => {
                vec![Matrix::diagonal(&[r(1.0), r((1.0 - g).sqrt())]), Matrix::diagonal(&[zero, r(g.sqrt())])]
            }
            ChannelKind::Depolarizing(p) => {
                let w = r(p.sqrt() / 2.0);
                vec![
                    Matrix::identity(2).scale(r((1.0 - 0.75 * p).sqrt())),
                    fixed_matrix(GateKind::X).scale(w),
                    fixed_matrix(GateKind::Y).scale(w),
                    fixed_matrix(GateKind::Z).scale(w),
                ]
            }
            ChannelKind::Generic => unreachable!(),
        };
        Ok(ChannelOp { positions: vec![pos], kraus, kind })
    }

    pub fn amplitude_damping(pos: usize, gamma: f64) -> Result<Self> {
        Self::standard(ChannelKind::AmplitudeDamping(gamma), pos)
    }
    pub fn phase_damping(pos: usize, gamma: f64) -> Result<Self> {
        Self::standard(ChannelKind::PhaseDamping(gamma), pos)
    }
    pub fn depolarizing(pos: usize, p: f64) -> Result<Self> {
        Self::standard(ChannelKind::Depolarizing(p), pos)
    }

    #[inline]
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }
    #[inline]
    pub fn kraus(&self) -> &[Matrix] {
        &self.kraus
    }
    #[inline]
    pub fn kind(&self) -> ChannelKind {
        self.kind
    }
    pub fn max_position(&self) -> usize {
        self.positions.iter().copied().max().unwrap_or(0)
    }

    /// `M[(τ,τ'),(σ,σ')] = Σ_s K_s[τ,σ] conj(K_s[τ',σ'])`, with ket indices on
    /// the low local bits and bra indices above them.
    pub fn superoperator(&self) -> Superoperator {
        let dim = self.kraus[0].dim();
        let mut m = Matrix::zeros(dim * dim);
        for k in &self.kraus {
            m = &m + &Matrix::kron(k, &k.conj());
        }
        Superoperator { positions: self.positions.clone(), matrix: m }
    }
}

/// A linear map on vectorized density matrices, acting as a `2m`-qubit gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    positions: Vec<usize>,
    matrix: Matrix,
}

impl Superoperator {
    /// Ket positions; the bra mirrors are `p + n` on an `n`-qubit density matrix.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Positions on the `2n`-qubit pseudo state: kets first, then bras.
    pub fn pseudo_positions(&self, n: usize) -> Vec<usize> {
        self.positions.iter().copied().chain(self.positions.iter().map(|p| p + n)).collect()
    }
}

/// Re-indexes a matrix from textbook order (first qubit most significant) to
/// internal order (first qubit least significant) by reversing the bits of
/// every row and column index. The map is its own inverse.
pub fn row_major_to_column_major(matrix: &Matrix, num_qubits: usize) -> Result<Matrix> {
    if num_qubits >= 16 || matrix.dim() != 1usize << num_qubits {
        return Err(Error::Shape(format!(
            "{}x{} matrix is not a {num_qubits}-qubit operator",
            matrix.dim(),
            matrix.dim()
        )));
    }
    let rev = |i: usize| -> usize { (0..num_qubits).fold(0, |acc, b| acc | (((i >> b) & 1) << (num_qubits - 1 - b))) };
    Ok(Matrix::from_fn(matrix.dim(), |r, cc| matrix[(rev(r), rev(cc))]))
}
