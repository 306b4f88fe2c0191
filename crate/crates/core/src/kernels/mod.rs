//! Gate and channel application.
//!
//! [`apply_gate_naive`] is the plain contraction used as a correctness
//! oracle. [`apply_gate_fast`] aggregates eight groups of `2^m` coupled
//! amplitudes into a `2^m x 8` batch and multiplies it by the gate matrix,
//! picking diagonal or permutation fast paths from the matrix structure, and
//! runs disjoint segments of the state on a thread pool.
//!
//! Density matrices are updated through their `2n`-qubit pseudo pure state:
//! a gate `U` acts as `U` on the ket positions and `conj(U)` on the bra
//! positions `p + n`, and a channel acts as its superoperator on both.

mod exec;
mod plan;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

pub use plan::{plan_apply, AggregationCase, ApplyPlan, AGGREGATION_THRESHOLD, BATCH, MIN_SEGMENT_AMPLITUDES};

use exec::{cast, drive, drive_dyn, drive_reverse, drive_reverse_dyn, BlockOp, DynOp};
pub(crate) use exec::{fill_chunks, map_ranges};

use crate::gates::{ChannelOp, GateOp, Structure, Superoperator};
use crate::linalg::Matrix;
use crate::statespace::{MixedState, PureState};
use crate::{Error, Real, Result, C64};

/// Environment variable read by [`ThreadConfig::from_env`].
pub const THREADS_ENV: &str = "VQSIM_NUM_THREADS";

/// Default state size, in amplitudes, below which kernels run on one thread.
pub const DEFAULT_MIN_WORK: usize = 1 << 14;

/// Thread count and serial cutoff for the kernels.
#[derive(Clone)]
pub struct ThreadConfig {
    pub num_threads: usize,
    pub min_work_per_thread: usize,
    #[cfg(feature = "parallel")]
    pool: Option<alloc::sync::Arc<rayon::ThreadPool>>,
}

impl core::fmt::Debug for ThreadConfig {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ThreadConfig")
            .field("num_threads", &self.num_threads)
            .field("min_work_per_thread", &self.min_work_per_thread)
            .finish()
    }
}

impl ThreadConfig {
    pub fn serial() -> Self {
        ThreadConfig {
            num_threads: 1,
            min_work_per_thread: DEFAULT_MIN_WORK,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// `threads` workers (at least one). Without the `parallel` feature the
    /// count is recorded but execution stays serial.
    pub fn new(threads: usize) -> Self {
        let threads = threads.max(1);
        #[cfg(feature = "parallel")]
        let pool = if threads > 1 {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok().map(alloc::sync::Arc::new)
        } else {
            None
        };
        ThreadConfig {
            num_threads: threads,
            min_work_per_thread: DEFAULT_MIN_WORK,
            #[cfg(feature = "parallel")]
            pool,
        }
    }

    /// Reads the thread count from `VQSIM_NUM_THREADS`, falling back to one thread.
    #[cfg(feature = "std")]
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(1);
        Self::new(threads)
    }

    pub fn with_min_work(mut self, amplitudes: usize) -> Self {
        self.min_work_per_thread = amplitudes;
        self
    }

    #[cfg(feature = "parallel")]
    pub(crate) fn pool(&self) -> Option<&rayon::ThreadPool> {
        self.pool.as_deref()
    }
}

impl Default for ThreadConfig {
    fn default() -> Self {
        #[cfg(feature = "std")]
        {
            Self::from_env()
        }
        #[cfg(not(feature = "std"))]
        {
            Self::serial()
        }
    }
}

fn check_operator(data_len: usize, n: usize, positions: &[usize], m: &Matrix) -> Result<()> {
    if data_len != 1usize << n {
        return Err(Error::Shape(format!("{data_len} amplitudes for {n} qubits")));
    }
    if m.dim() != 1usize << positions.len() {
        return Err(Error::Shape(format!("{}x{} matrix on {} positions", m.dim(), m.dim(), positions.len())));
    }
    for &p in positions {
        if p == 0 || p > n {
            return Err(Error::Index { index: p, num_qubits: n });
        }
    }
    Ok(())
}

/// Plain contraction over every group of coupled amplitudes, one group at a time.
pub fn apply_matrix_naive<T: Real>(data: &mut [Complex<T>], n: usize, positions: &[usize], m: &Matrix) -> Result<()> {
    check_operator(data.len(), n, positions, m)?;
    let dim = m.dim();
    let mask: usize = positions.iter().map(|p| 1usize << (p - 1)).sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|r| positions.iter().enumerate().filter(|(k, _)| (r >> k) & 1 == 1).map(|(_, p)| 1usize << (p - 1)).sum())
        .collect();
    let mat: Vec<Complex<T>> = m.as_slice().iter().map(|&z| cast(z)).collect();
    let mut x = vec![Complex::<T>::new(T::zero(), T::zero()); dim];
    for base in 0..data.len() {
        if base & mask != 0 {
            continue;
        }
        for (slot, off) in x.iter_mut().zip(&offsets) {
            *slot = data[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &mat[r * dim..(r + 1) * dim];
            data[base + off] = row.iter().zip(&x).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b);
        }
    }
    Ok(())
}

pub fn apply_gate_naive<T: Real>(state: &mut PureState<T>, g: &GateOp) -> Result<()> {
    let n = state.num_qubits();
    apply_matrix_naive(state.amplitudes_mut(), n, g.positions(), g.matrix())
}

fn is_identity(structure: &Structure) -> bool {
    matches!(structure, Structure::Diagonal(d) if d.iter().all(|z| *z == C64::new(1.0, 0.0)))
}

fn batched<T: Real, const R: usize>(
    plan: &ApplyPlan,
    cfg: &ThreadConfig,
    data: &mut [Complex<T>],
    m: &Matrix,
    s: &Structure,
) {
    let op = BlockOp::<T, R>::new(m, s);
    if plan.contiguous_lanes() {
        drive::<T, R, true>(plan, cfg, data, &op)
    } else {
        drive::<T, R, false>(plan, cfg, data, &op)
    }
}

/// Applies `m` (with precomputed structure) to 1-based `positions` of an
/// `n`-qubit amplitude array.
pub fn apply_matrix_with<T: Real>(
    data: &mut [Complex<T>],
    n: usize,
    positions: &[usize],
    m: &Matrix,
    structure: &Structure,
    cfg: &ThreadConfig,
) -> Result<()> {
    check_operator(data.len(), n, positions, m)?;
    if is_identity(structure) {
        return Ok(());
    }
    let plan = plan_apply(positions, n, cfg)?;
    if plan.batch != BATCH {
        drive_dyn(&plan, cfg, data, &DynOp::new(m));
        return Ok(());
    }
    match positions.len() {
        1 => batched::<T, 2>(&plan, cfg, data, m, structure),
        2 => batched::<T, 4>(&plan, cfg, data, m, structure),
        3 => batched::<T, 8>(&plan, cfg, data, m, structure),
        4 => batched::<T, 16>(&plan, cfg, data, m, structure),
        _ => drive_dyn(&plan, cfg, data, &DynOp::new(m)),
    }
    Ok(())
}

pub fn apply_matrix<T: Real>(
    data: &mut [Complex<T>],
    n: usize,
    positions: &[usize],
    m: &Matrix,
    cfg: &ThreadConfig,
) -> Result<()> {
    apply_matrix_with(data, n, positions, m, &Structure::of(m), cfg)
}

pub fn apply_gate_fast<T: Real>(state: &mut PureState<T>, g: &GateOp, cfg: &ThreadConfig) -> Result<()> {
    let n = state.num_qubits();
    apply_matrix_with(state.amplitudes_mut(), n, g.positions(), g.matrix(), g.structure(), cfg)
}

fn check_mixed_positions(positions: &[usize], n: usize) -> Result<()> {
    match positions.iter().find(|&&p| p == 0 || p > n) {
        Some(&p) => Err(Error::Index { index: p, num_qubits: n }),
        None => Ok(()),
    }
}

/// `rho <- U rho U†`: `U` on the ket positions, `conj(U)` on the bra positions.
pub fn apply_gate_mixed<T: Real>(dm: &mut MixedState<T>, g: &GateOp, cfg: &ThreadConfig) -> Result<()> {
    let n = dm.num_qubits();
    check_mixed_positions(g.positions(), n)?;
    let bra: Vec<usize> = g.positions().iter().map(|p| p + n).collect();
    let conj = g.matrix().conj();
    let view = dm.purify_index_view_mut();
    apply_matrix_with(view.amps, 2 * n, g.positions(), g.matrix(), g.structure(), cfg)?;
    apply_matrix_with(view.amps, 2 * n, &bra, &conj, &Structure::of(&conj), cfg)
}

/// Applies a superoperator as a `2m`-qubit gate on the pseudo pure state.
pub fn apply_superoperator<T: Real>(dm: &mut MixedState<T>, s: &Superoperator, cfg: &ThreadConfig) -> Result<()> {
    let n = dm.num_qubits();
    check_mixed_positions(s.positions(), n)?;
    let positions = s.pseudo_positions(n);
    let view = dm.purify_index_view_mut();
    apply_matrix(view.amps, 2 * n, &positions, s.matrix(), cfg)
}

pub fn apply_channel<T: Real>(dm: &mut MixedState<T>, c: &ChannelOp, cfg: &ThreadConfig) -> Result<()> {
    check_mixed_positions(c.positions(), dm.num_qubits())?;
    apply_superoperator(dm, &c.superoperator(), cfg)
}

fn reverse_batched<T: Real, const R: usize>(
    plan: &ApplyPlan,
    cfg: &ThreadConfig,
    phi: &mut [Complex<T>],
    phi_map: &Matrix,
    psi: &mut [Complex<T>],
    psi_map: &Matrix,
    cross: bool,
) -> Vec<Complex<T>> {
    let a = BlockOp::<T, R>::new(phi_map, &Structure::of(phi_map));
    let b = BlockOp::<T, R>::new(psi_map, &Structure::of(psi_map));
    if plan.contiguous_lanes() {
        drive_reverse::<T, R, true>(plan, cfg, phi, &a, psi, &b, cross)
    } else {
        drive_reverse::<T, R, false>(plan, cfg, phi, &a, psi, &b, cross)
    }
}

/// One fused step of a reverse sweep over two equally sized states:
/// `g_k = <psi| ops_k |phi>` for every matrix in `ops`, then
/// `phi <- phi_map phi` and `psi <- psi_map psi`. The overlaps come from a
/// single `2^m x 2^m` cross matrix accumulated in the same pass, so their
/// cost does not grow with the number of matrices. Partial sums are reduced
/// in a fixed order.
#[allow(clippy::too_many_arguments)]
pub fn reverse_step<T: Real>(
    phi: &mut [Complex<T>],
    phi_map: &Matrix,
    psi: &mut [Complex<T>],
    psi_map: &Matrix,
    ops: &[Matrix],
    n: usize,
    positions: &[usize],
    cfg: &ThreadConfig,
) -> Result<Vec<C64>> {
    check_operator(phi.len(), n, positions, phi_map)?;
    check_operator(psi.len(), n, positions, psi_map)?;
    for d in ops {
        check_operator(phi.len(), n, positions, d)?;
    }
    let plan = plan_apply(positions, n, cfg)?;
    let cross = !ops.is_empty();
    let k = if plan.batch != BATCH || positions.len() > 4 {
        drive_reverse_dyn(&plan, cfg, phi, &DynOp::new(phi_map), psi, &DynOp::new(psi_map), cross)
    } else {
        match positions.len() {
            1 => reverse_batched::<T, 2>(&plan, cfg, phi, phi_map, psi, psi_map, cross),
            2 => reverse_batched::<T, 4>(&plan, cfg, phi, phi_map, psi, psi_map, cross),
            3 => reverse_batched::<T, 8>(&plan, cfg, phi, phi_map, psi, psi_map, cross),
            _ => reverse_batched::<T, 16>(&plan, cfg, phi, phi_map, psi, psi_map, cross),
        }
    };
    let k: Vec<C64> = k.into_iter().map(|z| C64::new(z.re.as_f64(), z.im.as_f64())).collect();
    Ok(ops.iter().map(|e| e.as_slice().iter().zip(&k).map(|(a, b)| a * b).sum()).collect())
}

#[cfg(test)]
mod tests;
