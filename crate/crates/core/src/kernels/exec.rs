//! Block drivers: gather a `rows x 8` batch of amplitudes, transform it in
//! registers, scatter it back. Parallel segments come from an [`ApplyPlan`]
//! and touch pairwise disjoint index sets.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex;
use num_traits::Zero;

use super::plan::{split_outer, ApplyPlan, BATCH};
use super::ThreadConfig;
use crate::gates::Structure;
use crate::linalg::Matrix;
use crate::Real;

pub(crate) type Block<T, const R: usize> = [[Complex<T>; BATCH]; R];

/// Raw pointer that may cross threads. Segments of one plan never alias.
#[derive(Clone, Copy)]
pub(crate) struct Shared<T>(*mut T);

unsafe impl<T: Send> Send for Shared<T> {}
unsafe impl<T: Send> Sync for Shared<T> {}

impl<T> Shared<T> {
    #[inline(always)]
    fn get(self) -> *mut T {
        self.0
    }
}

pub(crate) fn run_segments<R, F>(plan: &ApplyPlan, cfg: &ThreadConfig, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    run_on(&plan.segments, cfg, f)
}

fn run_on<R, F>(ranges: &[Range<usize>], cfg: &ThreadConfig, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if ranges.len() > 1 {
        if let Some(pool) = cfg.pool() {
            use rayon::prelude::*;
            return pool.install(|| ranges.par_iter().map(|s| f(s.clone())).collect());
        }
    }
    let _ = cfg;
    ranges.iter().map(|s| f(s.clone())).collect()
}

/// Maps `f` over contiguous ranges covering `0..len`, in range order.
pub(crate) fn map_ranges<R, F>(len: usize, cfg: &ThreadConfig, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    run_on(&split_outer(len, 1, len, cfg), cfg, f)
}

/// Calls `f(start, chunk)` on disjoint chunks covering `out`.
pub(crate) fn fill_chunks<T, F>(out: &mut [T], cfg: &ThreadConfig, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let ranges = split_outer(out.len(), 1, out.len(), cfg);
    let mut chunks = Vec::with_capacity(ranges.len());
    let mut rest = out;
    for r in &ranges {
        let (head, tail) = rest.split_at_mut(r.len());
        chunks.push((r.start, head));
        rest = tail;
    }
    #[cfg(feature = "parallel")]
    if chunks.len() > 1 {
        if let Some(pool) = cfg.pool() {
            use rayon::prelude::*;
            pool.install(|| chunks.into_par_iter().for_each(|(s, c)| f(s, c)));
            return;
        }
    }
    for (s, c) in chunks {
        f(s, c);
    }
}

#[inline(always)]
pub(crate) fn cast<T: Real>(z: crate::C64) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

/// A small operator specialised to its sparsity pattern.
pub(crate) enum BlockOp<T: Real, const R: usize> {
    Dense([[Complex<T>; R]; R]),
    Diagonal([Complex<T>; R]),
    Monomial([(usize, Complex<T>); R]),
}

impl<T: Real, const R: usize> BlockOp<T, R> {
    pub(crate) fn new(m: &Matrix, structure: &Structure) -> Self {
        debug_assert_eq!(m.dim(), R);
        match structure {
            Structure::Diagonal(d) => BlockOp::Diagonal(core::array::from_fn(|i| cast(d[i]))),
            Structure::Monomial(f) => BlockOp::Monomial(core::array::from_fn(|i| (f[i].0, cast(f[i].1)))),
            Structure::Dense => BlockOp::Dense(core::array::from_fn(|r| core::array::from_fn(|c| cast(m[(r, c)])))),
        }
    }

    #[inline(always)]
    pub(crate) fn apply(&self, b: &mut Block<T, R>) {
        match self {
            BlockOp::Dense(m) => {
                let x = *b;
                for r in 0..R {
                    let mut acc = [Complex::<T>::zero(); BATCH];
                    for k in 0..R {
                        let mk = m[r][k];
                        for l in 0..BATCH {
                            acc[l] = acc[l] + mk * x[k][l];
                        }
                    }
                    b[r] = acc;
                }
            }
            BlockOp::Diagonal(d) => {
                for (row, &dr) in b.iter_mut().zip(d.iter()) {
                    for v in row.iter_mut() {
                        *v = *v * dr;
                    }
                }
            }
            BlockOp::Monomial(f) => {
                let x = *b;
                for c in 0..R {
                    let (row, v) = f[c];
                    for l in 0..BATCH {
                        b[row][l] = x[c][l] * v;
                    }
                }
            }
        }
    }
}

#[inline(always)]
unsafe fn load<T: Real, const R: usize, const CONTIG: bool>(
    p: *const Complex<T>,
    base: usize,
    rows: &[usize; R],
    lanes: &[usize; BATCH],
) -> Block<T, R> {
    let mut b = [[Complex::<T>::zero(); BATCH]; R];
    for r in 0..R {
        let start = base + rows[r];
        for l in 0..BATCH {
            let idx = if CONTIG { start + l } else { start + lanes[l] };
            b[r][l] = *p.add(idx);
        }
    }
    b
}

#[inline(always)]
unsafe fn store<T: Real, const R: usize, const CONTIG: bool>(
    p: *mut Complex<T>,
    base: usize,
    rows: &[usize; R],
    lanes: &[usize; BATCH],
    b: &Block<T, R>,
) {
    for r in 0..R {
        let start = base + rows[r];
        for l in 0..BATCH {
            let idx = if CONTIG { start + l } else { start + lanes[l] };
            *p.add(idx) = b[r][l];
        }
    }
}

fn offsets<const R: usize>(plan: &ApplyPlan) -> ([usize; R], [usize; BATCH]) {
    let rows: [usize; R] = plan.row_offsets[..].try_into().expect("row count");
    let lanes: [usize; BATCH] = plan.lane_offsets[..].try_into().expect("batch width");
    (rows, lanes)
}

/// Applies `op` to every block of `data`.
pub(crate) fn drive<T: Real, const R: usize, const CONTIG: bool>(
    plan: &ApplyPlan,
    cfg: &ThreadConfig,
    data: &mut [Complex<T>],
    op: &BlockOp<T, R>,
) {
    assert_eq!(data.len(), 1usize << plan.num_qubits);
    let (rows, lanes) = offsets::<R>(plan);
    let ptr = Shared(data.as_mut_ptr());
    run_segments(plan, cfg, |seg| {
        let p = ptr.get();
        for o in seg {
            let base = plan.base(o);
            // SAFETY: block indices are < 2^n and distinct across all (segment, outer) pairs.
            unsafe {
                let mut b = load::<T, R, CONTIG>(p, base, &rows, &lanes);
                op.apply(&mut b);
                store::<T, R, CONTIG>(p, base, &rows, &lanes, &b);
            }
        }
    });
}

/// One reverse-sweep step over two states sharing a plan. With `cross`
/// set, returns `K[r * R + c] = Σ conj(psi_r) phi_c` over all groups, taken
/// before the maps, so that `<psi|E|phi> = Σ E[r][c] K[r][c]` for any `E`.
/// Then `phi <- phi_map phi` and `psi <- psi_map psi`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn drive_reverse<T: Real, const R: usize, const CONTIG: bool>(
    plan: &ApplyPlan,
    cfg: &ThreadConfig,
    phi: &mut [Complex<T>],
    phi_map: &BlockOp<T, R>,
    psi: &mut [Complex<T>],
    psi_map: &BlockOp<T, R>,
    cross: bool,
) -> Vec<Complex<T>> {
    assert_eq!(phi.len(), 1usize << plan.num_qubits);
    assert_eq!(psi.len(), phi.len());
    let (rows, lanes) = offsets::<R>(plan);
    let pphi = Shared(phi.as_mut_ptr());
    let ppsi = Shared(psi.as_mut_ptr());
    let len = if cross { R * R } else { 0 };
    let partials = run_segments(plan, cfg, |seg| {
        let (a, b) = (pphi.get(), ppsi.get());
        let mut k = [[Complex::<T>::zero(); R]; R];
        for o in seg {
            let base = plan.base(o);
            // SAFETY: as in `drive`; the two buffers are distinct allocations.
            unsafe {
                let mut x = load::<T, R, CONTIG>(a, base, &rows, &lanes);
                let mut y = load::<T, R, CONTIG>(b, base, &rows, &lanes);
                if cross {
                    for r in 0..R {
                        for c in 0..R {
                            let mut acc = Complex::<T>::zero();
                            for l in 0..BATCH {
                                acc = acc + y[r][l].conj() * x[c][l];
                            }
                            k[r][c] = k[r][c] + acc;
                        }
                    }
                }
                phi_map.apply(&mut x);
                store::<T, R, CONTIG>(a, base, &rows, &lanes, &x);
                psi_map.apply(&mut y);
                store::<T, R, CONTIG>(b, base, &rows, &lanes, &y);
            }
        }
        k.iter().flatten().copied().take(len).collect::<Vec<_>>()
    });
    sum_partials(partials, len)
}

fn sum_partials<T: Real>(partials: Vec<Vec<Complex<T>>>, len: usize) -> Vec<Complex<T>> {
    let mut total = vec![Complex::<T>::zero(); len];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t = *t + v;
        }
    }
    total
}

/// Dense operator of any size applied group by group; used when no batch of
/// eight lanes fits or the operator is larger than four qubits.
pub(crate) struct DynOp<T: Real> {
    dim: usize,
    m: Vec<Complex<T>>,
}

impl<T: Real> DynOp<T> {
    pub(crate) fn new(m: &Matrix) -> Self {
        DynOp { dim: m.dim(), m: m.as_slice().iter().map(|&z| cast(z)).collect() }
    }

    #[inline]
    fn apply(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        for (o, row) in out.iter_mut().zip(self.m.chunks_exact(self.dim)) {
            *o = row.iter().zip(x).fold(Complex::zero(), |acc, (a, b)| acc + *a * *b);
        }
    }
}

pub(crate) fn drive_dyn<T: Real>(plan: &ApplyPlan, cfg: &ThreadConfig, data: &mut [Complex<T>], op: &DynOp<T>) {
    assert_eq!(data.len(), 1usize << plan.num_qubits);
    let ptr = Shared(data.as_mut_ptr());
    run_segments(plan, cfg, |seg| {
        let p = ptr.get();
        let mut x = vec![Complex::<T>::zero(); op.dim];
        let mut y = x.clone();
        for o in seg {
            let base = plan.base(o);
            for &l in &plan.lane_offsets {
                // SAFETY: as in `drive`.
                unsafe {
                    for (slot, &r) in x.iter_mut().zip(&plan.row_offsets) {
                        *slot = *p.add(base + l + r);
                    }
                    op.apply(&x, &mut y);
                    for (v, &r) in y.iter().zip(&plan.row_offsets) {
                        *p.add(base + l + r) = *v;
                    }
                }
            }
        }
    });
}

pub(crate) fn drive_reverse_dyn<T: Real>(
    plan: &ApplyPlan,
    cfg: &ThreadConfig,
    phi: &mut [Complex<T>],
    phi_map: &DynOp<T>,
    psi: &mut [Complex<T>],
    psi_map: &DynOp<T>,
    cross: bool,
) -> Vec<Complex<T>> {
    assert_eq!(phi.len(), 1usize << plan.num_qubits);
    assert_eq!(psi.len(), phi.len());
    let dim = phi_map.dim;
    let len = if cross { dim * dim } else { 0 };
    let pphi = Shared(phi.as_mut_ptr());
    let ppsi = Shared(psi.as_mut_ptr());
    let partials = run_segments(plan, cfg, |seg| {
        let (a, b) = (pphi.get(), ppsi.get());
        let mut k = vec![Complex::<T>::zero(); len];
        let mut x = vec![Complex::<T>::zero(); dim];
        let mut y = x.clone();
        let mut t = x.clone();
        for o in seg {
            let base = plan.base(o);
            for &l in &plan.lane_offsets {
                // SAFETY: as in `drive_reverse`.
                unsafe {
                    for (i, &r) in plan.row_offsets.iter().enumerate() {
                        x[i] = *a.add(base + l + r);
                        y[i] = *b.add(base + l + r);
                    }
                    if cross {
                        for r in 0..dim {
                            let yr = y[r].conj();
                            for c in 0..dim {
                                k[r * dim + c] = k[r * dim + c] + yr * x[c];
                            }
                        }
                    }
                    phi_map.apply(&x, &mut t);
                    for (i, &r) in plan.row_offsets.iter().enumerate() {
                        *a.add(base + l + r) = t[i];
                    }
                    psi_map.apply(&y, &mut t);
                    for (i, &r) in plan.row_offsets.iter().enumerate() {
                        *b.add(base + l + r) = t[i];
                    }
                }
            }
        }
        k
    });
    sum_partials(partials, len)
}
