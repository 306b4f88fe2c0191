//! Simulation of noiseless and noisy variational quantum circuits.
//!
//! Pure states are stored as `2^n` amplitudes and mixed states as `4^n`
//! density-matrix entries, both column-major with qubit 1 as the fastest
//! varying index. A density matrix doubles as a `2n`-qubit pseudo pure state,
//! so every channel is applied through the same gate kernels as a
//! `2m`-qubit superoperator.
//!
//! Gradients of expectation-value losses are computed in reverse mode by
//! running the circuit backwards with gate inverses, holding only two
//! full-size working states at any time.
//!
//! The crate is `no_std` (with `alloc`) when built without default features.
//! The `parallel` feature (on by default) enables shared-memory execution of
//! the gate kernels through rayon.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autodiff;
pub mod circuit;
mod error;
pub mod gates;
pub mod kernels;
pub mod linalg;
pub mod observables;
mod scalar;
pub mod statespace;

pub use autodiff::{finite_difference_gradient, gradient_mixed, gradient_pure, loss_mixed, loss_pure, GradientResult};
pub use circuit::{Circuit, Element, MeasurementOutcome, QuantumState};
pub use error::{Error, Result};
pub use gates::{ChannelKind, ChannelOp, GateKind, GateOp, Superoperator};
pub use kernels::{ApplyPlan, ThreadConfig};
pub use linalg::Matrix;
pub use observables::{PauliLabel, PauliOperator, PauliTerm};
pub use scalar::{Precision, Real};
pub use statespace::{basis_index, MixedState, PureState};

pub use num_complex::Complex;
/// Double-precision complex number used for gate and channel matrices.
pub type C64 = Complex<f64>;
