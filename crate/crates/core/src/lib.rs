//! Numerics for the Toda lattice with unbounded, exact and random initial data.
//!
//! Three independent routes to the flow are provided and cross-checked against
//! each other: deformation of spectral measures ([`flow::flow_finite`]),
//! iterated Darboux steps ([`flow::darboux_power_exp`]) and direct integration
//! of the Flaschka equations ([`ode::integrate`]). Around them sit the Weyl
//! function machinery ([`weyl`], [`mfunc`]), periodic lattices and
//! β-ensembles ([`ensemble`]) and the Gevrey-type sequence classes used for
//! moment growth ([`series`]).
//!
//! The crate is `no_std` and needs only `alloc`.
//!
//! ```
//! use toda_core::flow::{flow_finite, FlowSpec};
//! use toda_core::lattice::TridiagonalMatrix;
//!
//! let t = TridiagonalMatrix::new(vec![0.0, 0.0], vec![1.0])?;
//! let moved = flow_finite(&t, &FlowSpec::new(vec![0.0, 1.0], 0.5))?;
//! // two sites from a = 1, b = 0: b_1(t) = tanh 2t
//! assert!((moved.diag[0] - 1f64.tanh()).abs() < 1e-12);
//! # Ok::<(), toda_core::Error>(())
//! ```
#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod flow;
pub mod lattice;
pub mod mfunc;
pub mod ode;
pub mod series;
pub mod spectral;
pub mod weyl;

pub use error::{Error, Result};
