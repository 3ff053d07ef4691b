//! Non-local Follow-the-Leader traffic on a periodic ring, its Eulerian
//! density reconstruction, and a Godunov reference solver for the LWR
//! conservation law `rho_t + (rho v(rho))_x = 0`.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod eulerian;
pub mod godunov;
pub mod registry;
pub mod ring_ops;
pub mod velocity;

pub use dynamics::{RingState, Run, StepBound, TimeStepper, Trajectory};
pub use error::{FtlError, Result};
pub use eulerian::{DensityField, InitialProfile};
pub use godunov::UniformGrid;
pub use ring_ops::PeriodicSeq;
pub use velocity::{VelocityLaw, VelocityModel, WeightProfile};
