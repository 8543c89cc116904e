//! Simulation laboratory for countable-armed bandits with two arm types.
//!
//! Numerical kernels (schedules, bounds, index computations) are generic over
//! [`Real`]; simulations run in `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta;
pub mod cab;
pub mod engine;
pub mod error;
pub mod policy;
pub mod reward;
pub mod scalar;
pub mod schedule;
pub mod stream;
pub mod zerogap;

pub use error::{Error, Result};
pub use policy::{ArmSlot, Policy, PolicyState};
pub use reward::{Arm, ArmType, CabInstance, Reservoir, RewardKind, RewardModel};
pub use scalar::Real;
pub use schedule::{validate_schedule, ThetaSchedule, ThetaTable, ValidationReport};
pub use stream::{derive_stream, Seed, SimRng};

pub type Theta = ThetaSchedule<f64>;
pub type Theta32 = ThetaSchedule<f32>;
pub type EtcBound = cab::EtcBound<f64>;
pub type EtcBound32 = cab::EtcBound<f32>;
pub type TailBound = cab::TailBound<f64>;
pub type TailBound32 = cab::TailBound<f32>;
