#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod collectivity;
pub mod ep;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod par;
pub mod phase_loop;
pub mod secular;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{Angle, CouplingParameter, EffectiveModel, ModelSpec};
