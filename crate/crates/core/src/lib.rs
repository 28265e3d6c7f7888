// SPDX-License-Identifier: Apache-2.0

//! Distributed matrix mechanism: packed secret sharing over a prime field,
//! linear resharing between client committees, discretization and discrete
//! Gaussian noise, privacy accounting, matrix factorizations, an end-to-end
//! protocol simulator and an analytic communication-cost model.

pub mod accountant;
pub mod cost;
pub mod discretization;
pub mod error;
pub mod factorization;
pub mod field;
pub mod noise;
pub mod resharing;
pub mod sharing;
pub mod simulator;

pub use error::{Error, Result};
pub use field::{Fe, FieldSpec};
pub use sharing::{PackedShamir, PackedSharing, SharingParams};
