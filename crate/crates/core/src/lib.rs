//! Photon emission from a dephased quantum dot in a cavity: closed-form
//! dynamics, pole/residue asymptotics, spectra, photon purity and an
//! independent master-equation oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod observables;
pub mod oracle;
pub mod params;
pub mod photon_state;
pub mod poles;
pub mod quadrature;
pub mod roots;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
