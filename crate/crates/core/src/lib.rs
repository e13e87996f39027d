//! Bregman proximal Langevin Monte Carlo: mirror-Langevin samplers for
//! potentials `U = f + g` with nonsmooth `g`, where `g` is replaced by its
//! Bregman-Moreau envelope.

pub mod cli;
pub mod diagnostics;
pub mod envelope;
pub mod error;
pub mod legendre;
pub mod potentials;
mod quad;
pub mod samplers;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
