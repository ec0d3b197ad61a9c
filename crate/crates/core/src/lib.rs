//! Design and verification of hybrid multiresonator quantum memories.
//!
//! A broadband common resonator, coupled to a waveguide, carries `N`
//! high-quality miniresonators, each loaded with an inhomogeneously broadened
//! spin ensemble. This crate evaluates the device's reflection transfer
//! function ([`model`]), searches for parameter sets that absorb a wide band
//! almost perfectly ([`optimizer`]), and integrates the underlying
//! coupled-mode equations in time to cross-check the frequency-domain
//! picture ([`timesim`]).
//!
//! The guide in `book/` walks through each part; its code snippets are
//! compiled and run as doctests of this crate.

pub mod error;
pub mod model;
pub mod nelder_mead;
pub mod optimizer;
pub mod reference;
pub mod timesim;

pub use error::{Error, Result};
pub use model::{ChannelParams, DeviceConfig, EfficiencyCurve, Interval, Kappa, Spectrum, SymmetricHalf};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/transfer-function.md")]
    mod transfer_function {}
    #[doc = include_str!("../../../book/src/plateau-and-losses.md")]
    mod plateau_and_losses {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/time-domain.md")]
    mod time_domain {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
