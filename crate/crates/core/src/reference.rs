//! The published four-channel optimum, used as the regression fixture.
//!
//! Values are rounded to three significant digits, so `F(0)` misses 1 by
//! about `1e-3`.

use crate::model::{expand_symmetric, DeviceConfig, SymmetricHalf};

pub const N_CHANNELS: usize = 4;
pub const GAMMA2_INV: f64 = 1.8;
pub const F: [f64; 2] = [1.01, 0.707];
pub const G: [f64; 2] = [0.385, 0.809];
pub const DELTA_C: [f64; 2] = [0.56, 1.8];

/// Half-width of the working band, in units of the spin-line spacing.
pub const PLATEAU_HALF_WIDTH: f64 = 0.8;

/// Published absorption coefficients `f_1^2 T2*` and `f_2^2 T2*`.
pub const ABSORPTION: [f64; 2] = [0.567, 0.278];

pub fn hmr4_half() -> SymmetricHalf {
    SymmetricHalf {
        gamma2_inv: GAMMA2_INV,
        f: F.to_vec(),
        g: G.to_vec(),
        delta_c: DELTA_C.to_vec(),
    }
}

/// Lossless, broadband-limit configuration with `delta_unit = 1`.
pub fn hmr4_config() -> DeviceConfig {
    expand_symmetric(&hmr4_half(), N_CHANNELS, 1.0).expect("reference parameters are valid")
}

/// The seven free parameters in optimizer layout:
/// `[1/T2*, f_1, f_2, g_1, g_2, Delta_1, Delta_2]`.
pub fn hmr4_params() -> Vec<f64> {
    let mut p = vec![GAMMA2_INV];
    p.extend_from_slice(&F);
    p.extend_from_slice(&G);
    p.extend_from_slice(&DELTA_C);
    p
}
