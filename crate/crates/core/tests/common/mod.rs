//! Helpers shared by the integration tests.

#![allow(dead_code, unused_imports)]

use thzsec::channel::{LinkScenario, ReceiverParams};

pub use thzsec_verification::{
    gauss_legendre, gl_integrate, normal_cdf_by_quadrature, poisson_channel_mi, wyner_mi,
};

pub fn receiver(background: f64) -> ReceiverParams {
    ReceiverParams {
        aperture_d: 0.05,
        fov_full_rad: 10f64.to_radians(),
        efficiency: 0.1,
        integration_time_s: 1e-10,
        background_count: background,
    }
}

/// Reference geometry: 340 GHz, 1 km, 20 mrad, 10 mW.
pub fn scenario(x: f64, y: f64) -> LinkScenario {
    LinkScenario {
        freq_hz: 340e9,
        distance_m: 1000.0,
        eve_xy: (x, y),
        divergence_rad: 0.02,
        tx_power_w: 0.01,
        bob: receiver(1.0),
        eve: receiver(1.0),
    }
}
