//! Poisson on-off-keying mutual information and secrecy capacity.
//!
//! With duty cycle `q`, signal count `s` and background count `n` per slot,
//! the mutual information is
//!
//! ```text
//! I = q(s+n) log(s+n) + (1-q) n log n - (qs+n) log(qs+n)
//! ```
//!
//! evaluated here as `q D(s+n || m) + (1-q) D(n || m)` with `m = qs + n` and
//! `D(a || b) = a log(a/b) - a + b`. Both terms are non-negative, so the
//! result keeps its sign even when `s` is tiny next to `n`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelGains, LinkScenario};
use crate::error::{Error, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;

/// Which printed form of the mutual information to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiForm {
    /// `(1-q) n log n` middle term; always >= 0.
    #[default]
    Standard,
    /// Middle term `n log n` without the `(1-q)` weight. Can go negative.
    UnweightedNoise,
}

pub fn photon_energy(freq_hz: f64) -> f64 {
    PLANCK * freq_hz
}

/// Background count giving `snr_db` against a reference signal count.
pub fn background_for_snr(signal_count: f64, snr_db: f64) -> f64 {
    signal_count / 10f64.powf(snr_db / 10.0)
}

pub fn snr_db(signal_count: f64, background_count: f64) -> f64 {
    10.0 * (signal_count / background_count).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRates {
    /// Mean LOS signal photoelectrons per slot at Bob.
    pub lambda_l: f64,
    /// Mean NLOS signal photoelectrons per slot at Eve.
    pub lambda_n: f64,
    pub lambda_b: f64,
    pub lambda_e: f64,
    pub q: f64,
    /// Photon energy `h f`, J.
    pub e_photon: f64,
    /// Bob's slot duration, used to convert bits/slot to bit/s.
    pub slot_s: f64,
}

/// Photoelectrons per slot for signal gain `gain` at a receiver.
pub fn signal_count(
    gain: f64,
    tx_power_w: f64,
    efficiency: f64,
    integration_time_s: f64,
    e_photon: f64,
) -> f64 {
    integration_time_s * efficiency * gain * tx_power_w / e_photon
}

fn check_duty_cycle(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("duty_cycle", q, "in (0, 1)"))
    }
}

pub fn detection_rates(
    scenario: &LinkScenario,
    gains: &ChannelGains,
    q: f64,
) -> Result<DetectionRates> {
    check_duty_cycle(q)?;
    let e_photon = photon_energy(scenario.freq_hz);
    let bob = &scenario.bob;
    let eve = &scenario.eve;
    Ok(DetectionRates {
        lambda_l: signal_count(
            gains.g_los,
            scenario.tx_power_w,
            bob.efficiency,
            bob.integration_time_s,
            e_photon,
        ),
        lambda_n: signal_count(
            gains.g_nlos,
            scenario.tx_power_w,
            eve.efficiency,
            eve.integration_time_s,
            e_photon,
        ),
        lambda_b: bob.background_count,
        lambda_e: eve.background_count,
        q,
        e_photon,
        slot_s: bob.integration_time_s,
    })
}

/// `t ln t - t + 1` at `t = 1 + u`.
fn relative_entropy_kernel(u: f64) -> f64 {
    if u.abs() < 1e-2 {
        // sum_{k>=2} (-u)^k / (k (k-1))
        let mut term = u * u;
        let mut acc = 0.0;
        for k in 2..12 {
            let kf = k as f64;
            acc += term / (kf * (kf - 1.0));
            term *= -u;
        }
        acc
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// `a ln(a/b) - a + b` for `a >= 0`, `b > 0`.
fn divergence_term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b;
    }
    b * relative_entropy_kernel((a - b) / b)
}

fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Mutual information of Poisson OOK detection, bits/slot.
pub fn ook_mutual_information(
    lambda_s: f64,
    lambda_noise: f64,
    q: f64,
    form: MiForm,
) -> Result<f64> {
    if !(lambda_s >= 0.0 && lambda_s.is_finite()) {
        return Err(Error::domain("lambda_s", lambda_s, ">= 0"));
    }
    if !(lambda_noise >= 0.0 && lambda_noise.is_finite()) {
        return Err(Error::domain("lambda_noise", lambda_noise, ">= 0"));
    }
    check_duty_cycle(q)?;
    let standard = if lambda_s == 0.0 {
        0.0
    } else {
        let mean = q * lambda_s + lambda_noise;
        let nats = q * divergence_term(lambda_s + lambda_noise, mean)
            + (1.0 - q) * divergence_term(lambda_noise, mean);
        nats / std::f64::consts::LN_2
    };
    Ok(match form {
        MiForm::Standard => standard,
        MiForm::UnweightedNoise => standard + q * xlog2x(lambda_noise),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecrecyResult {
    pub i_bob: f64,
    pub i_eve: f64,
    /// `max(0, i_bob - i_eve)`, bits/slot.
    pub c_s_slot: f64,
    /// bit/s.
    pub c_s_bps: f64,
    pub insecure: bool,
    pub snr_bob_db: f64,
    pub snr_eve_db: f64,
}

pub fn secrecy_capacity(rates: &DetectionRates, form: MiForm) -> Result<SecrecyResult> {
    let i_bob = ook_mutual_information(rates.lambda_l, rates.lambda_b, rates.q, form)?;
    let i_eve = ook_mutual_information(rates.lambda_n, rates.lambda_e, rates.q, form)?;
    let c_s_slot = (i_bob - i_eve).max(0.0);
    Ok(SecrecyResult {
        i_bob,
        i_eve,
        c_s_slot,
        c_s_bps: c_s_slot / rates.slot_s,
        insecure: c_s_slot == 0.0,
        snr_bob_db: snr_db(rates.lambda_l, rates.lambda_b),
        snr_eve_db: snr_db(rates.lambda_n, rates.lambda_e),
    })
}
