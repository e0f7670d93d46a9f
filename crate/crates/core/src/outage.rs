//! Probabilistic eavesdropping risk.
//!
//! Only Bob's LOS gain fades. It is log-normal with log-variance equal to the
//! spherical-wave Rytov variance and log-mean `-sigma^2 / 2`, which keeps the
//! mean gain at its deterministic value. Eve's NLOS gain stays fixed. The
//! outage probability at target rate `R` is the CDF of the LOS gain at the
//! threshold `G*` where the secrecy capacity reaches `R * tau` bits/slot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atmosphere::{spherical_rytov_variance, ExtinctionBreakdown};
use crate::channel::{channel_gains, ChannelGains, LinkScenario, ScatteringParams};
use crate::error::{Error, Result};
use crate::numerics::bisect_log;
use crate::secrecy::{
    detection_rates, ook_mutual_information, photon_energy, signal_count, MiForm,
};

/// Bisection bracket for the threshold gain.
pub const GAIN_FLOOR: f64 = 1e-30;
pub const GAIN_CEILING: f64 = 1.0;
const THRESHOLD_REL_WIDTH: f64 = 1e-10;

const MC_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingModel {
    pub g_los_mean: f64,
    /// Log-variance of the LOS gain.
    pub sigma_r2: f64,
    /// Mean of `ln(G / g_los_mean)`.
    pub mu_log: f64,
}

impl FadingModel {
    /// `sigma_r2` must lie in `[0, 1)`; zero gives a deterministic gain.
    pub fn new(g_los_mean: f64, sigma_r2: f64) -> Result<Self> {
        if !(g_los_mean > 0.0 && g_los_mean.is_finite()) {
            return Err(Error::domain("g_los_mean", g_los_mean, "> 0"));
        }
        if !(sigma_r2 >= 0.0) {
            return Err(Error::domain("sigma_r2", sigma_r2, ">= 0"));
        }
        if sigma_r2 >= 1.0 {
            return Err(Error::Regime {
                wave: crate::atmosphere::WaveModel::Spherical,
                variance: sigma_r2,
            });
        }
        Ok(Self {
            g_los_mean,
            sigma_r2,
            mu_log: -sigma_r2 / 2.0,
        })
    }

    /// Model for a link of length `distance_m`, variance from the Rytov formula.
    pub fn for_link(g_los_mean: f64, freq_hz: f64, cn2: f64, distance_m: f64) -> Result<Self> {
        Self::new(
            g_los_mean,
            spherical_rytov_variance(freq_hz, cn2, distance_m),
        )
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_r2.sqrt()
    }

    pub fn median(&self) -> f64 {
        self.g_los_mean * self.mu_log.exp()
    }

    fn z_score(&self, g: f64) -> f64 {
        ((g / self.g_los_mean).ln() - self.mu_log) / self.sigma()
    }
}

pub fn lognormal_pdf(g: f64, model: &FadingModel) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::domain("g", g, "> 0"));
    }
    if model.sigma_r2 == 0.0 {
        return Ok(if g == model.g_los_mean {
            f64::INFINITY
        } else {
            0.0
        });
    }
    let z = (g / model.g_los_mean).ln() - model.mu_log;
    Ok((-z * z / (2.0 * model.sigma_r2)).exp()
        / (g * (2.0 * std::f64::consts::PI * model.sigma_r2).sqrt()))
}

/// Standard normal CDF, accurate in the lower tail.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(G <= g)`.
pub fn lognormal_cdf(g: f64, model: &FadingModel) -> f64 {
    if g <= 0.0 {
        return 0.0;
    }
    if g.is_infinite() {
        return 1.0;
    }
    if model.sigma_r2 == 0.0 {
        return if g >= model.g_los_mean { 1.0 } else { 0.0 };
    }
    standard_normal_cdf(model.z_score(g))
}

/// Solution of `C_s(G) = R tau` in the LOS gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    /// Secrecy capacity reaches the target at and above this gain.
    Gain(f64),
    /// Target not reached even at `G = 1`; outage is certain.
    Unattainable,
}

impl Threshold {
    pub fn gain(&self) -> Option<f64> {
        match self {
            Threshold::Gain(g) => Some(*g),
            Threshold::Unattainable => None,
        }
    }
}

/// Secrecy capacity as a function of Bob's instantaneous LOS gain, with
/// everything else frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyCurve {
    /// Bob's photoelectrons per slot per unit gain.
    pub bob_counts_per_gain: f64,
    pub lambda_b: f64,
    /// Eve's mutual information, bits/slot.
    pub i_eve: f64,
    pub q: f64,
    pub form: MiForm,
}

impl SecrecyCurve {
    pub fn new(scenario: &LinkScenario, g_nlos: f64, q: f64, form: MiForm) -> Result<Self> {
        let e_photon = photon_energy(scenario.freq_hz);
        let eve = &scenario.eve;
        let lambda_n = signal_count(
            g_nlos,
            scenario.tx_power_w,
            eve.efficiency,
            eve.integration_time_s,
            e_photon,
        );
        let i_eve = ook_mutual_information(lambda_n, eve.background_count, q, form)?;
        let bob = &scenario.bob;
        Ok(Self {
            bob_counts_per_gain: signal_count(
                1.0,
                scenario.tx_power_w,
                bob.efficiency,
                bob.integration_time_s,
                e_photon,
            ),
            lambda_b: bob.background_count,
            i_eve,
            q,
            form,
        })
    }

    /// Secrecy capacity in bits/slot at LOS gain `g`.
    pub fn capacity(&self, g: f64) -> f64 {
        let i_bob = ook_mutual_information(
            self.bob_counts_per_gain * g,
            self.lambda_b,
            self.q,
            self.form,
        )
        .expect("inputs validated at construction");
        (i_bob - self.i_eve).max(0.0)
    }
}

/// Threshold gain for a target of `target_bits` bits/slot.
///
/// A non-positive target is met by every gain, so the threshold is 0.
pub fn threshold_gain(curve: &SecrecyCurve, target_bits: f64) -> Result<Threshold> {
    if target_bits <= 0.0 {
        return Ok(Threshold::Gain(0.0));
    }
    if curve.capacity(GAIN_CEILING) < target_bits {
        return Ok(Threshold::Unattainable);
    }
    if curve.capacity(GAIN_FLOOR) >= target_bits {
        return Ok(Threshold::Gain(GAIN_FLOOR));
    }
    let g = bisect_log(
        |g| curve.capacity(g),
        GAIN_FLOOR,
        GAIN_CEILING,
        target_bits,
        THRESHOLD_REL_WIDTH,
    )?;
    Ok(Threshold::Gain(g))
}

/// Closed-form outage probability `P(G_LOS <= G*)`.
pub fn outage_probability(model: &FadingModel, threshold: Threshold) -> f64 {
    match threshold {
        Threshold::Unattainable => 1.0,
        Threshold::Gain(g) => lognormal_cdf(g, model),
    }
}

/// Monte Carlo estimate of `P(G_LOS <= g_threshold)`.
///
/// Draws are split into fixed chunks, each with its own ChaCha stream keyed
/// by `(seed, chunk index)`, so the estimate does not depend on how rayon
/// schedules the chunks.
pub fn monte_carlo_outage(model: &FadingModel, g_threshold: f64, samples: usize, seed: u64) -> f64 {
    if samples == 0 {
        return f64::NAN;
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let sigma = model.sigma();
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            (0..n)
                .filter(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    model.g_los_mean * (model.mu_log + sigma * z).exp() <= g_threshold
                })
                .count()
        })
        .sum();
    hits as f64 / samples as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageResult {
    pub p_o: f64,
    pub g_threshold: Option<f64>,
    pub target_rate_bps: f64,
    pub fading: FadingModel,
    pub gains: ChannelGains,
}

/// Outage probability at target rate `target_rate_bps` for one Eve position.
pub fn outage_scan_point(
    scenario: &LinkScenario,
    ext: &ExtinctionBreakdown,
    params: &ScatteringParams,
    target_rate_bps: f64,
    q: f64,
    form: MiForm,
) -> Result<OutageResult> {
    let gains = channel_gains(scenario, ext, params);
    outage_from_gains(scenario, ext, &gains, target_rate_bps, q, form)
}

pub fn outage_from_gains(
    scenario: &LinkScenario,
    ext: &ExtinctionBreakdown,
    gains: &ChannelGains,
    target_rate_bps: f64,
    q: f64,
    form: MiForm,
) -> Result<OutageResult> {
    if !(target_rate_bps >= 0.0) {
        return Err(Error::domain("target_rate_bps", target_rate_bps, ">= 0"));
    }
    // validates q and counts
    detection_rates(scenario, gains, q)?;
    let fading = FadingModel::new(gains.g_los, ext.beta_r2_sph)?;
    let curve = SecrecyCurve::new(scenario, gains.g_nlos, q, form)?;
    let target_bits = target_rate_bps * scenario.bob.integration_time_s;
    let threshold = threshold_gain(&curve, target_bits)?;
    Ok(OutageResult {
        p_o: outage_probability(&fading, threshold),
        g_threshold: threshold.gain(),
        target_rate_bps,
        fading,
        gains: *gains,
    })
}
