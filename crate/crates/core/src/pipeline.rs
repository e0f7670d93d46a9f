//! Config to numbers: resolves a [`Config`] into a fixed link and evaluates
//! single Eve positions.

use serde::{Deserialize, Serialize};

use crate::atmosphere::{extinction, AtmosphereConditions, ExtinctionBreakdown, WaveModel};
use crate::channel::{
    channel_gains, los_gain, ChannelGains, LinkScenario, ReceiverParams, ScatteringParams,
};
use crate::config::{Background, Config, ScanMode};
use crate::error::Result;
use crate::outage::{outage_from_gains, OutageResult};
use crate::secrecy::{
    background_for_snr, detection_rates, photon_energy, secrecy_capacity, signal_count,
    DetectionRates, MiForm, SecrecyResult,
};

/// Everything that stays fixed while Eve moves.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLink {
    /// Scenario with background counts filled in; `eve_xy` is the configured
    /// position.
    pub scenario: LinkScenario,
    pub conditions: AtmosphereConditions,
    pub wave: WaveModel,
    pub extinction: ExtinctionBreakdown,
    pub scattering: ScatteringParams,
    pub duty_cycle: f64,
    pub mi_form: MiForm,
    pub target_rate_bps: f64,
    /// Bob's mean LOS count, the reference for SNR-specified backgrounds.
    pub bob_signal_count: f64,
}

fn receiver(aperture_m: f64, fov_deg: f64, efficiency: f64, tau: f64) -> ReceiverParams {
    ReceiverParams {
        aperture_d: aperture_m,
        fov_full_rad: fov_deg.to_radians(),
        efficiency,
        integration_time_s: tau,
        background_count: 0.0,
    }
}

fn resolve_background(bg: Background, reference: f64) -> f64 {
    match bg {
        Background::Count(c) => c,
        Background::SnrDb(s) => background_for_snr(reference, s),
    }
}

impl ResolvedLink {
    /// Fails with a regime error when the turbulence attenuation model does
    /// not apply to this link.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.validate()?;
        let slot = cfg.default_slot_s();
        let b = &cfg.bob;
        let e = &cfg.eve;
        let mut scenario = LinkScenario {
            freq_hz: cfg.freq_hz,
            distance_m: cfg.distance_m,
            eve_xy: (e.x_m, e.y_m),
            divergence_rad: cfg.divergence_angle,
            tx_power_w: cfg.tx_power_w,
            bob: receiver(
                b.aperture_m,
                b.fov_deg,
                b.efficiency,
                b.integration_time_s.unwrap_or(slot),
            ),
            eve: receiver(
                e.aperture_m,
                e.fov_deg,
                e.efficiency,
                e.integration_time_s.unwrap_or(slot),
            ),
        };
        scenario.validate()?;
        let conditions = cfg.atmosphere();
        let backend = cfg.absorption_backend()?;
        let ext = extinction(cfg.freq_hz, &conditions, cfg.distance_m, &backend, cfg.wave)?;

        let bob_signal_count = signal_count(
            los_gain(&scenario, &ext),
            scenario.tx_power_w,
            scenario.bob.efficiency,
            scenario.bob.integration_time_s,
            photon_energy(scenario.freq_hz),
        );
        scenario.bob.background_count = resolve_background(b.background(), bob_signal_count);
        scenario.eve.background_count = resolve_background(e.background(), bob_signal_count);

        Ok(Self {
            scenario,
            conditions,
            wave: cfg.wave,
            extinction: ext,
            scattering: cfg.scattering_params(),
            duty_cycle: cfg.duty_cycle,
            mi_form: cfg.mi_form,
            target_rate_bps: cfg.target_rate(),
            bob_signal_count,
        })
    }

    /// Scenario with Eve moved to `(x, y)`.
    pub fn at(&self, x: f64, y: f64) -> Result<LinkScenario> {
        let s = self.scenario.with_eve_at(x, y);
        s.validate()?;
        Ok(s)
    }

    pub fn gains_at(&self, x: f64, y: f64) -> Result<(LinkScenario, ChannelGains)> {
        let s = self.at(x, y)?;
        let gains = channel_gains(&s, &self.extinction, &self.scattering);
        Ok((s, gains))
    }

    /// Full breakdown for one Eve position.
    pub fn point(&self, x: f64, y: f64) -> Result<PointReport> {
        let (s, gains) = self.gains_at(x, y)?;
        let rates = detection_rates(&s, &gains, self.duty_cycle)?;
        let secrecy = secrecy_capacity(&rates, self.mi_form)?;
        let outage = outage_from_gains(
            &s,
            &self.extinction,
            &gains,
            self.target_rate_bps,
            self.duty_cycle,
            self.mi_form,
        )?;
        Ok(PointReport {
            eve_xy: (x, y),
            extinction: self.extinction,
            gains,
            rates,
            secrecy,
            outage,
        })
    }

    /// Scan value at one cell: secrecy capacity in bit/s, or outage probability.
    pub fn cell_value(&self, x: f64, y: f64, mode: ScanMode) -> Result<f64> {
        let (s, gains) = self.gains_at(x, y)?;
        match mode {
            ScanMode::Deterministic => {
                let rates = detection_rates(&s, &gains, self.duty_cycle)?;
                Ok(secrecy_capacity(&rates, self.mi_form)?.c_s_bps)
            }
            ScanMode::Probabilistic => Ok(outage_from_gains(
                &s,
                &self.extinction,
                &gains,
                self.target_rate_bps,
                self.duty_cycle,
                self.mi_form,
            )?
            .p_o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub eve_xy: (f64, f64),
    pub extinction: ExtinctionBreakdown,
    pub gains: ChannelGains,
    pub rates: DetectionRates,
    pub secrecy: SecrecyResult,
    pub outage: OutageResult,
}
