//! Deterministic channel gains.
//!
//! Alice sits at the origin and transmits along +x to Bob at `(d, 0)`. Bob's
//! LOS gain is divergence loss times atmospheric transmittance. Eve, off the
//! beam at `(x, y)`, collects single-scattered power from the beam segment
//! that falls inside her field of view.
//!
//! Eve's steering angle `alpha` is measured from the -x direction (pointing
//! back at Alice), rotating toward the link axis: `alpha = pi/2` looks
//! straight at the axis, `alpha = 0` looks parallel to it toward Alice. The
//! same convention is used on either side of the axis, so every gain is
//! invariant under `y -> -y`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atmosphere::ExtinctionBreakdown;
use crate::error::{Error, Result};
use crate::numerics::{golden_max, integrate, QuadTolerance};

/// Steering tolerance for [`optimize_steering`], rad.
pub const STEERING_TOLERANCE_RAD: f64 = 1e-4;

const AIM_PROBES: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverParams {
    /// Aperture diameter, m.
    pub aperture_d: f64,
    /// Full field-of-view angle, rad.
    pub fov_full_rad: f64,
    pub efficiency: f64,
    /// Integration time per bit slot, s.
    pub integration_time_s: f64,
    /// Mean background photoelectrons per slot.
    pub background_count: f64,
}

impl ReceiverParams {
    pub fn area(&self) -> f64 {
        PI * self.aperture_d * self.aperture_d / 4.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_d > 0.0 && self.aperture_d.is_finite()) {
            return Err(Error::domain("aperture_d", self.aperture_d, "> 0"));
        }
        if !(self.fov_full_rad > 0.0 && self.fov_full_rad <= PI) {
            return Err(Error::domain(
                "fov_full_rad",
                self.fov_full_rad,
                "in (0, pi]",
            ));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::domain("efficiency", self.efficiency, "in (0, 1]"));
        }
        if !(self.integration_time_s > 0.0 && self.integration_time_s.is_finite()) {
            return Err(Error::domain(
                "integration_time_s",
                self.integration_time_s,
                "> 0",
            ));
        }
        if !(self.background_count >= 0.0 && self.background_count.is_finite()) {
            return Err(Error::domain(
                "background_count",
                self.background_count,
                ">= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkScenario {
    pub freq_hz: f64,
    /// Alice to Bob distance, m.
    pub distance_m: f64,
    /// Eve's position, m.
    pub eve_xy: (f64, f64),
    /// Full beam divergence angle, rad.
    pub divergence_rad: f64,
    pub tx_power_w: f64,
    pub bob: ReceiverParams,
    pub eve: ReceiverParams,
}

impl LinkScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return Err(Error::domain("freq_hz", self.freq_hz, "> 0"));
        }
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(Error::domain("distance_m", self.distance_m, "> 0"));
        }
        if !(self.divergence_rad > 0.0 && self.divergence_rad.is_finite()) {
            return Err(Error::domain("divergence_rad", self.divergence_rad, "> 0"));
        }
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(Error::domain("tx_power_w", self.tx_power_w, "> 0"));
        }
        let (x, y) = self.eve_xy;
        if !x.is_finite() {
            return Err(Error::domain("eve_x", x, "finite"));
        }
        if !(y != 0.0 && y.is_finite()) {
            return Err(Error::domain("eve_y", y, "non-zero"));
        }
        self.bob.validate()?;
        self.eve.validate()
    }

    pub fn with_eve_at(mut self, x: f64, y: f64) -> Self {
        self.eve_xy = (x, y);
        self
    }
}

/// Generalised Henyey-Greenstein phase function parameters.
///
/// The scatterer extinction in the NLOS integral is always the total
/// extinction `alpha_att`, in both the source factor and the path loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringParams {
    /// Asymmetry factor, |g| < 1.
    pub g: f64,
    /// Weight of the `(3 mu^2 - 1)` term.
    pub f: f64,
}

impl Default for ScatteringParams {
    fn default() -> Self {
        Self { g: 0.9, f: 0.5 }
    }
}

impl ScatteringParams {
    pub fn new(g: f64, f: f64) -> Result<Self> {
        let p = Self { g, f };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.abs() < 1.0) {
            return Err(Error::domain("g", self.g, "|g| < 1"));
        }
        if !(self.f >= 0.0 && self.f.is_finite()) {
            return Err(Error::domain("f", self.f, ">= 0"));
        }
        // the f-term is most negative at mu = 0
        if phase_unchecked(0.0, self) < 0.0 {
            return Err(Error::domain("f", self.f, "small enough that p(mu) >= 0"));
        }
        Ok(())
    }
}

fn phase_unchecked(mu: f64, p: &ScatteringParams) -> f64 {
    let g2 = p.g * p.g;
    let hg = (1.0 + g2 - 2.0 * p.g * mu).powf(-1.5);
    let extra = p.f * (3.0 * mu * mu - 1.0) / (2.0 * (1.0 + g2).powf(1.5));
    (1.0 - g2) / (4.0 * PI) * (hg + extra)
}

/// Phase function `p(mu)`, sr^-1, for a scattering-angle cosine `mu`.
pub fn phase_function(mu: f64, params: &ScatteringParams) -> Result<f64> {
    if !(-1.0..=1.0).contains(&mu) {
        return Err(Error::domain("mu", mu, "in [-1, 1]"));
    }
    Ok(phase_unchecked(mu, params))
}

/// Divergence-only gain `4A / (pi d^2 alpha_A^2)`, capped at 1 when the
/// beam footprint is smaller than Bob's aperture.
pub fn divergence_gain(scenario: &LinkScenario) -> f64 {
    let d = scenario.distance_m;
    let a = scenario.divergence_rad;
    (4.0 * scenario.bob.area() / (PI * d * d * a * a)).min(1.0)
}

pub fn los_gain(scenario: &LinkScenario, ext: &ExtinctionBreakdown) -> f64 {
    divergence_gain(scenario) * ext.transmittance(scenario.distance_m)
}

/// Steering angle that points Eve's boresight at axis point `(aim_m, 0)`.
pub fn steering_for_aim(eve_xy: (f64, f64), aim_m: f64) -> f64 {
    let (x, y) = eve_xy;
    y.abs().atan2(x - aim_m)
}

/// Axis coordinate seen by Eve along line-of-sight angle `phi` in (0, pi).
fn axis_point(x: f64, y: f64, phi: f64) -> f64 {
    if phi <= 0.0 {
        f64::NEG_INFINITY
    } else if phi >= PI {
        f64::INFINITY
    } else {
        x - y * phi.cos() / phi.sin()
    }
}

/// Portion `(L_a, L_b)` of the beam axis `[0, d]` inside Eve's FOV cone.
pub fn scattering_segment(scenario: &LinkScenario, steering_rad: f64) -> Result<(f64, f64)> {
    let (x, y) = scenario.eve_xy;
    let y = y.abs();
    let half = scenario.eve.fov_full_rad / 2.0;
    // normalise into (-pi, pi]
    let mut alpha = steering_rad.rem_euclid(2.0 * PI);
    if alpha > PI {
        alpha -= 2.0 * PI;
    }
    // an interval of width <= pi meets (0, pi) for at most one 2*pi shift
    let window = [-2.0 * PI, 0.0, 2.0 * PI].into_iter().find_map(|shift| {
        let lo = (alpha - half + shift).max(0.0);
        let hi = (alpha + half + shift).min(PI);
        (lo < hi).then_some((lo, hi))
    });
    let Some((phi_lo, phi_hi)) = window else {
        return Err(Error::EmptySegment);
    };
    let la = axis_point(x, y, phi_lo).max(0.0);
    let lb = axis_point(x, y, phi_hi).min(scenario.distance_m);
    if la < lb {
        Ok((la, lb))
    } else {
        Err(Error::EmptySegment)
    }
}

/// Integrand of the single-scatter NLOS gain at axis point `l`.
pub fn nlos_integrand(
    scenario: &LinkScenario,
    alpha_am: f64,
    params: &ScatteringParams,
    steering_rad: f64,
    l: f64,
) -> f64 {
    let (x, y) = scenario.eve_xy;
    let y = y.abs();
    let dx = x - l;
    let r2 = dx * dx + y * y;
    let r = r2.sqrt();
    // projected receiving area over r^2, zero when the scatterer is behind the aperture
    let proj = dx * steering_rad.cos() + y * steering_rad.sin();
    let omega = (scenario.eve.area() * proj / (r2 * r)).max(0.0);
    if omega == 0.0 {
        return 0.0;
    }
    let mu = (dx / r).clamp(-1.0, 1.0);
    omega * phase_unchecked(mu, params) * alpha_am * (-alpha_am * (l + r)).exp()
}

pub fn nlos_gain_with_tolerance(
    scenario: &LinkScenario,
    ext: &ExtinctionBreakdown,
    params: &ScatteringParams,
    steering_rad: f64,
    tol: QuadTolerance,
) -> f64 {
    let alpha_am = ext.alpha_att;
    if alpha_am == 0.0 {
        return 0.0;
    }
    let Ok((la, lb)) = scattering_segment(scenario, steering_rad) else {
        return 0.0;
    };
    let f = |l: f64| nlos_integrand(scenario, alpha_am, params, steering_rad, l);
    let (x, _) = scenario.eve_xy;
    // the integrand peaks near the foot point; split there so it sits on a node boundary
    if x > la && x < lb {
        integrate(f, la, x, tol).value + integrate(f, x, lb, tol).value
    } else {
        integrate(f, la, lb, tol).value
    }
}

/// Single-scatter NLOS gain for a fixed steering angle (relative tolerance 1e-8).
pub fn nlos_gain(
    scenario: &LinkScenario,
    ext: &ExtinctionBreakdown,
    params: &ScatteringParams,
    steering_rad: f64,
) -> f64 {
    nlos_gain_with_tolerance(
        scenario,
        ext,
        params,
        steering_rad,
        QuadTolerance::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringOptimum {
    pub steering_rad: f64,
    /// Axis point Eve aims at, m.
    pub aim_m: f64,
    pub g_nlos: f64,
}

/// Eve's best steering: the aim point on `[0, d]` maximising the NLOS gain.
///
/// A coarse probe grid (which always includes the foot point) locates the
/// best basin, then golden-section search refines it until the bracket spans
/// less than [`STEERING_TOLERANCE_RAD`] of steering angle.
pub fn optimize_steering(
    scenario: &LinkScenario,
    ext: &ExtinctionBreakdown,
    params: &ScatteringParams,
) -> SteeringOptimum {
    let d = scenario.distance_m;
    let eve = scenario.eve_xy;
    let gain_at = |aim: f64| nlos_gain(scenario, ext, params, steering_for_aim(eve, aim));

    let step = d / (AIM_PROBES - 1) as f64;
    let mut probes: Vec<(f64, f64)> = (0..AIM_PROBES)
        .map(|i| {
            let aim = if i + 1 == AIM_PROBES {
                d
            } else {
                i as f64 * step
            };
            (aim, gain_at(aim))
        })
        .collect();
    let foot = eve.0.clamp(0.0, d);
    probes.push((foot, gain_at(foot)));
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));

    let best = (0..probes.len())
        .max_by(|&i, &j| probes[i].1.total_cmp(&probes[j].1).then(j.cmp(&i)))
        .expect("probe grid is non-empty");
    let (best_aim, best_gain) = probes[best];
    if best_gain == 0.0 {
        return SteeringOptimum {
            steering_rad: steering_for_aim(eve, foot),
            aim_m: foot,
            g_nlos: 0.0,
        };
    }

    let lo = probes[best.saturating_sub(1)].0;
    let hi = probes[(best + 1).min(probes.len() - 1)].0;
    let refined = golden_max(
        gain_at,
        lo,
        hi,
        |a, b| (steering_for_aim(eve, a) - steering_for_aim(eve, b)).abs() < STEERING_TOLERANCE_RAD,
        200,
    );
    let (aim_m, g_nlos) = if refined.value > best_gain {
        (refined.x, refined.value)
    } else {
        (best_aim, best_gain)
    };
    SteeringOptimum {
        steering_rad: steering_for_aim(eve, aim_m),
        aim_m,
        g_nlos,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGains {
    pub g_los: f64,
    pub g_nlos: f64,
    pub steering_rad: f64,
    /// Scattering segment `(L_a, L_b)` seen at the optimal steering.
    pub segment: Option<(f64, f64)>,
}

/// LOS gain to Bob and Eve's optimised NLOS gain.
pub fn channel_gains(
    scenario: &LinkScenario,
    ext: &ExtinctionBreakdown,
    params: &ScatteringParams,
) -> ChannelGains {
    let opt = optimize_steering(scenario, ext, params);
    ChannelGains {
        g_los: los_gain(scenario, ext),
        g_nlos: opt.g_nlos,
        steering_rad: opt.steering_rad,
        segment: scattering_segment(scenario, opt.steering_rad).ok(),
    }
}
