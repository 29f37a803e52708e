//! Telemetry downlink model: Shadowed-Rician block fading, pass geometry,
//! outage/erasure and end-to-end latency.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::math::{db_to_linear, integrate};
use crate::workload::Slot;

/// Speed of light in km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Absolute bound on the discarded series tail.
const TAIL_BOUND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("invalid channel parameter: {0}")]
    InvalidParams(&'static str),
    #[error("non-finite input")]
    NonFinite,
    #[error("series truncation {have} too short, {need} terms required")]
    Truncation { have: usize, need: usize },
    #[error("invalid pass geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("prediction horizon must be at least one slot")]
    EmptyHorizon,
}

/// Shadowed-Rician fading parameters and the decoding threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub b0: f64,
    pub m: f64,
    pub omega: f64,
    pub threshold_db: f64,
    pub series_truncation: usize,
}

impl ChannelParams {
    /// Builds validated parameters with the truncation sized to the tail bound.
    pub fn new(b0: f64, m: f64, omega: f64, threshold_db: f64) -> Result<Self, ChannelError> {
        let mut p = ChannelParams { b0, m, omega, threshold_db, series_truncation: usize::MAX };
        p.check_values()?;
        p.series_truncation = p.required_terms();
        Ok(p)
    }

    /// Land-mobile-satellite fading of the reference case study.
    pub fn reference() -> Self {
        Self::new(0.158, 19.4, 1.29, 5.0).expect("reference parameters are valid")
    }

    fn check_values(&self) -> Result<(), ChannelError> {
        let finite = [self.b0, self.m, self.omega, self.threshold_db].iter().all(|v| v.is_finite());
        if !finite {
            return Err(ChannelError::NonFinite);
        }
        if self.b0 <= 0.0 {
            return Err(ChannelError::InvalidParams("b0 must be positive"));
        }
        if self.m <= 0.0 {
            return Err(ChannelError::InvalidParams("m must be positive"));
        }
        if self.omega < 0.0 {
            return Err(ChannelError::InvalidParams("omega must be non-negative"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        self.check_values()?;
        let need = self.required_terms();
        if self.series_truncation < need {
            return Err(ChannelError::Truncation { have: self.series_truncation, need });
        }
        Ok(())
    }

    /// E[r²] of the envelope law.
    pub fn mean_power(&self) -> f64 {
        2.0 * self.b0 + self.omega
    }

    /// Envelope beyond which the density is negligible for quadrature purposes.
    pub fn support_limit(&self) -> f64 {
        libm::sqrt(self.mean_power()) * (8.0 + 4.0 / libm::sqrt(self.m.min(1.0)))
    }

    fn required_terms(&self) -> usize {
        let limit = self.support_limit();
        (0..=200)
            .map(|i| series(self, limit * i as f64 / 200.0, usize::MAX).terms)
            .max()
            .unwrap_or(1)
    }
}

struct SeriesEval {
    density: f64,
    terms: usize,
}

/// Series evaluation with `(1−m)_k` coefficients (Kummer form); falls back to the
/// equivalent positive `(m)_k` series when the alternating sum cancels badly.
fn series(p: &ChannelParams, r: f64, max_terms: usize) -> SeriesEval {
    if r <= 0.0 {
        return SeriesEval { density: 0.0, terms: 1 };
    }
    let two_b0 = 2.0 * p.b0;
    let denom = two_b0 * p.m + p.omega;
    let ln_a = p.m * libm::log(two_b0 * p.m / denom);
    let x = p.omega * r * r / (two_b0 * denom);
    let ln_base = ln_a - r * r / two_b0 + libm::log(r / p.b0);

    // Terms t_k = (1−m)_k (−x)^k / (k!)², scaled by exp(x) outside.
    let scale = libm::exp(ln_base + x);
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut peak: f64 = 1.0;
    let mut k = 0usize;
    loop {
        let kk = k as f64 + 1.0;
        let ratio = (kk - p.m) * (-x) / (kk * kk);
        let next = term * ratio;
        let abs_ratio = libm::fabs(ratio);
        let monotone = kk >= 2.0 * p.m && abs_ratio < 1.0;
        if next == 0.0 || (monotone && scale * libm::fabs(next) / (1.0 - abs_ratio) < TAIL_BOUND * 1e-3) {
            break;
        }
        if k + 1 >= max_terms || peak > 1e200 {
            break;
        }
        term = next;
        sum += term;
        peak = peak.max(libm::fabs(term));
        k += 1;
    }
    let terms = k + 1;
    if scale.is_finite() && peak <= 1e200 && peak <= 1e6 * libm::fabs(sum) {
        return SeriesEval { density: (scale * sum).max(0.0), terms };
    }

    // Positive form 1F1(m; 1; x) = Σ (m)_k x^k / (k!)², summed in log space
    // because the prefactor and the peak term can sit at opposite ends of the range.
    let ln_x = libm::log(x);
    let mut ln_term = ln_base;
    let mut sum = libm::exp(ln_term);
    let mut k = 0usize;
    loop {
        let kk = k as f64 + 1.0;
        let ln_ratio = libm::log(kk - 1.0 + p.m) + ln_x - 2.0 * libm::log(kk);
        ln_term += ln_ratio;
        let next = libm::exp(ln_term);
        // Past the peak the ratios keep shrinking, so the tail is below next/(1 − ratio).
        let ratio = libm::exp(ln_ratio);
        let tail = if ratio < 1.0 { next / (1.0 - ratio) } else { f64::INFINITY };
        if tail < TAIL_BOUND * 1e-3 || tail < 1e-17 * sum || k + 1 >= max_terms.max(terms) {
            break;
        }
        sum += next;
        k += 1;
    }
    SeriesEval { density: sum.max(0.0), terms: terms.max(k + 1) }
}

/// Shadowed-Rician envelope density at `r`.
pub fn shadowed_rician_pdf(r: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    if !r.is_finite() {
        return Err(ChannelError::NonFinite);
    }
    params.check_values()?;
    if r < 0.0 {
        return Ok(0.0);
    }
    Ok(series(params, r, params.series_truncation).density)
}

/// P(R ≤ r) by adaptive quadrature of the density.
pub fn shadowed_rician_cdf(r: f64, params: &ChannelParams) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let f = |x: f64| series(params, x, params.series_truncation).density;
    let limit = params.support_limit();
    let v = if r <= limit {
        panels(&f, 0.0, r, params)
    } else {
        1.0 - panels(&f, r, r + limit, params)
    };
    v.clamp(0.0, 1.0)
}

fn panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, params: &ChannelParams) -> f64 {
    let width = libm::sqrt(params.b0).max(1e-3);
    let n = libm::ceil((b - a) / width).clamp(1.0, 4096.0) as usize;
    let h = (b - a) / n as f64;
    (0..n).map(|i| integrate(f, a + h * i as f64, a + h * (i + 1) as f64, 1e-14)).sum()
}

/// Draws one envelope: LOS power ~ Gamma(m, Ω/m), then a Rician draw around it.
pub fn sample_envelope<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> f64 {
    let los_power = if params.omega > 0.0 {
        Gamma::new(params.m, params.omega / params.m).expect("validated shape and scale").sample(rng)
    } else {
        0.0
    };
    let n = Normal::new(0.0, libm::sqrt(params.b0)).expect("b0 > 0");
    let i = libm::sqrt(los_power) + n.sample(rng);
    let q = n.sample(rng);
    libm::sqrt(i * i + q * q)
}

/// Probability that `γ̄·r² < γ_th` (linear scale).
pub fn outage_probability(mean_snr_db: f64, params: &ChannelParams) -> f64 {
    if mean_snr_db == f64::INFINITY {
        return 0.0;
    }
    if mean_snr_db == f64::NEG_INFINITY {
        return 1.0;
    }
    let ratio = db_to_linear(params.threshold_db - mean_snr_db);
    if !ratio.is_finite() {
        return 1.0;
    }
    shadowed_rician_cdf(libm::sqrt(ratio), params)
}

/// Free-space link budget terms; used when no closest-approach SNR is configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_dbw: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_dbw: f64,
    pub carrier_mhz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget { tx_power_dbw: 10.0, tx_gain_dbi: 6.0, rx_gain_dbi: 30.0, noise_dbw: -140.0, carrier_mhz: 2200.0 }
    }
}

fn default_exponent() -> f64 {
    2.0
}

/// Parametric overhead pass: slant range grows from `min_range_km` at the centre
/// slot to `max_range_km` at either end of the pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassGeometry {
    pub min_range_km: f64,
    pub max_range_km: f64,
    pub pass_slots: u32,
    pub center_slot: f64,
    pub episode_slots: u32,
    /// Mean SNR at closest approach; overrides the link budget when set.
    #[serde(default)]
    pub peak_snr_db: Option<f64>,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
    #[serde(default)]
    pub link: LinkBudget,
}

impl PassGeometry {
    /// Constant-range geometry.
    pub fn stationary(range_km: f64, snr_db: f64, episode_slots: u32) -> Self {
        PassGeometry {
            min_range_km: range_km,
            max_range_km: range_km,
            pass_slots: episode_slots.max(1),
            center_slot: 0.0,
            episode_slots,
            peak_snr_db: Some(snr_db),
            path_loss_exponent: 2.0,
            link: LinkBudget::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let vals = [self.min_range_km, self.max_range_km, self.center_slot, self.path_loss_exponent];
        if vals.iter().any(|v| !v.is_finite()) || self.peak_snr_db.is_some_and(|v| !v.is_finite()) {
            return Err(ChannelError::NonFinite);
        }
        if self.min_range_km <= 0.0 {
            return Err(ChannelError::InvalidGeometry("minimum range must be positive"));
        }
        if self.max_range_km < self.min_range_km {
            return Err(ChannelError::InvalidGeometry("maximum range below minimum range"));
        }
        if self.pass_slots == 0 {
            return Err(ChannelError::InvalidGeometry("pass must last at least one slot"));
        }
        if self.path_loss_exponent <= 0.0 {
            return Err(ChannelError::InvalidGeometry("path-loss exponent must be positive"));
        }
        Ok(())
    }

    /// Slant range d(t) in km.
    pub fn range_km(&self, t: f64) -> f64 {
        let half = 0.5 * self.pass_slots as f64;
        let u = ((t - self.center_slot) / half).clamp(-1.0, 1.0);
        let lo = self.min_range_km * self.min_range_km;
        let hi = self.max_range_km * self.max_range_km;
        libm::sqrt(lo + (hi - lo) * u * u)
    }

    /// Large-scale mean SNR γ̄(t) in dB.
    pub fn mean_snr_db(&self, t: f64) -> f64 {
        let d = self.range_km(t);
        let n = self.path_loss_exponent;
        match self.peak_snr_db {
            Some(peak) => peak - 10.0 * n * libm::log10(d / self.min_range_km),
            None => {
                let l = &self.link;
                let path_loss = 10.0 * n * libm::log10(d) + 20.0 * libm::log10(l.carrier_mhz) + 32.44;
                l.tx_power_dbw + l.tx_gain_dbi + l.rx_gain_dbi - l.noise_dbw - path_loss
            }
        }
    }

    pub fn propagation_ms(&self, t: f64) -> f64 {
        1e3 * self.range_km(t) / SPEED_OF_LIGHT_KM_S
    }
}

/// End-to-end latency `d(t)/c + τ_proc + δ_add` in ms.
pub fn total_delay(t: Slot, geometry: &PassGeometry, proc_ms: f64, add_ms: f64) -> f64 {
    geometry.propagation_ms(t as f64) + proc_ms + add_ms
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPrediction {
    pub values_db: Vec<f64>,
    /// Set when the requested horizon ran past the end of the episode.
    pub truncated: bool,
}

/// Geometry-only SNR forecast γ̂(t)…γ̂(t+W−1).
pub fn predict_mean_snr(t: Slot, w: u32, geometry: &PassGeometry) -> Result<SnrPrediction, ChannelError> {
    if w == 0 {
        return Err(ChannelError::EmptyHorizon);
    }
    let end = t.saturating_add(w).min(geometry.episode_slots.max(t + 1));
    let values_db = (t..end).map(|s| geometry.mean_snr_db(s as f64)).collect::<Vec<_>>();
    Ok(SnrPrediction { truncated: values_db.len() < w as usize, values_db })
}

/// One slot of the downlink as seen by the interceptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub envelope: f64,
    pub snr_db: f64,
    /// ξ: true when the slot's telemetry was decoded.
    pub received: bool,
    pub prop_ms: f64,
    pub proc_ms: f64,
    pub add_ms: f64,
}

impl ChannelSample {
    pub fn total_ms(&self) -> f64 {
        self.prop_ms + self.proc_ms + self.add_ms
    }
}

/// Block-fading draw for slot `t` under the threshold decoding rule.
pub fn sample_slot<R: Rng + ?Sized>(
    t: Slot,
    geometry: &PassGeometry,
    params: &ChannelParams,
    proc_ms: f64,
    add_ms: f64,
    rng: &mut R,
) -> ChannelSample {
    let envelope = sample_envelope(params, rng);
    let snr_db = geometry.mean_snr_db(t as f64) + 20.0 * libm::log10(envelope);
    ChannelSample {
        envelope,
        snr_db,
        received: snr_db >= params.threshold_db,
        prop_ms: geometry.propagation_ms(t as f64),
        proc_ms,
        add_ms,
    }
}
