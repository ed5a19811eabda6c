//! Currents, the QPC detector model and zero-frequency correlation
//! estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::build_rates;
use crate::params::SystemParams;
use crate::state::DensityMatrix;

/// Minimum number of batches behind every batch-means error bar.
pub const MIN_BATCHES: usize = 8;
/// Batch span in units of the lag cutoff.
pub const BATCH_SPAN_PER_CUTOFF: f64 = 4.0;
/// Results whose error exceeds this fraction of the value are flagged noisy.
pub const NOISY_FRACTION: f64 = 0.5;

/// Current into the right lead, `Gamma_R- rho_RR - Gamma_R+ rho_00`; in the
/// infinite-bias limit this is `Gamma_R rho_RR`.
pub fn tqd_current(rho: &DensityMatrix, params: &SystemParams) -> Result<f64> {
    let rates = build_rates(params)?;
    Ok(rates.gamma_r_out * rho.rho_rr() - rates.gamma_r_in * rho.rho_00())
}

/// Quantum point contact coupled to the central dot. Units `e = h = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Transmittance with the central dot empty.
    pub t0: f64,
    /// Transmittance with the central dot occupied.
    pub t1: f64,
    pub v_bias: f64,
    /// Shot-noise spectral density of the QPC current.
    pub s_i: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            t0: 0.45,
            t1: 0.55,
            v_bias: 1.0,
            s_i: 1e-3,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("t0", self.t0), ("t1", self.t1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(key, "transmittance must lie in [0, 1]"));
            }
        }
        if !self.v_bias.is_finite() {
            return Err(Error::invalid("v_bias", "must be finite"));
        }
        if !(self.s_i > 0.0) || !self.s_i.is_finite() {
            return Err(Error::invalid("s_i", "shot noise must be > 0"));
        }
        Ok(())
    }

    /// `sign(T1 - T0)`, with 0 for an indistinguishable detector.
    pub fn contrast_sign(&self) -> f64 {
        if self.t1 > self.t0 {
            1.0
        } else if self.t1 < self.t0 {
            -1.0
        } else {
            0.0
        }
    }

    /// `(e^2 V / h)(T1 - T0)`: change of QPC current per unit record.
    pub fn gain(&self) -> f64 {
        self.v_bias * (self.t1 - self.t0)
    }
}

/// `gamma = e^4 V^2 (T0 - T1)^2 / (2 h^2 S_I)` with `e = h = 1`.
pub fn measurement_strength(det: &DetectorModel) -> Result<f64> {
    if !(det.s_i > 0.0) {
        return Err(Error::invalid("s_i", "shot noise must be > 0"));
    }
    let contrast = det.t0 - det.t1;
    Ok(det.v_bias * det.v_bias * contrast * contrast / (2.0 * det.s_i))
}

/// QPC current `(e^2 V / h) [T0 + (T1 - T0) z]` for detector record `z`.
pub fn qpc_current(z: f64, det: &DetectorModel) -> f64 {
    det.v_bias * (det.t0 + (det.t1 - det.t0) * z)
}

/// Batch estimates of the three zero-frequency densities of a pair of
/// series, sharing lag window and batches.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralBatches {
    pub xy: Vec<f64>,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

impl SpectralBatches {
    /// Symmetric-lag estimates
    /// `S_ab = dt * sum_{|m| <= M} cov(a_n, b_{n+m})`, `M = round(t_cut / dt)`,
    /// over the samples after `t_burn`. Each anchor sample `n` contributes
    /// `dt * a_n * sum_{|m|<=M} b_{n+m}` (symmetrized in `a`, `b`); anchors are
    /// grouped into contiguous batches spanning `4 * t_cut`.
    pub fn estimate(x: &[f64], y: &[f64], dt: f64, t_burn: f64, t_cut: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid("series", "x and y lengths differ"));
        }
        if !(dt > 0.0) || !(t_burn >= 0.0) || !(t_cut >= 0.0) {
            return Err(Error::invalid("t_cut", "need dt > 0, t_burn >= 0, t_cut >= 0"));
        }
        let start = ((t_burn / dt) * (1.0 - 1e-12)).ceil() as usize;
        if start >= x.len() {
            return Err(Error::InsufficientData(format!(
                "burn-in of {t_burn} consumes all {} samples",
                x.len()
            )));
        }
        let xs = &x[start..];
        let ys = &y[start..];
        let n = xs.len();
        let lags = (t_cut / dt).round() as usize;
        let batch = ((BATCH_SPAN_PER_CUTOFF * t_cut / dt).round() as usize).max(1);
        if n <= 2 * lags {
            return Err(Error::InsufficientData(format!(
                "lag cutoff {t_cut} does not fit in the {} post-burn-in samples",
                n
            )));
        }
        let anchors = n - 2 * lags;
        let n_batches = anchors / batch;
        if n_batches < MIN_BATCHES {
            return Err(Error::InsufficientData(format!(
                "{n_batches} batches of span {} after burn-in, need {MIN_BATCHES}",
                batch as f64 * dt
            )));
        }

        let (mx, my) = (mean(xs), mean(ys));
        let prefix = |s: &[f64], m: f64| {
            let mut p = Vec::with_capacity(s.len() + 1);
            let mut acc = 0.0;
            p.push(0.0);
            for v in s {
                acc += v - m;
                p.push(acc);
            }
            p
        };
        let px = prefix(xs, mx);
        let py = prefix(ys, my);

        let mut out = SpectralBatches::default();
        for b in 0..n_batches {
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for k in 0..batch {
                let i = lags + b * batch + k;
                let dx = xs[i] - mx;
                let dy = ys[i] - my;
                let box_x = px[i + lags + 1] - px[i - lags];
                let box_y = py[i + lags + 1] - py[i - lags];
                sxy += 0.5 * (dx * box_y + dy * box_x);
                sxx += dx * box_x;
                syy += dy * box_y;
            }
            let norm = dt / batch as f64;
            out.xy.push(sxy * norm);
            out.xx.push(sxx * norm);
            out.yy.push(syy * norm);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.xy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xy.is_empty()
    }

    /// Pools batches from another independent series.
    pub fn extend(&mut self, other: &SpectralBatches) {
        self.xy.extend_from_slice(&other.xy);
        self.xx.extend_from_slice(&other.xx);
        self.yy.extend_from_slice(&other.yy);
    }

    fn require_batches(&self) -> Result<()> {
        if self.len() < MIN_BATCHES {
            return Err(Error::InsufficientData(format!(
                "{} batches, need {MIN_BATCHES}",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn cross(&self) -> Result<(f64, f64)> {
        self.require_batches()?;
        Ok(mean_and_stderr(&self.xy))
    }

    /// Pearson coefficient and its jackknife error over batches.
    pub fn pearson(&self) -> Result<(f64, f64)> {
        self.require_batches()?;
        let n = self.len();
        let (txy, txx, tyy): (f64, f64, f64) = (
            self.xy.iter().sum(),
            self.xx.iter().sum(),
            self.yy.iter().sum(),
        );
        let value = pearson(txy, txx, tyy)?;
        let mut leave_one_out = Vec::with_capacity(n);
        for i in 0..n {
            if let Ok(p) = pearson(txy - self.xy[i], txx - self.xx[i], tyy - self.yy[i]) {
                leave_one_out.push(p);
            }
        }
        if leave_one_out.len() < n {
            return Ok((value, f64::INFINITY));
        }
        let m = mean(&leave_one_out);
        let var = leave_one_out.iter().map(|p| (p - m) * (p - m)).sum::<f64>();
        Ok((value, ((n as f64 - 1.0) / n as f64 * var).sqrt()))
    }

    /// Summary with `x = I_T`, `y = z`. `sign` is applied to the cross terms
    /// (`sign(T1 - T0)` maps the record to the QPC current).
    pub fn summarize(&self, sign: f64) -> Result<CorrelationResult> {
        self.require_batches()?;
        let (s_tq, s_tq_err) = mean_and_stderr(&self.xy);
        let (s_tt, s_tt_err) = mean_and_stderr(&self.xx);
        let (s_qq, s_qq_err) = mean_and_stderr(&self.yy);
        let (p, p_err) = self.pearson()?;
        Ok(CorrelationResult {
            s_tq: sign * s_tq,
            s_tq_err,
            s_tt,
            s_tt_err,
            s_qq,
            s_qq_err,
            pearson: sign * p,
            pearson_err: p_err,
            n_batches: self.len(),
            noisy: s_tq_err > NOISY_FRACTION * s_tq.abs(),
        })
    }
}

/// Zero-frequency cross density of two stationary series and its
/// batch-means standard error.
pub fn zero_freq_cross(
    x: &[f64],
    y: &[f64],
    dt: f64,
    t_burn: f64,
    t_cut: f64,
) -> Result<(f64, f64)> {
    SpectralBatches::estimate(x, y, dt, t_burn, t_cut)?.cross()
}

/// `s_tq / sqrt(s_tt s_qq)`
pub fn pearson(s_tq: f64, s_tt: f64, s_qq: f64) -> Result<f64> {
    if !(s_tt > 0.0) || !(s_qq > 0.0) {
        return Err(Error::InsufficientData(format!(
            "non-positive autocorrelation (s_tt = {s_tt}, s_qq = {s_qq})"
        )));
    }
    Ok(s_tq / (s_tt * s_qq).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub s_tq: f64,
    pub s_tq_err: f64,
    pub s_tt: f64,
    pub s_tt_err: f64,
    pub s_qq: f64,
    pub s_qq_err: f64,
    pub pearson: f64,
    pub pearson_err: f64,
    pub n_batches: usize,
    pub noisy: bool,
}
