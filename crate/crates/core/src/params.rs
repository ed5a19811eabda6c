//! Physical parameters. Units: hbar = e = 1, energies and rates in units of
//! the hopping Omega, times in units of 1/Omega.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on `dt * max(gamma_l, gamma_r, gamma, |delta|)`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasMode {
    /// Left lead always fills, right lead always drains.
    Infinite,
    /// Fermi-weighted in/out rates from each lead's bath.
    Finite,
}

/// Electrochemical potential and temperature of one lead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bath {
    #[serde(with = "extended_f64")]
    pub mu: f64,
    pub kt: f64,
}

impl Default for Bath {
    fn default() -> Self {
        Bath { mu: 0.0, kt: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma_l: f64,
    pub gamma_r: f64,
    /// Measurement strength.
    pub gamma_meas: f64,
    pub dt: f64,
    pub bias_mode: BiasMode,
    pub bath_l: Bath,
    pub bath_r: Bath,
}

impl Default for SystemParams {
    /// Diffusive-trajectory parameter set: Gamma_L = 10, Gamma_R = 8,
    /// Delta = 10, gamma = 10, dt = 1e-4.
    fn default() -> Self {
        SystemParams {
            omega: 1.0,
            delta: 10.0,
            epsilon: 0.0,
            gamma_l: 10.0,
            gamma_r: 8.0,
            gamma_meas: 10.0,
            dt: 1e-4,
            bias_mode: BiasMode::Infinite,
            bath_l: Bath::default(),
            bath_r: Bath::default(),
        }
    }
}

/// JSON has no infinities; `+-inf` are written as the strings `"inf"`/`"-inf"`.
mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => s
                .parse::<f64>()
                .map_err(|_| de::Error::custom(format!("not a number: {s}"))),
        }
    }
}

fn require(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(key, reason))
    }
}

impl SystemParams {
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_meas = gamma;
        self
    }

    pub fn with_leads(mut self, gamma_l: f64, gamma_r: f64) -> Self {
        self.gamma_l = gamma_l;
        self.gamma_r = gamma_r;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Largest rate entering the explicit stability guard.
    pub fn fastest_rate(&self) -> f64 {
        self.gamma_l
            .max(self.gamma_r)
            .max(self.gamma_meas)
            .max(self.delta.abs())
    }

    /// Range checks, without the time-step guard.
    pub fn validate_physical(&self) -> Result<()> {
        let finite = [
            ("omega", self.omega),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("gamma_l", self.gamma_l),
            ("gamma_r", self.gamma_r),
            ("gamma", self.gamma_meas),
            ("dt", self.dt),
            ("mu_l", self.bath_l.mu),
            ("mu_r", self.bath_r.mu),
            ("kt_l", self.bath_l.kt),
            ("kt_r", self.bath_r.kt),
        ];
        for (key, v) in finite {
            // mu = +-inf is a legitimate infinite-bias limit
            if v.is_nan() || (v.is_infinite() && !key.starts_with("mu")) {
                return Err(Error::invalid(key, "must be finite"));
            }
        }
        require(self.omega >= 0.0, "omega", "must be >= 0")?;
        require(self.gamma_l >= 0.0, "gamma_l", "must be >= 0")?;
        require(self.gamma_r >= 0.0, "gamma_r", "must be >= 0")?;
        require(self.gamma_meas >= 0.0, "gamma", "must be >= 0")?;
        require(self.dt > 0.0, "dt", "must be > 0")?;
        require(self.bath_l.kt >= 0.0, "kt_l", "must be >= 0")?;
        require(self.bath_r.kt >= 0.0, "kt_r", "must be >= 0")?;
        Ok(())
    }

    /// Full validation, including `dt * max(rates) < 0.1`.
    pub fn validate(&self) -> Result<()> {
        self.validate_physical()?;
        let product = self.dt * self.fastest_rate();
        if product >= STABILITY_LIMIT {
            return Err(Error::StabilityGuard { product });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SystemParams::default().validate().unwrap();
    }

    #[test]
    fn coarse_step_trips_guard() {
        let p = SystemParams::default().with_dt(1.0);
        assert!(matches!(p.validate(), Err(Error::StabilityGuard { .. })));
        // the guard sits at exactly 0.1
        let p = SystemParams::default().with_gamma(10.0).with_dt(0.01);
        assert!(p.validate().is_err());
    }

    #[test]
    fn negative_rates_name_the_key() {
        let p = SystemParams {
            gamma_r: -1.0,
            ..SystemParams::default()
        };
        match p.validate() {
            Err(Error::Invalid { key, .. }) => assert_eq!(key, "gamma_r"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
