use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declarative description of a simulatable process.
///
/// Serializes as `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProcessSpec {
    Wiener(WienerParams),
    Fbm(FbmParams),
    ItoDiffusion(ItoParams),
    OrnsteinUhlenbeck(OuParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerParams {
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbmParams {
    pub hurst: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItoParams {
    #[serde(flatten)]
    pub diffusion: DiffusionModel,
    #[serde(default)]
    pub x0: f64,
}

/// Registered diffusion coefficients for the drift-free SDE `dx = √D(x,t) dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "diffusion_id", rename_all = "snake_case")]
pub enum DiffusionModel {
    /// `D(x) = x`, reflected at zero.
    LinearX,
    /// `D(x) = 1 + |x|`.
    OnePlusAbsX,
    /// `D(x,t) = t^(2H−1) · D̂(x / t^H)` with `D̂(u) = 1 + |u|`.
    ScalingH { hurst: f64 },
    /// `D(t) = exp(γ t)`.
    ExpT { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuParams {
    pub theta: f64,
    pub sigma: f64,
    #[serde(default)]
    pub x0: f64,
    /// Draw the initial state from the stationary law `N(0, σ²/2θ)`.
    #[serde(default)]
    pub stationary_start: bool,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::rejected(format!("sigma must be finite and > 0, got {sigma}")));
    }
    Ok(())
}

pub(crate) fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::rejected(format!(
            "hurst exponent H must lie in (0, 1), got {hurst}"
        )));
    }
    Ok(())
}

impl WienerParams {
    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)
    }
}

impl FbmParams {
    pub fn validate(&self) -> Result<()> {
        check_hurst(self.hurst)?;
        check_sigma(self.sigma)
    }
}

impl ItoParams {
    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_finite() {
            return Err(Error::rejected(format!("x0 must be finite, got {}", self.x0)));
        }
        match self.diffusion {
            DiffusionModel::LinearX if self.x0 <= 0.0 => Err(Error::rejected(format!(
                "linear_x diffusion requires x0 > 0, got {}",
                self.x0
            ))),
            DiffusionModel::ScalingH { hurst } => check_hurst(hurst),
            DiffusionModel::ExpT { gamma } if !gamma.is_finite() => {
                Err(Error::rejected(format!("gamma must be finite, got {gamma}")))
            }
            _ => Ok(()),
        }
    }
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::rejected(format!("theta must be > 0, got {}", self.theta)));
        }
        check_sigma(self.sigma)?;
        if !self.x0.is_finite() {
            return Err(Error::rejected(format!("x0 must be finite, got {}", self.x0)));
        }
        Ok(())
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.theta)
    }

    /// Stationary autocovariance `σ²/(2θ) · e^(−θ|lag|)`.
    pub fn autocovariance(&self, lag: f64) -> f64 {
        self.stationary_variance() * (-self.theta * lag.abs()).exp()
    }
}

impl DiffusionModel {
    pub fn id(&self) -> &'static str {
        match self {
            DiffusionModel::LinearX => "linear_x",
            DiffusionModel::OnePlusAbsX => "one_plus_abs_x",
            DiffusionModel::ScalingH { .. } => "scaling_h",
            DiffusionModel::ExpT { .. } => "exp_t",
        }
    }

    /// Diffusion coefficient at `(x, t)`. `t_floor` replaces non-positive
    /// times for the scaling form, which is indeterminate at `t = 0`.
    pub fn coefficient(&self, x: f64, t: f64, t_floor: f64) -> f64 {
        match *self {
            DiffusionModel::LinearX => x,
            DiffusionModel::OnePlusAbsX => 1.0 + x.abs(),
            DiffusionModel::ScalingH { hurst } => {
                let t = t.max(t_floor);
                let th = t.powf(hurst);
                t.powf(2.0 * hurst - 1.0) * (1.0 + (x / th).abs())
            }
            DiffusionModel::ExpT { gamma } => (gamma * t).exp(),
        }
    }
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Wiener(p) => p.validate(),
            ProcessSpec::Fbm(p) => p.validate(),
            ProcessSpec::ItoDiffusion(p) => p.validate(),
            ProcessSpec::OrnsteinUhlenbeck(p) => p.validate(),
        }
    }

    pub fn wiener(sigma: f64) -> Self {
        ProcessSpec::Wiener(WienerParams { sigma })
    }

    pub fn fbm(hurst: f64, sigma: f64) -> Self {
        ProcessSpec::Fbm(FbmParams { hurst, sigma })
    }

    pub fn ito(diffusion: DiffusionModel, x0: f64) -> Self {
        ProcessSpec::ItoDiffusion(ItoParams { diffusion, x0 })
    }

    pub fn ou(theta: f64, sigma: f64, x0: f64, stationary_start: bool) -> Self {
        ProcessSpec::OrnsteinUhlenbeck(OuParams {
            theta,
            sigma,
            x0,
            stationary_start,
        })
    }

    /// Short human label, e.g. `fbm(H=0.7)`.
    pub fn label(&self) -> String {
        match self {
            ProcessSpec::Wiener(p) => format!("wiener(sigma={})", p.sigma),
            ProcessSpec::Fbm(p) => format!("fbm(H={}, sigma={})", p.hurst, p.sigma),
            ProcessSpec::ItoDiffusion(p) => format!("ito({}, x0={})", p.diffusion.id(), p.x0),
            ProcessSpec::OrnsteinUhlenbeck(p) => {
                format!("ou(theta={}, sigma={})", p.theta, p.sigma)
            }
        }
    }

    /// Whether the process is a drift-free martingale (constant ensemble mean).
    pub fn is_martingale(&self) -> bool {
        !matches!(self, ProcessSpec::OrnsteinUhlenbeck(_) | ProcessSpec::Fbm(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_uses_kind_and_params() {
        let spec = ProcessSpec::ito(DiffusionModel::ExpT { gamma: 1.0 }, 0.0);
        let v: serde_json::Value = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["kind"], "ito_diffusion");
        assert_eq!(v["params"]["diffusion_id"], "exp_t");
        assert_eq!(v["params"]["gamma"], 1.0);
        let back: ProcessSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn parses_every_registered_diffusion_id() {
        for (id, extra) in [
            ("linear_x", ""),
            ("one_plus_abs_x", ""),
            ("scaling_h", r#","hurst":0.5"#),
            ("exp_t", r#","gamma":1.0"#),
        ] {
            let json = format!(
                r#"{{"kind":"ito_diffusion","params":{{"diffusion_id":"{id}","x0":1.0{extra}}}}}"#
            );
            let spec: ProcessSpec = serde_json::from_str(&json).unwrap();
            spec.validate().unwrap();
        }
    }

    #[test]
    fn validation_names_the_bad_parameter() {
        let err = ProcessSpec::fbm(1.5, 1.0).validate().unwrap_err().to_string();
        assert!(err.contains("H") && err.contains("(0, 1)"), "{err}");
        assert!(ProcessSpec::wiener(f64::NAN).validate().is_err());
        assert!(ProcessSpec::ou(0.0, 1.0, 0.0, true).validate().is_err());
        assert!(ProcessSpec::ito(DiffusionModel::LinearX, 0.0).validate().is_err());
        assert!(ProcessSpec::ito(DiffusionModel::LinearX, 1.0).validate().is_ok());
    }

    #[test]
    fn scaling_coefficient_with_half_hurst() {
        let d = DiffusionModel::ScalingH { hurst: 0.5 };
        assert!((d.coefficient(2.0, 4.0, 1e-3) - 2.0).abs() < 1e-12);
        // t = 0 falls back to the floor time
        assert!((d.coefficient(0.0, 0.0, 0.01) - 1.0).abs() < 1e-12);
    }
}
