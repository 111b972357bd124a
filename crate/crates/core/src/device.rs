//! Square-law MOSFET model in the saturation region with channel-length
//! modulation.
//!
//! `Ids = ½·k'·(Vgs − Vth)²·(1 + λ·Vds)` where `k' = W·µ·Cox / L`.
//!
//! The model does not check `Vds > Vgs − Vth`. Callers that build sweeps are
//! expected to keep Vds well inside saturation (see
//! [`crate::transmitter::make_eval_grid`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device constants of the saturation-region model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MosfetParams {
    /// Combined transconductance factor `W·µ·Cox / L` in A/V².
    pub kprime: f64,
    /// Threshold voltage in V.
    pub vth: f64,
    /// Channel-length modulation parameter in 1/V.
    pub lambda: f64,
    pub label: String,
}

impl MosfetParams {
    pub fn new(kprime: f64, vth: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            kprime,
            vth,
            lambda,
            label: String::new(),
        };
        p.validate()?;
        Ok(p)
    }

    /// 0.18 µm nMOS used for the reference evaluation:
    /// k' = 155 µA/V², Vth = 0.74 V, λ = 0.037 1/V.
    pub fn nmos_180nm() -> Self {
        Self {
            kprime: 155e-6,
            vth: 0.74,
            lambda: 0.037,
            label: "nmos-0.18um".to_string(),
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kprime.is_finite() && self.kprime > 0.0) {
            return Err(Error::InvalidParams(format!(
                "kprime must be > 0, got {}",
                self.kprime
            )));
        }
        if !(self.vth.is_finite() && self.vth > 0.0) {
            return Err(Error::InvalidParams(format!(
                "vth must be > 0, got {}",
                self.vth
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    fn overdrive(&self, vgs: f64) -> Result<f64> {
        if vgs > self.vth {
            Ok(vgs - self.vth)
        } else {
            Err(Error::DeviceOff { vgs, vth: self.vth })
        }
    }

    /// `½·k'·(Vgs − Vth)²`, the current at Vds = 0 extrapolated along the
    /// saturation line.
    fn base_current(&self, vgs: f64) -> Result<f64> {
        let vov = self.overdrive(vgs)?;
        Ok(0.5 * self.kprime * vov * vov)
    }

    /// Drain-source current for the given bias.
    pub fn ids_forward(&self, vgs: f64, vds: f64) -> Result<f64> {
        Ok(self.base_current(vgs)? * (1.0 + self.lambda * vds))
    }

    /// Recovers Vds from a current on the `vgs` curve.
    ///
    /// The result may be negative or arbitrarily large when `ids` was not
    /// produced on this curve; the receiver's range check relies on that.
    pub fn invert_vds(&self, vgs: f64, ids: f64) -> Result<f64> {
        let base = self.base_current(vgs)?;
        if self.lambda == 0.0 {
            return Err(Error::InversionUndefined);
        }
        if ids.is_nan() || ids <= 0.0 {
            return Err(Error::NonPositiveCurrent(ids));
        }
        Ok((ids / base - 1.0) / self.lambda)
    }

    /// Exact dIds/dVds of the `vgs` curve. Independent of Vds because the
    /// model is affine in Vds.
    pub fn curve_slope_exact(&self, vgs: f64) -> Result<f64> {
        Ok(self.lambda * self.base_current(vgs)?)
    }

    /// Slope estimate `λ·(Ia + Ib)/2` from two observed currents.
    pub fn approx_slope_from_currents(&self, ids_a: f64, ids_b: f64) -> f64 {
        self.lambda * 0.5 * (ids_a + ids_b)
    }

    pub fn operating_point(&self, vgs: f64, vds: f64) -> Result<OperatingPoint> {
        Ok(OperatingPoint {
            vgs,
            vds,
            ids: self.ids_forward(vgs, vds)?,
        })
    }
}

impl Default for MosfetParams {
    fn default() -> Self {
        Self::nmos_180nm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub vgs: f64,
    pub vds: f64,
    pub ids: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn forward_reference_device() {
        let p = MosfetParams::nmos_180nm();
        // 0.5 * 155e-6 * 1.26^2 * 1.185, evaluated at 40 digits
        let ids = p.ids_forward(2.0, 5.0).unwrap();
        assert!(rel(ids, 1.45801215e-4) < 1e-12, "{ids}");
    }

    #[test]
    fn zero_lambda_removes_vds_dependence() {
        let p = MosfetParams::nmos_180nm().with_lambda(0.0);
        let a = p.ids_forward(2.0, 5.0).unwrap();
        let b = p.ids_forward(2.0, 9.0).unwrap();
        assert_eq!(a, b);
        assert!(rel(a, 1.230390e-4) < 1e-12);
        assert_eq!(p.curve_slope_exact(3.0).unwrap(), 0.0);
        assert_eq!(p.approx_slope_from_currents(1e-4, 2e-4), 0.0);
    }

    #[test]
    fn current_vanishes_at_threshold() {
        let p = MosfetParams::nmos_180nm();
        let ids = p.ids_forward(p.vth + 1e-9, 7.0).unwrap();
        assert!(ids < 1e-20);
        assert!(matches!(
            p.ids_forward(p.vth, 7.0),
            Err(Error::DeviceOff { .. })
        ));
        assert!(p.ids_forward(0.2, 7.0).is_err());
    }

    #[test]
    fn inversion_examples() {
        let p = MosfetParams::nmos_180nm();
        let v = p.invert_vds(2.0, 1.45801215e-4).unwrap();
        assert!((v - 5.0).abs() < 1e-9);
        let v0 = p.invert_vds(2.0, 1.230390e-4).unwrap();
        assert!(v0.abs() < 1e-9);
        // a current from the 2.0 V curve read back on the 2.25 V curve
        let i = p.ids_forward(2.0, 9.5).unwrap();
        let v = p.invert_vds(2.25, i).unwrap();
        assert!((v - (-1.5937968581)).abs() < 1e-8, "{v}");
    }

    #[test]
    fn inversion_errors() {
        let p = MosfetParams::nmos_180nm();
        assert!(matches!(
            p.invert_vds(0.5, 1e-4),
            Err(Error::DeviceOff { .. })
        ));
        assert_eq!(
            p.with_lambda(0.0).invert_vds(2.0, 1e-4),
            Err(Error::InversionUndefined)
        );
        assert!(p.invert_vds(2.0, 0.0).is_err());
    }

    #[test]
    fn slopes() {
        let p = MosfetParams::nmos_180nm();
        let s = p.curve_slope_exact(2.0).unwrap();
        assert!(rel(s, 4.552443e-6) < 1e-12);
        assert!(rel(p.approx_slope_from_currents(1e-4, 1e-4), 3.7e-6) < 1e-12);
        let a = p.ids_forward(2.0, 5.0).unwrap();
        let b = p.ids_forward(2.0, 5.1).unwrap();
        assert!(rel(b, 1.462564593e-4) < 1e-9);
        let approx = p.approx_slope_from_currents(a, b);
        assert!(rel(approx, 5.40306697455e-6) < 1e-10, "{approx}");
    }

    #[test]
    fn parameter_validation() {
        assert!(MosfetParams::new(155e-6, 0.74, 0.037).is_ok());
        assert!(MosfetParams::new(0.0, 0.74, 0.037).is_err());
        assert!(MosfetParams::new(1e-4, -0.1, 0.037).is_err());
        assert!(MosfetParams::new(1e-4, 0.7, -0.01).is_err());
        assert!(MosfetParams::new(1e-4, 0.7, f64::NAN).is_err());
    }
}
