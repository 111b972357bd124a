//! Sensor pair → quantized gate voltage → encoded drain current.

use serde::{Deserialize, Serialize};

use crate::device::MosfetParams;
use crate::error::{Error, Result};
use crate::precircuit::{quantize, QuantizerConfig};

/// Two raw sensor voltages. `y_raw` drives the precircuit, `x_raw` is
/// applied directly as Vds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPair {
    pub y_raw: f64,
    pub x_raw: f64,
}

/// Ground truth carried alongside a sample for scoring only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub vgs_level: f64,
    pub vds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedSample {
    pub ids: f64,
    pub truth: Option<Truth>,
}

pub fn encode(pair: SensorPair, cfg: &QuantizerConfig, p: &MosfetParams) -> Result<EncodedSample> {
    let vgs = quantize(pair.y_raw, cfg)?;
    let ids = p.ids_forward(vgs, pair.x_raw)?;
    Ok(EncodedSample {
        ids,
        truth: Some(Truth {
            vgs_level: vgs,
            vds: pair.x_raw,
        }),
    })
}

/// Vds sweep for evaluation. With `include_endpoint` the grid is
/// `min, min+step, ..., max`; without it the last point is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VdsSweep {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub include_endpoint: bool,
}

impl Default for VdsSweep {
    fn default() -> Self {
        Self {
            min: 4.5,
            max: 10.0,
            step: 0.1,
            include_endpoint: true,
        }
    }
}

impl VdsSweep {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let s = Self {
            min,
            max,
            step,
            include_endpoint: true,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::Config(format!(
                "vds range [{}, {}] is empty",
                self.min, self.max
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Config(format!("vds step {} must be > 0", self.step)));
        }
        if self.points().len() < 2 {
            return Err(Error::Config(
                "vds sweep needs at least two points per curve".into(),
            ));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let last = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        let n = if self.include_endpoint { last + 1 } else { last };
        (0..n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// Evaluation inputs grouped by V_gs curve, V_ds ascending within a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    pub curves: Vec<Vec<SensorPair>>,
}

impl EvalGrid {
    pub fn len(&self) -> usize {
        self.curves.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened stream in transmit order.
    pub fn iter(&self) -> impl Iterator<Item = &SensorPair> {
        self.curves.iter().flatten()
    }
}

pub fn make_eval_grid(cfg: &QuantizerConfig, vds: &VdsSweep) -> Result<EvalGrid> {
    cfg.validate()?;
    vds.validate()?;
    let xs = vds.points();
    let curves: Vec<Vec<SensorPair>> = cfg
        .levels()
        .into_iter()
        .map(|y| {
            xs.iter()
                .map(|&x| SensorPair { y_raw: y, x_raw: x })
                .collect()
        })
        .collect();
    if curves.is_empty() {
        return Err(Error::Config("empty evaluation grid".into()));
    }
    Ok(EvalGrid { curves })
}

/// Encodes every curve of a grid, preserving its grouping.
pub fn encode_grid(
    grid: &EvalGrid,
    cfg: &QuantizerConfig,
    p: &MosfetParams,
) -> Result<Vec<Vec<EncodedSample>>> {
    grid.curves
        .iter()
        .map(|curve| curve.iter().map(|&pair| encode(pair, cfg, p)).collect())
        .collect()
}

/// Checks that every level stays in saturation over the whole Vds sweep,
/// i.e. `vds_min > vgs − vth` for the highest level, and that the lowest
/// level is above threshold.
pub fn check_saturation(levels: &[f64], vds: &VdsSweep, p: &MosfetParams) -> Result<()> {
    let (Some(&lo), Some(&hi)) = (levels.first(), levels.last()) else {
        return Err(Error::Empty("level grid"));
    };
    if lo <= p.vth {
        return Err(Error::Config(format!(
            "lowest level {lo} V is not above vth = {} V",
            p.vth
        )));
    }
    if vds.min <= hi - p.vth {
        return Err(Error::Config(format!(
            "vds_min = {} V does not keep level {hi} V in saturation (needs > {} V)",
            vds.min,
            hi - p.vth
        )));
    }
    Ok(())
}
