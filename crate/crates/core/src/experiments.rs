//! Sweep harness: encode → decode → RMSE across φ and λ, with CSV output.
//!
//! Every grid point is scored once. With sliding pairs `(k, k+1)` each pair
//! scores its second sample, and the first pair of a curve also scores the
//! curve's first sample. With disjoint pairs both samples are scored.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::MosfetParams;
use crate::error::{Error, Result};
use crate::precircuit::QuantizerConfig;
use crate::receiver::{decode_stream, DecodedPair, DecoderConfig, Pairing, StreamDecode};
use crate::transmitter::{check_saturation, encode_grid, make_eval_grid, EncodedSample, VdsSweep};

/// Decoded pairs whose V_gs differs from the truth by more than this count
/// as misdecodes.
pub const MISDECODE_TOL_V: f64 = 1e-9;

pub const CSV_HEADER: [&str; 9] = [
    "phi_V",
    "lambda_perV",
    "rmse_vgs_before_V",
    "rmse_vgs_after_V",
    "rmse_vds_before_V",
    "rmse_vds_after_V",
    "misdecodes_before",
    "misdecodes_after",
    "pairs",
];

/// φ from 0.1 V to 1.0 V in 0.05 V steps.
pub fn default_phi_grid() -> Vec<f64> {
    (0..=18).map(|k| f64::from(10 + 5 * k) / 100.0).collect()
}

/// 25 log-spaced λ values over [0.001, 0.2] 1/V.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-3, 0.2, 25)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub device: MosfetParams,
    pub phi_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub vds: VdsSweep,
    pub vgs_min: f64,
    pub vgs_max: f64,
    pub pairing: Pairing,
    /// Standard deviation of additive Gaussian current noise, A.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            device: MosfetParams::nmos_180nm(),
            phi_values: default_phi_grid(),
            lambda_values: default_lambda_grid(),
            vds: VdsSweep::default(),
            vgs_min: 1.0,
            vgs_max: 5.0,
            pairing: Pairing::Sliding,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SweepSpec {
    pub fn quantizer(&self, phi: f64) -> Result<QuantizerConfig> {
        QuantizerConfig::new(phi, self.vgs_min, self.vgs_max)
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.vds.validate()?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma = {} must be >= 0",
                self.noise_sigma
            )));
        }
        if self.phi_values.is_empty() {
            return Err(Error::Empty("phi_values"));
        }
        for &phi in &self.phi_values {
            let q = self.quantizer(phi)?;
            check_saturation(&q.levels(), &self.vds, &self.device)?;
        }
        for &l in &self.lambda_values {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Config(format!("lambda = {l} must be > 0")));
            }
        }
        if self.device.lambda == 0.0 {
            return Err(Error::InversionUndefined);
        }
        Ok(())
    }
}

/// One decoded grid point against its truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPoint {
    pub vgs_hat: f64,
    pub vgs_true: f64,
    pub vds_hat: f64,
    pub vds_true: f64,
}

fn truth_of(segments: &[Vec<EncodedSample>], curve: usize, index: usize) -> Result<crate::transmitter::Truth> {
    segments
        .get(curve)
        .and_then(|s| s.get(index))
        .and_then(|s| s.truth)
        .ok_or(Error::Config(format!(
            "no truth for sample {index} of curve {curve}"
        )))
}

pub fn score(
    decoded: &StreamDecode,
    segments: &[Vec<EncodedSample>],
    pairing: Pairing,
) -> Result<Vec<ScoredPoint>> {
    let mut out = Vec::with_capacity(decoded.pairs.len() + segments.len());
    for p in &decoded.pairs {
        let first = truth_of(segments, p.curve, p.index)?;
        let second = truth_of(segments, p.curve, p.index + 1)?;
        let score_first = match pairing {
            Pairing::Sliding => p.index == 0,
            Pairing::Disjoint => true,
        };
        if score_first {
            out.push(ScoredPoint {
                vgs_hat: p.vgs_hat,
                vgs_true: first.vgs_level,
                vds_hat: p.vds_hat_1,
                vds_true: first.vds,
            });
        }
        out.push(ScoredPoint {
            vgs_hat: p.vgs_hat,
            vgs_true: second.vgs_level,
            vds_hat: p.vds_hat_2,
            vds_true: second.vds,
        });
    }
    Ok(out)
}

/// `(rmse_vgs, rmse_vds)` over the scored points.
pub fn rmse(points: &[ScoredPoint]) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(Error::Empty("scored points"));
    }
    let n = points.len() as f64;
    let (sg, sd) = points.iter().fold((0.0, 0.0), |(g, d), p| {
        let eg = p.vgs_hat - p.vgs_true;
        let ed = p.vds_hat - p.vds_true;
        (g + eg * eg, d + ed * ed)
    });
    Ok(((sg / n).sqrt(), (sd / n).sqrt()))
}

pub fn is_misdecode(p: &DecodedPair, segments: &[Vec<EncodedSample>]) -> Result<bool> {
    let t = truth_of(segments, p.curve, p.index)?;
    Ok((p.vgs_hat - t.vgs_level).abs() > MISDECODE_TOL_V)
}

pub fn count_misdecodes(decoded: &StreamDecode, segments: &[Vec<EncodedSample>]) -> Result<usize> {
    decoded.pairs.iter().try_fold(0, |n, p| {
        Ok(n + usize::from(is_misdecode(p, segments)?))
    })
}

/// Adds zero-mean Gaussian noise of std `sigma` to every current.
/// `sigma = 0` returns the input unchanged.
pub fn perturb(segments: &[Vec<EncodedSample>], sigma: f64, seed: u64) -> Result<Vec<Vec<EncodedSample>>> {
    if sigma == 0.0 {
        return Ok(segments.to_vec());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(segments
        .iter()
        .map(|seg| {
            seg.iter()
                .map(|s| EncodedSample {
                    ids: s.ids + normal.sample(&mut rng),
                    truth: s.truth,
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub phi: f64,
    pub lambda: f64,
    pub rmse_vgs_before: f64,
    pub rmse_vgs_after: f64,
    pub rmse_vds_before: f64,
    pub rmse_vds_after: f64,
    pub misdecodes_before: usize,
    pub misdecodes_after: usize,
    pub pairs: usize,
}

/// Decoded stream of one configuration, with and without correction.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub segments: Vec<Vec<EncodedSample>>,
    pub before: StreamDecode,
    pub after: StreamDecode,
}

/// Encodes the full grid for one (φ, device) and decodes it both ways.
pub fn run_cell(
    device: &MosfetParams,
    q: &QuantizerConfig,
    vds: &VdsSweep,
    pairing: Pairing,
    noise_sigma: f64,
    seed: u64,
) -> Result<CellRun> {
    let grid = make_eval_grid(q, vds)?;
    let clean = encode_grid(&grid, q, device)?;
    let segments = perturb(&clean, noise_sigma, seed)?;
    let dec = DecoderConfig::new(q.levels(), device.clone(), (vds.min, vds.max))?;
    let before = decode_stream(&dec, &segments, pairing, false)?;
    let after = decode_stream(&dec, &segments, pairing, true)?;
    Ok(CellRun {
        segments,
        before,
        after,
    })
}

pub fn evaluate_cell(
    device: &MosfetParams,
    q: &QuantizerConfig,
    vds: &VdsSweep,
    pairing: Pairing,
    noise_sigma: f64,
    seed: u64,
) -> Result<SweepCell> {
    let run = run_cell(device, q, vds, pairing, noise_sigma, seed)?;
    let (gb, db) = rmse(&score(&run.before, &run.segments, pairing)?)?;
    let (ga, da) = rmse(&score(&run.after, &run.segments, pairing)?)?;
    Ok(SweepCell {
        phi: q.phi,
        lambda: device.lambda,
        rmse_vgs_before: gb,
        rmse_vgs_after: ga,
        rmse_vds_before: db,
        rmse_vds_after: da,
        misdecodes_before: count_misdecodes(&run.before, &run.segments)?,
        misdecodes_after: count_misdecodes(&run.after, &run.segments)?,
        pairs: run.after.pairs.len(),
    })
}

/// Per-cell RNG seed; depends only on the spec seed and the cell's position
/// in the sorted output.
fn cell_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Phi,
    Lambda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: SweepParam,
    /// Sorted by (φ, λ).
    pub cells: Vec<SweepCell>,
}

fn run_cells(spec: &SweepSpec, mut grid: Vec<(f64, f64)>, param: SweepParam) -> Result<SweepResult> {
    spec.validate()?;
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(phi, lambda))| {
            let q = spec.quantizer(phi)?;
            evaluate_cell(
                &spec.device.with_lambda(lambda),
                &q,
                &spec.vds,
                spec.pairing,
                spec.noise_sigma,
                cell_seed(spec.seed, i),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { param, cells })
}

/// RMSE across `spec.phi_values` at the device's own λ.
pub fn sweep_phi(spec: &SweepSpec) -> Result<SweepResult> {
    let lambda = spec.device.lambda;
    let grid = spec.phi_values.iter().map(|&phi| (phi, lambda)).collect();
    run_cells(spec, grid, SweepParam::Phi)
}

/// RMSE across every (φ, λ) combination.
pub fn sweep_lambda(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.lambda_values.is_empty() {
        return Err(Error::Empty("lambda_values"));
    }
    let grid = spec
        .phi_values
        .iter()
        .flat_map(|&phi| spec.lambda_values.iter().map(move |&l| (phi, l)))
        .collect();
    run_cells(spec, grid, SweepParam::Lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub max_rmse_vgs_before: f64,
    pub max_rmse_vgs_after: f64,
    pub max_rmse_vds_before: f64,
    pub max_rmse_vds_after: f64,
    /// Largest φ whose after-correction V_gs RMSE exceeds 1e-6 V.
    pub threshold_phi: Option<f64>,
}

impl SweepResult {
    pub fn summary(&self) -> SweepSummary {
        let max = |f: fn(&SweepCell) -> f64| self.cells.iter().map(f).fold(0.0, f64::max);
        SweepSummary {
            max_rmse_vgs_before: max(|c| c.rmse_vgs_before),
            max_rmse_vgs_after: max(|c| c.rmse_vgs_after),
            max_rmse_vds_before: max(|c| c.rmse_vds_before),
            max_rmse_vds_after: max(|c| c.rmse_vds_after),
            threshold_phi: self
                .cells
                .iter()
                .filter(|c| c.rmse_vgs_after > 1e-6)
                .map(|c| c.phi)
                .max_by(f64::total_cmp),
        }
    }

    /// Writes `#`-prefixed comment lines, the header row, then one row per
    /// cell.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            for line in c.lines() {
                writeln!(w, "# {line}")?;
            }
        }
        let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        csv.write_record(CSV_HEADER)?;
        for c in &self.cells {
            csv.write_record([
                fmt_sig(c.phi),
                fmt_sig(c.lambda),
                fmt_sig(c.rmse_vgs_before),
                fmt_sig(c.rmse_vgs_after),
                fmt_sig(c.rmse_vds_before),
                fmt_sig(c.rmse_vds_after),
                c.misdecodes_before.to_string(),
                c.misdecodes_after.to_string(),
                c.pairs.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, comments: &[String]) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, comments)?;
        Ok(String::from_utf8(buf).expect("csv output is ascii"))
    }
}

/// Formats like C's `%.9g`.
pub fn fmt_sig(x: f64) -> String {
    const SIG: i32 = 9;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..SIG).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (SIG - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
