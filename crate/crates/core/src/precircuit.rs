//! Behavioral model of the variable-φ quantizing precircuit.
//!
//! The raw gate input is floored by the integer-level quantizer (ILQ) and the
//! fractional residual walks through up to four stages. Stage `n` compares
//! its input against `0.5 / 2^(n-1)` V. A stage that is not the last one for
//! the selected φ emits a residual `V_res` (the threshold) which is
//! subtracted from the running residual; the last stage emits `V_fin`
//! (twice the threshold) and every stage after it is powered down.
//!
//! The φ selection travels as a one-hot code on four lines `φ3..φ0`. Its
//! prefix closure `φ3'..φ0'` supplies power to the stages.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of residual stages in the circuit.
pub const STAGES: usize = 4;

/// Quantization steps realizable by the circuit, indexed by stage.
pub const CIRCUIT_PHIS: [f64; STAGES] = [1.0, 0.5, 0.25, 0.125];

/// Supply/logic HIGH level in V.
pub const LOGIC_HIGH_V: f64 = 5.0;

/// Per-OpAmp power in µW.
pub const OPAMP_POWER_UW: f64 = 8.0;
/// Per-comparator power in µW (12.7 nW).
pub const COMPARATOR_POWER_UW: f64 = 12.7e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Logic {
    Low,
    High,
}

impl Logic {
    pub fn volts(self) -> f64 {
        match self {
            Logic::Low => 0.0,
            Logic::High => LOGIC_HIGH_V,
        }
    }

    pub fn is_high(self) -> bool {
        self == Logic::High
    }
}

/// One-hot φ selection, lines ordered `(φ3, φ2, φ1, φ0)`.
///
/// `φ3` selects 1 V, `φ2` 0.5 V, `φ1` 0.25 V and `φ0` 0.125 V. Line `i` of
/// the array is therefore the control line of stage `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiCode {
    lines: [Logic; STAGES],
}

impl PhiCode {
    pub fn from_lines(lines: [Logic; STAGES]) -> Result<Self> {
        let high = lines.iter().filter(|l| l.is_high()).count();
        if high != 1 {
            return Err(Error::Config(format!(
                "phi code must be one-hot, got {high} HIGH lines"
            )));
        }
        Ok(Self { lines })
    }

    pub fn lines(&self) -> [Logic; STAGES] {
        self.lines
    }

    pub fn volts(&self) -> [f64; STAGES] {
        self.lines.map(Logic::volts)
    }

    /// 1-based index of the stage that emits `V_fin`.
    pub fn last_stage(&self) -> usize {
        self.lines.iter().position(|l| l.is_high()).unwrap() + 1
    }

    pub fn phi(&self) -> f64 {
        CIRCUIT_PHIS[self.last_stage() - 1]
    }
}

impl fmt::Display for PhiCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.volts();
        write!(f, "({}, {}, {}, {})", v[0], v[1], v[2], v[3])
    }
}

/// Stage supply lines `(φ3', φ2', φ1', φ0')`. Always a nonempty prefix of
/// HIGH lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiPrimeCode {
    lines: [Logic; STAGES],
}

impl PhiPrimeCode {
    pub fn lines(&self) -> [Logic; STAGES] {
        self.lines
    }

    pub fn volts(&self) -> [f64; STAGES] {
        self.lines.map(Logic::volts)
    }

    /// Whether stage `n` (1-based) has supply.
    pub fn is_powered(&self, n: usize) -> bool {
        self.lines[n - 1].is_high()
    }

    pub fn is_prefix(&self) -> bool {
        let first_low = self
            .lines
            .iter()
            .position(|l| !l.is_high())
            .unwrap_or(STAGES);
        first_low > 0 && self.lines[first_low..].iter().all(|l| !l.is_high())
    }

    pub fn active_stages(&self) -> usize {
        self.lines.iter().filter(|l| l.is_high()).count()
    }
}

fn circuit_stage_index(phi: f64) -> Option<usize> {
    CIRCUIT_PHIS.iter().position(|&p| (p - phi).abs() < 1e-12)
}

/// Maps a circuit φ to its one-hot control code.
pub fn encode_phi(phi: f64) -> Result<PhiCode> {
    let idx = circuit_stage_index(phi).ok_or(Error::UnsupportedPhi(phi))?;
    let mut lines = [Logic::Low; STAGES];
    lines[idx] = Logic::High;
    Ok(PhiCode { lines })
}

/// Drives every supply line up to and including the selected stage HIGH.
pub fn derive_phi_prime(code: &PhiCode) -> PhiPrimeCode {
    let last = code.last_stage();
    let mut lines = [Logic::Low; STAGES];
    for l in lines.iter_mut().take(last) {
        *l = Logic::High;
    }
    PhiPrimeCode { lines }
}

/// Quantizer range and step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerConfig {
    pub phi: f64,
    pub vgs_min: f64,
    pub vgs_max: f64,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            phi: 0.5,
            vgs_min: 1.0,
            vgs_max: 5.0,
        }
    }
}

impl QuantizerConfig {
    pub fn new(phi: f64, vgs_min: f64, vgs_max: f64) -> Result<Self> {
        let cfg = Self {
            phi,
            vgs_min,
            vgs_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reference `[1, 5]` V level range with the given step.
    pub fn with_phi(phi: f64) -> Result<Self> {
        Self::new(phi, 1.0, 5.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vgs_min.is_finite() && self.vgs_max.is_finite()) || self.vgs_min >= self.vgs_max
        {
            return Err(Error::Config(format!(
                "vgs range [{}, {}] is empty",
                self.vgs_min, self.vgs_max
            )));
        }
        if !(self.phi.is_finite() && self.phi > 0.0 && self.phi <= self.vgs_max - self.vgs_min) {
            return Err(Error::Config(format!(
                "phi = {} must lie in (0, {}]",
                self.phi,
                self.vgs_max - self.vgs_min
            )));
        }
        Ok(())
    }

    pub fn level_count(&self) -> usize {
        ((self.vgs_max - self.vgs_min) / self.phi + 1e-9).floor() as usize + 1
    }

    pub fn level(&self, i: usize) -> f64 {
        self.vgs_min + i as f64 * self.phi
    }

    /// Ascending V_gs level grid.
    pub fn levels(&self) -> Vec<f64> {
        (0..self.level_count()).map(|i| self.level(i)).collect()
    }

    pub fn top_level(&self) -> f64 {
        self.level(self.level_count() - 1)
    }

    /// The one-hot code when φ is realizable by the circuit.
    pub fn phi_code(&self) -> Option<PhiCode> {
        encode_phi(self.phi).ok()
    }

    /// Whether `quantize` runs the staged circuit model for this config.
    pub fn uses_circuit(&self) -> bool {
        self.phi_code().is_some() && self.vgs_min.fract() == 0.0
    }

    fn check_input(&self, vin: f64) -> Result<()> {
        if vin >= self.vgs_min && vin <= self.vgs_max {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                value: vin,
                min: self.vgs_min,
                max: self.vgs_max,
            })
        }
    }
}

/// Integer-level quantizer: floors `vin` to a reference integer.
pub fn ilq(vin: f64, cfg: &QuantizerConfig) -> Result<f64> {
    cfg.check_input(vin)?;
    Ok(vin.floor())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StageKind {
    Residual,
    Final,
    PoweredDown,
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageKind::Residual => "residual",
            StageKind::Final => "final",
            StageKind::PoweredDown => "powered-down",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageOutput {
    pub emitted: f64,
    pub residual_out: f64,
    pub kind: StageKind,
}

/// Runs one powered stage.
///
/// Stage `n` accepts residuals in `[0, 1/2^(n-1))` and compares against
/// `t = 0.5/2^(n-1)`. At or above `t` it emits `t` (not last) or `2t`
/// (last); below `t` it emits 0. The residual handed on is the input minus
/// the emitted `V_res`.
pub fn run_stage(n: usize, residual_in: f64, is_last: bool) -> Result<StageOutput> {
    assert!((1..=STAGES).contains(&n), "stage index {n} out of 1..=4");
    let limit = 1.0 / f64::from(1u32 << (n - 1));
    let threshold = 0.5 * limit;
    if !(residual_in >= 0.0 && residual_in < limit) {
        return Err(Error::StageInvariant {
            stage: n as u8,
            residual: residual_in,
            limit,
        });
    }
    let fired = residual_in >= threshold;
    let out = match (is_last, fired) {
        (false, true) => StageOutput {
            emitted: threshold,
            residual_out: residual_in - threshold,
            kind: StageKind::Residual,
        },
        (false, false) => StageOutput {
            emitted: 0.0,
            residual_out: residual_in,
            kind: StageKind::Residual,
        },
        (true, fired) => StageOutput {
            emitted: if fired { limit } else { 0.0 },
            residual_out: 0.0,
            kind: StageKind::Final,
        },
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    pub input: f64,
    pub emitted: f64,
    pub kind: StageKind,
}

/// Full record of one pass through the precircuit.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub vin: f64,
    pub code: PhiCode,
    pub supply: PhiPrimeCode,
    pub ilq: f64,
    pub stages: Vec<StageRecord>,
    /// Adder output after clamping to the level grid.
    pub output: f64,
}

/// Runs the staged circuit model. Requires a circuit φ.
pub fn quantize_staged(vin: f64, cfg: &QuantizerConfig) -> Result<StageTrace> {
    let code = encode_phi(cfg.phi)?;
    let supply = derive_phi_prime(&code);
    let last = code.last_stage();
    let base = ilq(vin, cfg)?;

    let mut residual = vin - base;
    let mut sum = base;
    let mut stages = Vec::with_capacity(STAGES);
    for n in 1..=STAGES {
        if !supply.is_powered(n) {
            stages.push(StageRecord {
                stage: n,
                input: 0.0,
                emitted: 0.0,
                kind: StageKind::PoweredDown,
            });
            continue;
        }
        let out = run_stage(n, residual, n == last)?;
        stages.push(StageRecord {
            stage: n,
            input: residual,
            emitted: out.emitted,
            kind: out.kind,
        });
        sum += out.emitted;
        residual = out.residual_out;
    }

    Ok(StageTrace {
        vin,
        code,
        supply,
        ilq: base,
        stages,
        output: sum.clamp(cfg.vgs_min, cfg.top_level()),
    })
}

/// Nearest level on the grid, ties rounding up, clamped to the grid.
pub fn quantize_nearest(vin: f64, cfg: &QuantizerConfig) -> Result<f64> {
    cfg.check_input(vin)?;
    let steps = ((vin - cfg.vgs_min) / cfg.phi + 0.5).floor();
    let idx = (steps.max(0.0) as usize).min(cfg.level_count() - 1);
    Ok(cfg.level(idx))
}

/// Maps a raw gate input onto the V_gs level grid.
///
/// Circuit φ values on an integer-aligned range go through the staged model;
/// any other step uses the behavioral nearest-level quantizer.
pub fn quantize(vin: f64, cfg: &QuantizerConfig) -> Result<f64> {
    if cfg.uses_circuit() {
        Ok(quantize_staged(vin, cfg)?.output)
    } else {
        quantize_nearest(vin, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub opamps: usize,
    pub comparators: usize,
    pub total_uw: f64,
}

/// OpAmp/comparator power of the precircuit.
///
/// One OpAmp per active stage plus the final adder; in the shared
/// single-stage configuration a single OpAmp serves the whole bank.
/// Comparators: one per ILQ reference integer plus one per active stage.
pub fn power_estimate(cfg: &QuantizerConfig, shared_single_stage: bool) -> Result<PowerEstimate> {
    let code = encode_phi(cfg.phi)?;
    let ilq_refs = (cfg.vgs_max.floor() - cfg.vgs_min.ceil()).max(0.0) as usize;
    let (opamps, stages) = if shared_single_stage {
        (1, 1)
    } else {
        let s = derive_phi_prime(&code).active_stages();
        (s + 1, s)
    };
    let comparators = ilq_refs + stages;
    Ok(PowerEstimate {
        opamps,
        comparators,
        total_uw: OPAMP_POWER_UW * opamps as f64 + COMPARATOR_POWER_UW * comparators as f64,
    })
}
