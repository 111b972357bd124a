//! Slope-matching decoder with iterative range-check correction.
//!
//! Two consecutive currents are assumed to lie on the same V_gs curve. For
//! each candidate level the receiver inverts both currents to Vds and forms
//! the two-point slope; the candidate whose slope is closest to the estimate
//! `λ·(I1 + I2)/2` wins. With correction enabled, candidates whose inverted
//! Vds values leave the transmitter's known Vds range are skipped in rank
//! order.

use serde::{Deserialize, Serialize};

use crate::device::MosfetParams;
use crate::error::{Error, Result};
use crate::transmitter::EncodedSample;

/// Slack applied to both ends of the Vds range check so that grid endpoints
/// survive floating-point round trips through the inversion.
pub const RANGE_SLACK_V: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub candidate_levels: Vec<f64>,
    pub device: MosfetParams,
    pub vds_range: (f64, f64),
}

impl DecoderConfig {
    pub fn new(candidate_levels: Vec<f64>, device: MosfetParams, vds_range: (f64, f64)) -> Result<Self> {
        let cfg = Self {
            candidate_levels,
            device,
            vds_range,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        if self.device.lambda == 0.0 {
            return Err(Error::InversionUndefined);
        }
        validate_levels(&self.candidate_levels, &self.device)?;
        let (lo, hi) = self.vds_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("vds range ({lo}, {hi}) is empty")));
        }
        Ok(())
    }

    pub fn candidates(&self) -> Vec<Candidate<'_>> {
        self.candidate_levels
            .iter()
            .map(|&vgs| Candidate {
                vgs,
                device: &self.device,
            })
            .collect()
    }
}

pub(crate) fn validate_levels(levels: &[f64], device: &MosfetParams) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Config("candidate level list is empty".into()));
    }
    if !levels.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(
            "candidate levels must be strictly increasing".into(),
        ));
    }
    if levels[0] <= device.vth {
        return Err(Error::Config(format!(
            "candidate level {} V is not above vth = {} V",
            levels[0], device.vth
        )));
    }
    Ok(())
}

/// A V_gs hypothesis and the device it would have been applied to.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub vgs: f64,
    pub device: &'a MosfetParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedPair {
    pub vgs_hat: f64,
    pub vds_hat_1: f64,
    pub vds_hat_2: f64,
    /// Rank (by slope mismatch) of the returned candidate.
    pub rank_used: usize,
    /// The range check accepted the returned candidate. Always false when
    /// correction is off or when every candidate failed the check.
    pub corrected: bool,
    /// Curve segment and position of the first sample; zero for pairs
    /// decoded outside a stream.
    pub curve: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// `(k, k+1)` for every k.
    #[default]
    Sliding,
    /// `(0, 1), (2, 3), ...`
    Disjoint,
}

fn check_pair(ids1: f64, ids2: f64) -> Result<()> {
    for i in [ids1, ids2] {
        if i.is_nan() || i <= 0.0 {
            return Err(Error::NonPositiveCurrent(i));
        }
    }
    if ids1 == ids2 {
        return Err(Error::DegeneratePair(ids1));
    }
    Ok(())
}

/// `|two-point slope − λ·mean(I)|` for one candidate. The two-point slope
/// is taken through the candidate's own Vds inversions.
pub fn candidate_mismatch(c: Candidate<'_>, ids1: f64, ids2: f64) -> Result<f64> {
    check_pair(ids1, ids2)?;
    let v1 = c.device.invert_vds(c.vgs, ids1)?;
    let v2 = c.device.invert_vds(c.vgs, ids2)?;
    let two_point = (ids2 - ids1) / (v2 - v1);
    let estimate = c.device.approx_slope_from_currents(ids1, ids2);
    Ok((two_point - estimate).abs())
}

pub fn slope_mismatch(cfg: &DecoderConfig, candidate: f64, ids1: f64, ids2: f64) -> Result<f64> {
    candidate_mismatch(
        Candidate {
            vgs: candidate,
            device: &cfg.device,
        },
        ids1,
        ids2,
    )
}

/// Candidate indices sorted by ascending mismatch. The sort is stable, so
/// with ascending candidates the lower V_gs wins a tie.
pub fn rank_candidates(cands: &[Candidate<'_>], ids1: f64, ids2: f64) -> Result<Vec<(usize, f64)>> {
    let mut ranked = cands
        .iter()
        .enumerate()
        .map(|(i, &c)| Ok((i, candidate_mismatch(c, ids1, ids2)?)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(ranked)
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo - RANGE_SLACK_V && v <= hi + RANGE_SLACK_V
}

/// Decodes a pair against an arbitrary candidate set.
pub fn decode_with_candidates(
    cands: &[Candidate<'_>],
    vds_range: (f64, f64),
    ids1: f64,
    ids2: f64,
    apply_correction: bool,
) -> Result<DecodedPair> {
    if cands.is_empty() {
        return Err(Error::Config("candidate level list is empty".into()));
    }
    let ranked = rank_candidates(cands, ids1, ids2)?;
    let invert = |i: usize| -> Result<(f64, f64)> {
        let c = cands[i];
        Ok((
            c.device.invert_vds(c.vgs, ids1)?,
            c.device.invert_vds(c.vgs, ids2)?,
        ))
    };
    let pick = |rank: usize, corrected: bool| -> Result<DecodedPair> {
        let idx = ranked[rank].0;
        let (v1, v2) = invert(idx)?;
        Ok(DecodedPair {
            vgs_hat: cands[idx].vgs,
            vds_hat_1: v1,
            vds_hat_2: v2,
            rank_used: rank,
            corrected,
            curve: 0,
            index: 0,
        })
    };

    if apply_correction {
        for (rank, &(idx, _)) in ranked.iter().enumerate() {
            let (v1, v2) = invert(idx)?;
            if in_range(v1, vds_range) && in_range(v2, vds_range) {
                return pick(rank, true);
            }
        }
    }
    pick(0, false)
}

pub fn decode_pair(cfg: &DecoderConfig, ids1: f64, ids2: f64, apply_correction: bool) -> Result<DecodedPair> {
    decode_with_candidates(&cfg.candidates(), cfg.vds_range, ids1, ids2, apply_correction)
}

/// Position pairs `(first, second)` within a segment of `len` samples.
pub fn pair_indices(len: usize, pairing: Pairing) -> Vec<(usize, usize)> {
    if len < 2 {
        return Vec::new();
    }
    match pairing {
        Pairing::Sliding => (0..len - 1).map(|k| (k, k + 1)).collect(),
        Pairing::Disjoint => (0..len / 2).map(|k| (2 * k, 2 * k + 1)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamDecode {
    pub pairs: Vec<DecodedPair>,
    /// Curve segments with fewer than two samples.
    pub skipped_segments: usize,
    /// Pairs rejected as degenerate or non-positive (only possible once the
    /// currents have been perturbed).
    pub failed_pairs: usize,
}

/// Decodes curve segments independently, pairing only within a segment.
pub fn decode_segments<F>(
    segments: &[Vec<EncodedSample>],
    pairing: Pairing,
    mut decode: F,
) -> StreamDecode
where
    F: FnMut(usize, f64, f64) -> Result<DecodedPair>,
{
    let mut out = StreamDecode::default();
    for (c, seg) in segments.iter().enumerate() {
        if seg.len() < 2 {
            out.skipped_segments += 1;
            continue;
        }
        for (a, b) in pair_indices(seg.len(), pairing) {
            match decode(c, seg[a].ids, seg[b].ids) {
                Ok(mut d) => {
                    d.curve = c;
                    d.index = a;
                    out.pairs.push(d);
                }
                Err(_) => out.failed_pairs += 1,
            }
        }
    }
    out
}

pub fn decode_stream(
    cfg: &DecoderConfig,
    segments: &[Vec<EncodedSample>],
    pairing: Pairing,
    apply_correction: bool,
) -> Result<StreamDecode> {
    cfg.validate()?;
    let cands = cfg.candidates();
    Ok(decode_segments(segments, pairing, |_, i1, i2| {
        decode_with_candidates(&cands, cfg.vds_range, i1, i2, apply_correction)
    }))
}
