//! Interleaving AJSCC levels over several MOSFETs.
//!
//! Level `i` of the global grid goes to device `i mod n`, so each device
//! carries only every n-th curve and sees an effective step of `n·φ`. One
//! device is on at a time.

use serde::{Deserialize, Serialize};

use crate::device::MosfetParams;
use crate::error::{Error, Result};
use crate::receiver::{
    decode_segments, decode_with_candidates, validate_levels, Candidate, Pairing, StreamDecode,
};
use crate::transmitter::{EncodedSample, VdsSweep};

#[derive(Debug, Clone, PartialEq)]
pub struct MosfetBank {
    pub devices: Vec<MosfetParams>,
    /// `assignment[i]` is the device carrying `levels[i]`.
    pub assignment: Vec<usize>,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BankDecodeMode {
    /// Receiver knows which device transmitted (evaluation only).
    Genie,
    /// Receiver searches every level of every device.
    Union,
}

/// Round-robin assignment of `levels` over `n_devices` copies of `device`.
pub fn assign_levels(levels: &[f64], n_devices: usize, device: &MosfetParams) -> Result<MosfetBank> {
    if n_devices == 0 {
        return Err(Error::Config("bank needs at least one device".into()));
    }
    if n_devices > levels.len() {
        return Err(Error::Config(format!(
            "{n_devices} devices for only {} levels",
            levels.len()
        )));
    }
    validate_levels(levels, device)?;
    Ok(MosfetBank {
        devices: vec![device.clone(); n_devices],
        assignment: (0..levels.len()).map(|i| i % n_devices).collect(),
        levels: levels.to_vec(),
    })
}

impl MosfetBank {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    /// Replaces the parameters of one device.
    pub fn with_device(mut self, index: usize, params: MosfetParams) -> Result<Self> {
        params.validate()?;
        let slot = self
            .devices
            .get_mut(index)
            .ok_or_else(|| Error::Config(format!("no device {index} in bank")))?;
        *slot = params;
        Ok(self)
    }

    pub fn device_levels(&self, device: usize) -> Vec<f64> {
        self.levels
            .iter()
            .zip(&self.assignment)
            .filter(|(_, &d)| d == device)
            .map(|(&l, _)| l)
            .collect()
    }

    /// Smallest gap between two levels carried by the same device.
    pub fn min_device_spacing(&self) -> Option<f64> {
        (0..self.n_devices())
            .flat_map(|d| {
                let ls = self.device_levels(d);
                ls.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()
            })
            .min_by(f64::total_cmp)
    }

    fn level_index(&self, vgs: f64) -> Option<usize> {
        self.levels.iter().position(|&l| (l - vgs).abs() < 1e-9)
    }

    /// Encodes the evaluation grid: one segment per global level, each
    /// driven through its assigned device.
    pub fn encode_grid(&self, vds: &VdsSweep) -> Result<Vec<Vec<EncodedSample>>> {
        vds.validate()?;
        let xs = vds.points();
        self.levels
            .iter()
            .zip(&self.assignment)
            .map(|(&vgs, &d)| {
                let dev = &self.devices[d];
                xs.iter()
                    .map(|&x| {
                        Ok(EncodedSample {
                            ids: dev.ids_forward(vgs, x)?,
                            truth: Some(crate::transmitter::Truth {
                                vgs_level: vgs,
                                vds: x,
                            }),
                        })
                    })
                    .collect()
            })
            .collect()
    }

    fn candidates_for(&self, device: Option<usize>) -> Vec<Candidate<'_>> {
        self.levels
            .iter()
            .zip(&self.assignment)
            .filter(|(_, &d)| device.is_none_or(|want| want == d))
            .map(|(&vgs, &d)| Candidate {
                vgs,
                device: &self.devices[d],
            })
            .collect()
    }
}

/// Decodes bank output curve by curve.
///
/// In genie mode the transmitting device of each segment is read from the
/// evaluation truth of its first sample.
pub fn decode_bank(
    bank: &MosfetBank,
    segments: &[Vec<EncodedSample>],
    mode: BankDecodeMode,
    pairing: Pairing,
    vds_range: (f64, f64),
    apply_correction: bool,
) -> Result<StreamDecode> {
    if bank.devices.iter().any(|d| d.lambda == 0.0) {
        return Err(Error::InversionUndefined);
    }
    let per_device: Vec<Vec<Candidate<'_>>> = (0..bank.n_devices())
        .map(|d| bank.candidates_for(Some(d)))
        .collect();
    let union = bank.candidates_for(None);

    let owners = match mode {
        BankDecodeMode::Union => vec![None; segments.len()],
        BankDecodeMode::Genie => segments
            .iter()
            .map(|seg| match seg.first() {
                None => Ok(None),
                Some(s) => {
                    let t = s
                        .truth
                        .ok_or(Error::Config("genie decoding needs sample truth".into()))?;
                    let idx = bank.level_index(t.vgs_level).ok_or_else(|| {
                        Error::Config(format!("level {} V not in bank", t.vgs_level))
                    })?;
                    Ok(Some(bank.assignment[idx]))
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };

    Ok(decode_segments(segments, pairing, |curve, i1, i2| {
        let cands = match owners[curve] {
            Some(d) => &per_device[d],
            None => &union,
        };
        decode_with_candidates(cands, vds_range, i1, i2, apply_correction)
    }))
}
