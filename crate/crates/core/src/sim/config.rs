use super::SimError;
use crate::bec::{ReferenceKind, ReferencePolicy, Variant};
use crate::bp_awgn::{max_list_size, BpConfig};
use crate::osd::OsdMode;
use crate::pcm::PruneOptions;
use crate::polar::{AugmentedCodeSpec, CodeSpecFile, CrcSpec, PolarCodeSpec};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Experiment description, read from TOML:
///
/// ```toml
/// master_seed = 7
/// workers = 1
///
/// [code]
/// n = 6              # log2 of the blocklength
/// k = 38             # polar dimension, CRC bits included
/// crc_poly = "0x43"  # "0x1" for no CRC
///
/// [channel]
/// kind = "bec"       # or "awgn" (points are Eb/N0 in dB)
/// points = [0.3, 0.4]
///
/// [decoder]
/// kind = "ml_bec"
///
/// [trials]
/// max = 10000
/// target_errors = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub code: CodeConfig,
    pub channel: ChannelConfig,
    pub decoder: DecoderConfig,
    #[serde(default)]
    pub trials: TrialsConfig,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

fn default_poly() -> String {
    "0x43".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// log2 of the blocklength.
    pub n: Option<usize>,
    /// Polar dimension including CRC bits.
    pub k: Option<usize>,
    #[serde(default = "default_poly")]
    pub crc_poly: String,
    #[serde(default = "half")]
    pub design_param: f64,
    /// Code description file; replaces `n`, `k`, `crc_poly` and
    /// `design_param`.
    pub spec_file: Option<PathBuf>,
    /// Prebuilt pruned-PCM artifact.
    pub artifact: Option<PathBuf>,
    #[serde(default)]
    pub prune: PruneOptions,
}

impl CodeConfig {
    pub fn construct(n: usize, k: usize, crc_poly: &str) -> Self {
        CodeConfig {
            n: Some(n),
            k: Some(k),
            crc_poly: crc_poly.into(),
            design_param: 0.5,
            spec_file: None,
            artifact: None,
            prune: PruneOptions::default(),
        }
    }

    pub fn build_spec(&self) -> Result<AugmentedCodeSpec, SimError> {
        let file = match &self.spec_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
                CodeSpecFile::from_toml(&text).map_err(|e| SimError::InvalidConfig(e.to_string()))?
            }
            None => {
                let (Some(n), Some(k)) = (self.n, self.k) else {
                    return Err(SimError::InvalidConfig("code needs n and k, or spec_file".into()));
                };
                if n == 0 || n > 16 {
                    return Err(SimError::InvalidConfig(format!("n = {n} out of range 1..=16")));
                }
                if !(0.0..=1.0).contains(&self.design_param) {
                    return Err(SimError::InvalidConfig("design_param must lie in [0, 1]".into()));
                }
                let polar = PolarCodeSpec::construct(n, k, self.design_param)
                    .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
                let plain = AugmentedCodeSpec::new(polar, CrcSpec::none(k)).expect("no CRC");
                let mut f = CodeSpecFile::from_spec(&plain);
                f.crc_poly = self.crc_poly.clone();
                f
            }
        };
        let spec = file.build().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if spec.dimension() == 0 {
            return Err(SimError::InvalidConfig("code carries no message bits".into()));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    /// Erasure probabilities.
    Bec { points: Vec<f64> },
    /// `Eb/N0` in dB, at rate `m/N`.
    Awgn { points: Vec<f64> },
}

impl ChannelConfig {
    pub fn points(&self) -> &[f64] {
        match self {
            ChannelConfig::Bec { points } | ChannelConfig::Awgn { points } => points,
        }
    }

    pub fn is_bec(&self) -> bool {
        matches!(self, ChannelConfig::Bec { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceName {
    #[default]
    MinUnknown,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OsdName {
    #[default]
    Osd1,
    Osd2,
    Posd2,
    Lcosd1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecoderConfig {
    /// Peeling, triangulation and the reference system.
    MlBec {
        #[serde(default)]
        reference: ReferenceName,
        #[serde(default = "one")]
        batch: usize,
        #[serde(default)]
        variant: Variant,
    },
    /// Dense Gaussian elimination on the erased positions.
    BruteForceBec,
    /// Peeling only.
    Peel,
    /// Successive cancellation on the polar code (CRC ignored).
    Sc,
    /// CRC-aided BP list; `list = 1` is plain CBP.
    Cbpl {
        #[serde(default = "one")]
        list: usize,
        #[serde(default)]
        bp: BpConfig,
    },
    /// CBPL with OSD post-processing of every branch.
    CbplOsd {
        #[serde(default = "one")]
        list: usize,
        #[serde(default)]
        bp: BpConfig,
        #[serde(default)]
        osd: OsdName,
        #[serde(default = "quarter")]
        posd_fraction: f64,
    },
}

fn quarter() -> f64 {
    0.25
}

impl DecoderConfig {
    pub fn name(&self) -> String {
        match self {
            DecoderConfig::MlBec { .. } => "ml_bec".into(),
            DecoderConfig::BruteForceBec => "brute_force_bec".into(),
            DecoderConfig::Peel => "peel".into(),
            DecoderConfig::Sc => "sc".into(),
            DecoderConfig::Cbpl { list, .. } => format!("cbpl({list})"),
            DecoderConfig::CbplOsd { list, .. } => {
                format!("cbpl({list})-{}", self.osd_mode().expect("osd decoder").name())
            }
        }
    }

    pub fn osd_mode(&self) -> Option<OsdMode> {
        match self {
            DecoderConfig::CbplOsd { osd, posd_fraction, .. } => Some(match osd {
                OsdName::Osd1 => OsdMode::Osd1,
                OsdName::Osd2 => OsdMode::Osd2,
                OsdName::Posd2 => OsdMode::Posd2(*posd_fraction),
                OsdName::Lcosd1 => OsdMode::Lcosd1,
            }),
            _ => None,
        }
    }

    pub fn reference_policy(&self, trial_seed: u64) -> Option<ReferencePolicy> {
        match self {
            DecoderConfig::MlBec { reference, batch, .. } => Some(ReferencePolicy {
                kind: match reference {
                    ReferenceName::MinUnknown => ReferenceKind::MinUnknownCheck,
                    ReferenceName::Random => ReferenceKind::RandomUnknown { seed: trial_seed },
                },
                batch: *batch,
            }),
            _ => None,
        }
    }

    fn for_bec(&self) -> bool {
        matches!(
            self,
            DecoderConfig::MlBec { .. } | DecoderConfig::BruteForceBec | DecoderConfig::Peel | DecoderConfig::Sc
        )
    }

    fn for_awgn(&self) -> bool {
        matches!(self, DecoderConfig::Sc | DecoderConfig::Cbpl { .. } | DecoderConfig::CbplOsd { .. })
    }
}

/// Trial budget per channel point: stop at `max` trials, or earlier once
/// `target_errors` frame errors have been seen (checked between chunks of
/// trials so the stopping point does not depend on the worker count).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsConfig {
    #[serde(default = "default_max")]
    pub max: u64,
    pub target_errors: Option<u64>,
}

fn default_max() -> u64 {
    100_000
}

impl Default for TrialsConfig {
    fn default() -> Self {
        TrialsConfig {
            max: default_max(),
            target_errors: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that does not need the code itself.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.trials.max < 1 {
            return bad("trials.max must be at least 1".into());
        }
        if self.trials.target_errors == Some(0) {
            return bad("trials.target_errors must be positive".into());
        }
        if self.workers < 1 {
            return bad("workers must be at least 1".into());
        }
        match &self.channel {
            ChannelConfig::Bec { points } => {
                if let Some(e) = points.iter().find(|e| !(0.0..=1.0).contains(*e)) {
                    return bad(format!("erasure probability {e} outside [0, 1]"));
                }
                if !self.decoder.for_bec() {
                    return bad(format!("decoder {} does not run on the BEC", self.decoder.name()));
                }
            }
            ChannelConfig::Awgn { points } => {
                if let Some(e) = points.iter().find(|e| !e.is_finite()) {
                    return bad(format!("Eb/N0 {e} is not finite"));
                }
                if !self.decoder.for_awgn() {
                    return bad(format!("decoder {} does not run on the AWGN channel", self.decoder.name()));
                }
            }
        }
        match &self.decoder {
            DecoderConfig::MlBec { batch, .. } if *batch < 1 => bad("batch must be at least 1".into()),
            DecoderConfig::Cbpl { list, bp } | DecoderConfig::CbplOsd { list, bp, .. } => {
                if *list < 1 {
                    return bad("list size L must be at least 1".into());
                }
                if let Some(n) = self.code.n {
                    if *list > max_list_size(n) {
                        return bad(format!("list size {list} exceeds the {} available graphs", max_list_size(n)));
                    }
                }
                bp.validate().map_err(SimError::InvalidConfig)?;
                if let DecoderConfig::CbplOsd { posd_fraction, .. } = &self.decoder {
                    if !(0.0..=1.0).contains(posd_fraction) {
                        return bad("posd_fraction must lie in [0, 1]".into());
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
