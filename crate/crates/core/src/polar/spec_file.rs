use super::{AugmentedCodeSpec, CrcSpec, PolarCodeSpec, PolarError};
use serde::{Deserialize, Serialize};

/// On-disk code description (TOML).
///
/// ```toml
/// n = 3
/// k = 4
/// frozen_set = [0, 1, 2, 4]
/// crc_poly = "0x1"
/// design_param = 0.5
/// ```
///
/// `k` is the polar dimension, including CRC bits. `crc_poly = "0x1"` means
/// no CRC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpecFile {
    pub n: usize,
    #[serde(alias = "K")]
    pub k: usize,
    pub frozen_set: Vec<usize>,
    pub crc_poly: String,
    pub design_param: f64,
}

impl CodeSpecFile {
    pub fn from_spec(spec: &AugmentedCodeSpec) -> Self {
        CodeSpecFile {
            n: spec.polar.log_n(),
            k: spec.polar.k(),
            frozen_set: spec.polar.frozen_set(),
            crc_poly: format!("{:#x}", spec.crc.poly()),
            design_param: spec.polar.design_param(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain struct serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, PolarError> {
        toml::from_str(text).map_err(|e| PolarError::InvalidSpec(e.to_string()))
    }

    pub fn build(&self) -> Result<AugmentedCodeSpec, PolarError> {
        if self.n == 0 || self.n > 20 {
            return Err(PolarError::BadLength(self.n));
        }
        let size = 1usize << self.n;
        if !self.frozen_set.windows(2).all(|w| w[0] < w[1])
            || self.frozen_set.last().is_some_and(|&f| f >= size)
        {
            return Err(PolarError::InvalidSpec(
                "frozen_set must be sorted, distinct and in range".into(),
            ));
        }
        if self.frozen_set.len() + self.k != size {
            return Err(PolarError::BadDimension { k: self.k, n: size });
        }
        let mut mask = vec![false; size];
        for &f in &self.frozen_set {
            mask[f] = true;
        }
        let mut polar = PolarCodeSpec::from_frozen(self.n, mask)?;
        polar.design_param = self.design_param;
        let poly = parse_hex(&self.crc_poly)?;
        let r = 63 - poly.max(1).leading_zeros() as usize;
        if r > self.k {
            return Err(PolarError::CrcMismatch { m: 0, r, k: self.k });
        }
        let crc = if r == 0 {
            CrcSpec::none(self.k)
        } else {
            CrcSpec::new(poly, self.k - r)?
        };
        AugmentedCodeSpec::new(polar, crc)
    }
}

/// Parses `0x43`, `43` or `0X43` as hexadecimal.
pub(crate) fn parse_hex(s: &str) -> Result<u64, PolarError> {
    let t = s.trim();
    let digits = t
        .strip_prefix("0x")
        .or_else(|| t.strip_prefix("0X"))
        .unwrap_or(t);
    u64::from_str_radix(digits, 16)
        .map_err(|_| PolarError::InvalidSpec(format!("bad hex polynomial {s:?}")))
}
