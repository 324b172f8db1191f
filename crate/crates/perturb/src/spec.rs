use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::conditions::{condition_a, condition_b, condition_c, DEFAULT_BLOCK};
use crate::corrupt::{encode_jpeg, gaussian_noise, jpeg_compress, resize_cycle};
use crate::error::{PerturbError, Result};
use crate::filter::{check_ratio, highpass, lowpass};
use crate::image::ImageBuffer;
use crate::spatial::{local_shuffle, random_mask, DEFAULT_WINDOW};

/// One parameterized perturbation. Seeds are supplied at application time so
/// a single spec can be applied across a corpus with per-image streams.
///
/// Text form is `kind:p1,p2`, e.g. `jpeg:70`, `cond_b:0.5,56`, `mask:0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbSpec {
    Lowpass { r: f64 },
    Highpass { r: f64 },
    Mask { fraction: f64 },
    Shuffle { window: usize },
    CondA { r: f64 },
    CondB { r: f64, block: usize },
    CondC { r: f64, block: usize },
    Gaussian { sigma: f64 },
    Jpeg { quality: u8 },
    Resize { factor: f64 },
}

pub const KINDS: &[&str] = &[
    "gaussian", "jpeg", "resize", "lowpass", "highpass", "mask", "shuffle", "cond_a", "cond_b",
    "cond_c",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Png,
    Jpeg,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Png => "png",
            OutputFormat::Jpeg => "jpg",
        }
    }
}

impl PerturbSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            PerturbSpec::Lowpass { .. } => "lowpass",
            PerturbSpec::Highpass { .. } => "highpass",
            PerturbSpec::Mask { .. } => "mask",
            PerturbSpec::Shuffle { .. } => "shuffle",
            PerturbSpec::CondA { .. } => "cond_a",
            PerturbSpec::CondB { .. } => "cond_b",
            PerturbSpec::CondC { .. } => "cond_c",
            PerturbSpec::Gaussian { .. } => "gaussian",
            PerturbSpec::Jpeg { .. } => "jpeg",
            PerturbSpec::Resize { .. } => "resize",
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            PerturbSpec::Lowpass { r } | PerturbSpec::Highpass { r } | PerturbSpec::CondA { r } => {
                vec![r]
            }
            PerturbSpec::Mask { fraction } => vec![fraction],
            PerturbSpec::Shuffle { window } => vec![window as f64],
            PerturbSpec::CondB { r, block } | PerturbSpec::CondC { r, block } => {
                vec![r, block as f64]
            }
            PerturbSpec::Gaussian { sigma } => vec![sigma],
            PerturbSpec::Jpeg { quality } => vec![f64::from(quality)],
            PerturbSpec::Resize { factor } => vec![factor],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PerturbError::InvalidParam(msg));
        match *self {
            PerturbSpec::Lowpass { r }
            | PerturbSpec::Highpass { r }
            | PerturbSpec::CondA { r } => check_ratio(r),
            PerturbSpec::CondB { r, block } | PerturbSpec::CondC { r, block } => {
                check_ratio(r)?;
                if block == 0 {
                    return bad("block size must be positive".into());
                }
                Ok(())
            }
            PerturbSpec::Mask { fraction } if !(0.0..=1.0).contains(&fraction) => {
                bad(format!("mask fraction must lie in [0, 1], got {fraction}"))
            }
            PerturbSpec::Shuffle { window: 0 } => bad("shuffle window must be positive".into()),
            PerturbSpec::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad(format!("noise sigma must be non-negative, got {sigma}"))
            }
            PerturbSpec::Jpeg { quality } if !(1..=100).contains(&quality) => {
                bad(format!("jpeg quality must lie in [1, 100], got {quality}"))
            }
            PerturbSpec::Resize { factor } if !(factor > 0.0 && factor <= 1.0) => {
                bad(format!("resize factor must lie in (0, 1], got {factor}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_seeded(&self) -> bool {
        matches!(
            self,
            PerturbSpec::Mask { .. }
                | PerturbSpec::Shuffle { .. }
                | PerturbSpec::CondA { .. }
                | PerturbSpec::CondB { .. }
                | PerturbSpec::Gaussian { .. }
        )
    }

    pub fn output_format(&self) -> OutputFormat {
        match self {
            PerturbSpec::Jpeg { .. } => OutputFormat::Jpeg,
            _ => OutputFormat::Png,
        }
    }

    /// Applies the perturbation; the result is clamped to [0, 1].
    pub fn apply(&self, img: &ImageBuffer, seed: u64) -> Result<ImageBuffer> {
        self.validate()?;
        match *self {
            PerturbSpec::Lowpass { r } => lowpass(img, r),
            PerturbSpec::Highpass { r } => highpass(img, r),
            PerturbSpec::Mask { fraction } => Ok(random_mask(img, fraction, seed)?.clamped()),
            PerturbSpec::Shuffle { window } => Ok(local_shuffle(img, window, seed)?.clamped()),
            PerturbSpec::CondA { r } => condition_a(img, r, seed),
            PerturbSpec::CondB { r, block } => condition_b(img, r, block, seed),
            PerturbSpec::CondC { r, block } => condition_c(img, r, block),
            PerturbSpec::Gaussian { sigma } => gaussian_noise(img, sigma, seed),
            PerturbSpec::Jpeg { quality } => jpeg_compress(img, quality),
            PerturbSpec::Resize { factor } => resize_cycle(img, factor),
        }
    }

    /// Bytes of the output file: PNG for most kinds, the JPEG stream itself
    /// for `jpeg` so the saved file is compressed exactly once.
    pub fn encode_output(&self, img: &ImageBuffer, seed: u64) -> Result<Vec<u8>> {
        if let PerturbSpec::Jpeg { quality } = *self {
            return encode_jpeg(img, quality);
        }
        let out = self.apply(img, seed)?.to_rgb8();
        let mut bytes = std::io::Cursor::new(Vec::new());
        out.write_to(&mut bytes, image::ImageFormat::Png)
            .map_err(|e| PerturbError::Codec(e.to_string()))?;
        Ok(bytes.into_inner())
    }

    /// Row label in robustness tables, e.g. `JPEG (70)`.
    pub fn label(&self) -> String {
        let name = match self {
            PerturbSpec::Lowpass { .. } => "Low-pass",
            PerturbSpec::Highpass { .. } => "High-pass",
            PerturbSpec::Mask { .. } => "Mask",
            PerturbSpec::Shuffle { .. } => "Shuffle",
            PerturbSpec::CondA { .. } => "Condition A",
            PerturbSpec::CondB { .. } => "Condition B",
            PerturbSpec::CondC { .. } => "Condition C",
            PerturbSpec::Gaussian { .. } => "Gaussian",
            PerturbSpec::Jpeg { .. } => "JPEG",
            PerturbSpec::Resize { .. } => "Resize",
        };
        let params: Vec<String> = self.params().iter().map(|p| p.to_string()).collect();
        format!("{name} ({})", params.join(", "))
    }

    /// Table order: by kind (corruptions first), then parameters ascending.
    pub fn table_cmp(&self, other: &Self) -> Ordering {
        let rank = |s: &Self| KINDS.iter().position(|k| *k == s.kind()).unwrap_or(KINDS.len());
        rank(self).cmp(&rank(other)).then_with(|| {
            self.params()
                .iter()
                .zip(other.params())
                .map(|(a, b)| a.total_cmp(&b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

impl fmt::Display for PerturbSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|p| p.to_string()).collect();
        write!(f, "{}:{}", self.kind(), params.join(","))
    }
}

impl FromStr for PerturbSpec {
    type Err = PerturbError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let params: Vec<f64> = rest
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| PerturbError::InvalidParam(format!("bad parameter {p:?} in {s:?}")))
            })
            .collect::<Result<_>>()?;
        let arg = |i: usize, default: Option<f64>| {
            params.get(i).copied().or(default).ok_or_else(|| {
                PerturbError::InvalidParam(format!("{kind} needs parameter #{}", i + 1))
            })
        };
        let as_usize = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(PerturbError::InvalidParam(format!("expected an integer, got {v}")))
            }
        };
        let (spec, arity) = match kind {
            "lowpass" => (PerturbSpec::Lowpass { r: arg(0, None)? }, 1),
            "highpass" => (PerturbSpec::Highpass { r: arg(0, None)? }, 1),
            "mask" => (PerturbSpec::Mask { fraction: arg(0, Some(0.5))? }, 1),
            "shuffle" => (
                PerturbSpec::Shuffle {
                    window: as_usize(arg(0, Some(DEFAULT_WINDOW as f64))?)?,
                },
                1,
            ),
            "cond_a" => (PerturbSpec::CondA { r: arg(0, None)? }, 1),
            "cond_b" | "cond_c" => {
                let r = arg(0, None)?;
                let block = as_usize(arg(1, Some(DEFAULT_BLOCK as f64))?)?;
                let spec = if kind == "cond_b" {
                    PerturbSpec::CondB { r, block }
                } else {
                    PerturbSpec::CondC { r, block }
                };
                (spec, 2)
            }
            "gaussian" => (PerturbSpec::Gaussian { sigma: arg(0, None)? }, 1),
            "jpeg" => {
                let q = as_usize(arg(0, None)?)?;
                let quality = u8::try_from(q)
                    .map_err(|_| PerturbError::InvalidParam(format!("jpeg quality {q}")))?;
                (PerturbSpec::Jpeg { quality }, 1)
            }
            "resize" => (PerturbSpec::Resize { factor: arg(0, None)? }, 1),
            other => {
                return Err(PerturbError::UnknownKind {
                    name: other.to_string(),
                    known: KINDS.join(", "),
                })
            }
        };
        if params.len() > arity {
            return Err(PerturbError::InvalidParam(format!(
                "{kind} takes at most {arity} parameter(s), got {}",
                params.len()
            )));
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Per-image seed: first 8 bytes (LE) of SHA-256 over the run seed and the
/// sample id. Independent of processing order.
pub fn derive_seed(seed: u64, sample_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(sample_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        for s in ["jpeg:70", "gaussian:5", "resize:0.5", "cond_b:0.5,56", "mask:0.5", "shuffle:4"] {
            let spec: PerturbSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<PerturbSpec>().unwrap(), spec);
        }
        assert_eq!("cond_c:0.3".parse::<PerturbSpec>().unwrap(), PerturbSpec::CondC { r: 0.3, block: 56 });
        assert_eq!("mask".parse::<PerturbSpec>().unwrap(), PerturbSpec::Mask { fraction: 0.5 });
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("blur:1".parse::<PerturbSpec>(), Err(PerturbError::UnknownKind { .. })));
        for bad in ["lowpass", "lowpass:0", "jpeg:0", "jpeg:70.5", "resize:2", "lowpass:0.1,2", "mask:x"] {
            assert!(bad.parse::<PerturbSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn robustness_rows_sort_like_the_table() {
        let mut specs: Vec<PerturbSpec> = ["resize:0.75", "jpeg:80", "gaussian:10", "resize:0.5", "jpeg:70", "gaussian:5"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        specs.sort_by(PerturbSpec::table_cmp);
        let labels: Vec<String> = specs.iter().map(PerturbSpec::label).collect();
        assert_eq!(
            labels,
            ["Gaussian (5)", "Gaussian (10)", "JPEG (70)", "JPEG (80)", "Resize (0.5)", "Resize (0.75)"]
        );
    }

    #[test]
    fn derived_seeds_differ_per_sample() {
        assert_eq!(derive_seed(0, "a"), derive_seed(0, "a"));
        assert_ne!(derive_seed(0, "a"), derive_seed(0, "b"));
        assert_ne!(derive_seed(0, "a"), derive_seed(1, "a"));
    }
}
