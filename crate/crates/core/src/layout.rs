use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arrangement of a vision-transformer token sequence: CLS tokens first,
/// then register tokens, then the patch grid in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenLayout {
    pub n_cls: usize,
    pub n_reg: usize,
    pub grid_h: usize,
    pub grid_w: usize,
}

impl TokenLayout {
    /// 1 CLS, 4 registers, 14x14 patches (201 tokens).
    pub const REFERENCE: TokenLayout = TokenLayout {
        n_cls: 1,
        n_reg: 4,
        grid_h: 14,
        grid_w: 14,
    };

    pub fn new(n_cls: usize, n_reg: usize, grid_h: usize, grid_w: usize) -> Result<Self> {
        let layout = TokenLayout {
            n_cls,
            n_reg,
            grid_h,
            grid_w,
        };
        layout.check()?;
        Ok(layout)
    }

    /// Patch-only layout with no CLS or register tokens.
    pub fn patches(grid_h: usize, grid_w: usize) -> Result<Self> {
        Self::new(0, 0, grid_h, grid_w)
    }

    pub fn check(&self) -> Result<()> {
        let n_patch = self.grid_h.checked_mul(self.grid_w).ok_or_else(|| {
            Error::LayoutInconsistency(format!(
                "patch grid {}x{} overflows",
                self.grid_h, self.grid_w
            ))
        })?;
        if n_patch == 0 {
            return Err(Error::LayoutInconsistency(format!(
                "patch grid {}x{} is empty",
                self.grid_h, self.grid_w
            )));
        }
        self.n_cls
            .checked_add(self.n_reg)
            .and_then(|n| n.checked_add(n_patch))
            .ok_or_else(|| Error::LayoutInconsistency("token count overflows".into()))?;
        Ok(())
    }

    pub fn n_patch(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn n_tokens(&self) -> usize {
        self.n_cls + self.n_reg + self.n_patch()
    }

    pub fn cls_range(&self) -> Range<usize> {
        0..self.n_cls
    }

    pub fn reg_range(&self) -> Range<usize> {
        self.n_cls..self.n_cls + self.n_reg
    }

    pub fn patch_range(&self) -> Range<usize> {
        self.n_cls + self.n_reg..self.n_tokens()
    }

    /// Row index of the patch at grid position (row, col).
    pub fn patch_index(&self, row: usize, col: usize) -> usize {
        self.n_cls + self.n_reg + row * self.grid_w + col
    }
}

impl fmt::Display for TokenLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cls={} reg={} grid={}x{}",
            self.n_cls, self.n_reg, self.grid_h, self.grid_w
        )
    }
}

/// Which token rows of a feature tensor to use.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokenStrategy {
    All,
    Cls,
    Reg,
    Patch,
    ClsReg,
    ClsPatch,
    Indices(Vec<usize>),
}

impl TokenStrategy {
    /// The fixed strategies in the order used by token-wise comparison tables.
    pub const TABLE_ORDER: [TokenStrategy; 6] = [
        TokenStrategy::All,
        TokenStrategy::Cls,
        TokenStrategy::Reg,
        TokenStrategy::Patch,
        TokenStrategy::ClsReg,
        TokenStrategy::ClsPatch,
    ];

    /// Row indices named by this strategy, in ascending (storage) order
    /// except for `Indices`, which keeps the caller's order.
    pub fn rows(&self, layout: &TokenLayout) -> Result<Vec<usize>> {
        let rows: Vec<usize> = match self {
            TokenStrategy::All => (0..layout.n_tokens()).collect(),
            TokenStrategy::Cls => layout.cls_range().collect(),
            TokenStrategy::Reg => layout.reg_range().collect(),
            TokenStrategy::Patch => layout.patch_range().collect(),
            TokenStrategy::ClsReg => layout.cls_range().chain(layout.reg_range()).collect(),
            TokenStrategy::ClsPatch => layout.cls_range().chain(layout.patch_range()).collect(),
            TokenStrategy::Indices(indices) => {
                let n_tokens = layout.n_tokens();
                if let Some(&index) = indices.iter().find(|&&i| i >= n_tokens) {
                    return Err(Error::TokenIndexOutOfRange { index, n_tokens });
                }
                indices.clone()
            }
        };
        Ok(rows)
    }

    /// Human-readable row label, e.g. `Patch (196 tokens)`.
    pub fn table_label(&self, layout: &TokenLayout) -> String {
        let n = self.rows(layout).map(|r| r.len()).unwrap_or(0);
        let name = match self {
            TokenStrategy::All => "All",
            TokenStrategy::Cls => "CLS",
            TokenStrategy::Reg => "REG",
            TokenStrategy::Patch => "Patch",
            TokenStrategy::ClsReg => "CLS + REG",
            TokenStrategy::ClsPatch => "CLS + Patch",
            TokenStrategy::Indices(_) => "Indices",
        };
        let noun = if n == 1 { "token" } else { "tokens" };
        format!("{name} ({n} {noun})")
    }
}

impl fmt::Display for TokenStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenStrategy::All => f.write_str("all"),
            TokenStrategy::Cls => f.write_str("cls"),
            TokenStrategy::Reg => f.write_str("reg"),
            TokenStrategy::Patch => f.write_str("patch"),
            TokenStrategy::ClsReg => f.write_str("cls+reg"),
            TokenStrategy::ClsPatch => f.write_str("cls+patch"),
            TokenStrategy::Indices(indices) => {
                f.write_str("indices:")?;
                for (n, i) in indices.iter().enumerate() {
                    if n > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{i}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for TokenStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let strategy = match s.to_ascii_lowercase().as_str() {
            "all" | "all_tokens" => TokenStrategy::All,
            "cls" => TokenStrategy::Cls,
            "reg" | "register" => TokenStrategy::Reg,
            "patch" | "patch_only" => TokenStrategy::Patch,
            "cls+reg" => TokenStrategy::ClsReg,
            "cls+patch" => TokenStrategy::ClsPatch,
            other => {
                let Some(list) = other.strip_prefix("indices:") else {
                    return Err(Error::UnknownName {
                        kind: "token strategy",
                        name: s.to_string(),
                        known: "all, cls, reg, patch, cls+reg, cls+patch, indices:<i,j,..>".into(),
                    });
                };
                let indices = list
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        t.trim().parse::<usize>().map_err(|_| {
                            Error::InvalidArgument(format!("bad token index {t:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                TokenStrategy::Indices(indices)
            }
        };
        Ok(strategy)
    }
}

impl Serialize for TokenStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TokenStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }

    /// Class index used by the two-logit probe: real=0, fake=1.
    pub fn class_index(self) -> usize {
        match self {
            Label::Real => 0,
            Label::Fake => 1,
        }
    }

    pub fn swapped(self) -> Label {
        match self {
            Label::Real => Label::Fake,
            Label::Fake => Label::Real,
        }
    }

    /// Tie rule shared by every protocol: a score of exactly zero is fake.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Fake
        } else {
            Label::Real
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Label::Real),
            "fake" => Ok(Label::Fake),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}
