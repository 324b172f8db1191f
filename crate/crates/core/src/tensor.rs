use crate::error::{Error, Result};
use crate::layout::{TokenLayout, TokenStrategy};

/// Token features for one image: `layout.n_tokens()` rows of `dim` floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    layout: TokenLayout,
    dim: usize,
    data: Vec<f32>,
    meta: Option<String>,
}

impl FeatureTensor {
    pub fn new(layout: TokenLayout, dim: usize, data: Vec<f32>) -> Result<Self> {
        layout.check()?;
        if dim == 0 {
            return Err(Error::LayoutInconsistency("feature dim must be positive".into()));
        }
        let expected = layout
            .n_tokens()
            .checked_mul(dim)
            .ok_or_else(|| Error::LayoutInconsistency("tensor size overflows".into()))?;
        if data.len() != expected {
            return Err(Error::LayoutInconsistency(format!(
                "{} values for {} tokens x {} dims",
                data.len(),
                layout.n_tokens(),
                dim
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                token: pos / dim,
                dim: pos % dim,
            });
        }
        Ok(FeatureTensor {
            layout,
            dim,
            data,
            meta: None,
        })
    }

    pub fn zeros(layout: TokenLayout, dim: usize) -> Result<Self> {
        layout.check()?;
        Self::new(layout, dim, vec![0.0; layout.n_tokens() * dim])
    }

    /// Builds a tensor from a closure over (token, dim).
    pub fn from_fn(
        layout: TokenLayout,
        dim: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        layout.check()?;
        let mut data = Vec::with_capacity(layout.n_tokens() * dim);
        for t in 0..layout.n_tokens() {
            for d in 0..dim {
                data.push(f(t, d));
            }
        }
        Self::new(layout, dim, data)
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = Some(meta.into());
        self
    }

    pub fn layout(&self) -> &TokenLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_tokens(&self) -> usize {
        self.layout.n_tokens()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn meta(&self) -> Option<&str> {
        self.meta.as_deref()
    }

    pub fn row(&self, token: usize) -> &[f32] {
        &self.data[token * self.dim..(token + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    /// Sub-matrix of the rows named by `strategy`, order-preserving, as a
    /// row-major buffer of `rows.len() * dim` values.
    pub fn select_tokens(&self, strategy: &TokenStrategy) -> Result<Vec<f32>> {
        let rows = strategy.rows(&self.layout)?;
        let mut out = Vec::with_capacity(rows.len() * self.dim);
        for r in rows {
            out.extend_from_slice(self.row(r));
        }
        Ok(out)
    }

    pub(crate) fn set_meta(&mut self, meta: Option<String>) {
        self.meta = meta;
    }
}
