use crate::error::{Error, Result};
use crate::layout::{Label, TokenLayout, TokenStrategy};
use crate::tensor::FeatureTensor;

/// Per-token, per-dimension mean and unbiased variance of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `n_scoped_tokens * dim`, row-major.
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub layout: TokenLayout,
    pub dim: usize,
    pub scope: TokenStrategy,
    /// Absolute token indices covered by the statistics, in scope order.
    pub tokens: Vec<usize>,
    pub real: Moments,
    pub fake: Moments,
}

impl ClassStats {
    pub fn class(&self, label: Label) -> &Moments {
        match label {
            Label::Real => &self.real,
            Label::Fake => &self.fake,
        }
    }
}

#[derive(Debug, Clone)]
struct Welford {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Welford {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, values: impl Iterator<Item = f64>) {
        self.count += 1;
        let n = self.count as f64;
        for ((x, mean), m2) in values.zip(&mut self.mean).zip(&mut self.m2) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    fn finish(self) -> Moments {
        let denom = (self.count - 1) as f64;
        Moments {
            var: self.m2.iter().map(|m| (m / denom).max(0.0)).collect(),
            mean: self.mean,
            count: self.count,
        }
    }
}

/// Streaming class-statistics accumulator. Samples are folded in the order
/// they are pushed, so the result is deterministic for a fixed order.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    layout: TokenLayout,
    dim: usize,
    scope: TokenStrategy,
    tokens: Vec<usize>,
    real: Welford,
    fake: Welford,
}

impl StatsAccumulator {
    pub fn new(layout: TokenLayout, dim: usize, scope: TokenStrategy) -> Result<Self> {
        layout.check()?;
        let tokens = scope.rows(&layout)?;
        if tokens.is_empty() {
            return Err(Error::EmptySelection);
        }
        let len = tokens.len() * dim;
        Ok(StatsAccumulator {
            layout,
            dim,
            scope,
            tokens,
            real: Welford::new(len),
            fake: Welford::new(len),
        })
    }

    pub fn push(&mut self, label: Label, tensor: &FeatureTensor) -> Result<()> {
        if *tensor.layout() != self.layout {
            return Err(Error::LayoutMismatch {
                expected: self.layout.to_string(),
                found: tensor.layout().to_string(),
            });
        }
        if tensor.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: tensor.dim(),
            });
        }
        let values = self
            .tokens
            .iter()
            .flat_map(|&t| tensor.row(t).iter().map(|&v| f64::from(v)));
        match label {
            Label::Real => self.real.push(values),
            Label::Fake => self.fake.push(values),
        }
        Ok(())
    }

    pub fn finish(self) -> Result<ClassStats> {
        for (label, w) in [(Label::Real, &self.real), (Label::Fake, &self.fake)] {
            if w.count < 2 {
                return Err(Error::InsufficientSamples {
                    class: label,
                    count: w.count,
                    required: 2,
                });
            }
        }
        Ok(ClassStats {
            layout: self.layout,
            dim: self.dim,
            scope: self.scope,
            tokens: self.tokens,
            real: self.real.finish(),
            fake: self.fake.finish(),
        })
    }
}

/// Per-token per-dimension sample mean and unbiased (n-1) variance of each
/// class over the tokens named by `scope`.
pub fn compute_class_stats<'a>(
    reference: impl IntoIterator<Item = (Label, &'a FeatureTensor)>,
    scope: &TokenStrategy,
) -> Result<ClassStats> {
    let mut iter = reference.into_iter().peekable();
    let Some((_, first)) = iter.peek() else {
        return Err(Error::InsufficientSamples {
            class: Label::Real,
            count: 0,
            required: 2,
        });
    };
    let mut acc = StatsAccumulator::new(*first.layout(), first.dim(), scope.clone())?;
    for (label, tensor) in iter {
        acc.push(label, tensor)?;
    }
    acc.finish()
}
