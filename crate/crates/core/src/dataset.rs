//! Functional datasets, train/test splitting and pointwise standardisation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::grid::Grid;
use crate::math;
use crate::rng;
use crate::tensor::FunctionBatch;

/// `N` samples of `R` curves observed on a common grid, with optional
/// per-sample labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    pub values: FunctionBatch,
    pub grid: Grid,
    pub feature_names: Vec<String>,
    pub labels: Option<Vec<String>>,
}

impl FunctionalDataset {
    pub fn new(
        values: FunctionBatch,
        grid: Grid,
        feature_names: Vec<String>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if values.points() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: values.points() });
        }
        if feature_names.len() != values.features() {
            return Err(shape_err("feature_names length must equal feature count"));
        }
        if let Some(l) = &labels {
            if l.len() != values.n() {
                return Err(shape_err("labels length must equal sample count"));
            }
        }
        if !values.all_finite() {
            return Err(Error::NonFinite(String::from("dataset values")));
        }
        Ok(Self { values, grid, feature_names, labels })
    }

    /// Dataset with features named `x1..xR` and no labels.
    pub fn unlabeled(values: FunctionBatch, grid: Grid) -> Result<Self> {
        let names = (1..=values.features()).map(|r| format!("x{r}")).collect();
        Self::new(values, grid, names, None)
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn features(&self) -> usize {
        self.values.features()
    }

    pub fn points(&self) -> usize {
        self.values.points()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            values: self.values.select(indices),
            grid: self.grid.clone(),
            feature_names: self.feature_names.clone(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
        }
    }

    /// Same metadata, new values (e.g. a reconstruction).
    pub fn with_values(&self, values: FunctionBatch) -> Result<Self> {
        Self::new(values, self.grid.clone(), self.feature_names.clone(), self.labels.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 0, shuffle: true }
    }
}

/// Train and test index sets. The train set has `round(f·N)` entries,
/// clamped so neither side is empty.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidParameter(format!("train_fraction {f} not in (0, 1)")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples to split, got {n}")));
    }
    let k = (math::round(f * n as f64) as usize).clamp(1, n - 1);
    let order = if spec.shuffle {
        rng::permutation(&mut rng::seeded(spec.seed), n)
    } else {
        (0..n).collect()
    };
    let mut train = order[..k].to_vec();
    let mut test = order[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(
    data: &FunctionalDataset,
    spec: &SplitSpec,
) -> Result<(FunctionalDataset, FunctionalDataset)> {
    let (train, test) = split_indices(data.n(), spec)?;
    Ok((data.select(&train), data.select(&test)))
}

/// Floor applied to pointwise standard deviations.
pub const SD_FLOOR: f64 = 1e-12;

/// Per-feature, per-timepoint z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub features: usize,
    pub points: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Number of (feature, timepoint) cells whose sd hit [`SD_FLOOR`].
    pub floored: usize,
}

impl Standardizer {
    pub fn fit(data: &FunctionBatch) -> Result<Self> {
        let n = data.n();
        if n < 2 {
            return Err(Error::InvalidParameter(String::from("standardize needs N >= 2")));
        }
        let w = data.width();
        let mut mean = alloc::vec![0.0; w];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(data.sample(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = alloc::vec![0.0; w];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(data.sample(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut floored = 0;
        let sd = var
            .into_iter()
            .map(|s| {
                let sd = math::sqrt(s / (n - 1) as f64);
                if sd < SD_FLOOR {
                    floored += 1;
                    SD_FLOOR
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { features: data.features(), points: data.points(), mean, sd, floored })
    }

    pub fn apply(&self, data: &FunctionBatch) -> Result<FunctionBatch> {
        self.check(data)?;
        let mut out = data.clone();
        for i in 0..out.n() {
            for ((v, m), s) in out.sample_mut(i).iter_mut().zip(&self.mean).zip(&self.sd) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, data: &FunctionBatch) -> Result<FunctionBatch> {
        self.check(data)?;
        let mut out = data.clone();
        for i in 0..out.n() {
            for ((v, m), s) in out.sample_mut(i).iter_mut().zip(&self.mean).zip(&self.sd) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check(&self, data: &FunctionBatch) -> Result<()> {
        if data.features() != self.features || data.points() != self.points {
            return Err(shape_err("standardizer fitted on a different shape"));
        }
        Ok(())
    }
}
