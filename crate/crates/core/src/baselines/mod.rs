//! Linear and dense-network baselines: PCA on flattened samples, FPCA on
//! curves, and a classical autoencoder.

pub mod ae;
pub mod fpca;
pub mod pca;

/// Share of variance retained by the PCA/FPCA truncation rule.
pub const DEFAULT_VARIANCE_TARGET: f64 = 0.99;

/// Smallest `k` whose leading values reach `target` of the total.
pub(crate) fn retained_count(values: &[f64], target: f64) -> usize {
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        acc += v.max(0.0);
        if acc >= target * total * (1.0 - 1e-12) {
            return k + 1;
        }
    }
    values.len()
}
