//! Look-alike generators for the two real datasets, so the real-data
//! protocol runs end to end without the original files.
//!
//! * phoneme-style: one curve of 150 log-periodogram-like values per
//!   sample, two overlapping classes `aa` / `ao`;
//! * Adelaide-style: 7 daily temperature curves per week on 48 half-hour
//!   points, with a paired demand dataset (Megawatts) that depends linearly
//!   on temperature.

use bfae_core::gp::{sample_gp, MaternParams, SimConfig};
use bfae_core::{rng, FunctionBatch, FunctionalDataset, Grid};

use crate::error::Result;

pub const PHONEME_POINTS: usize = 150;
pub const PHONEME_LABELS: [&str; 2] = ["aa", "ao"];
pub const ADELAIDE_POINTS: usize = 48;
pub const WEEKDAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

/// Amplitude of the class-specific bump; sets how separable the classes are.
const PHONEME_GAP: f64 = 0.7;

fn gp(n: usize, r: usize, m: usize, sigma2: f64, rho: f64, noise_sd: f64, seed: u64) -> Result<FunctionBatch> {
    let cfg = SimConfig {
        n_samples: n,
        n_features: r,
        grid: Grid::uniform(0.0, 1.0, m)?,
        matern: MaternParams::new(sigma2, rho)?,
        noise_sd,
        seed,
    };
    Ok(sample_gp(&cfg)?.values)
}

fn bump(t: f64, centre: f64, width: f64) -> f64 {
    (-((t - centre) / width).powi(2)).exp()
}

/// Phoneme-style curves with labels `aa`/`ao` drawn with equal probability.
pub fn phoneme_like(n: usize, seed: u64) -> Result<FunctionalDataset> {
    let m = PHONEME_POINTS;
    let grid = Grid::uniform(0.0, 1.0, m)?;
    let smooth = gp(n, 1, m, 1.0, 0.15, 0.6, rng::derive_seed(seed, 1))?;
    let mut pick = rng::seeded(rng::derive_seed(seed, 2));
    let labels: Vec<bool> = (0..n).map(|_| rng::uniform(&mut pick, 0.0, 1.0) < 0.5).collect();
    let t = grid.points();
    let values = FunctionBatch::from_fn(n, 1, m, |i, _, k| {
        // decaying spectrum with formant-like peaks
        let base = 14.0 - 9.0 * t[k] + 3.0 * bump(t[k], 0.12, 0.05) + 2.0 * bump(t[k], 0.3, 0.06);
        let sign = if labels[i] { 0.5 } else { -0.5 };
        let class = sign * PHONEME_GAP * (bump(t[k], 0.2, 0.05) - bump(t[k], 0.35, 0.05));
        base + class + smooth.get(i, 0, k)
    });
    let names = vec!["log_periodogram".to_string()];
    let labels = labels.iter().map(|&l| PHONEME_LABELS[l as usize].to_string()).collect();
    Ok(FunctionalDataset::new(values, grid, names, Some(labels))?)
}

/// Adelaide-style weekly temperature curves (°C) and paired demand (MW).
pub fn adelaide_like(n: usize, seed: u64) -> Result<(FunctionalDataset, FunctionalDataset)> {
    let (r, m) = (WEEKDAYS.len(), ADELAIDE_POINTS);
    let grid = Grid::uniform(0.0, 1.0, m)?;
    let t = grid.points().to_vec();
    let q = grid.weights().to_vec();
    let daily = gp(n, r, m, 2.0, 0.3, 0.3, rng::derive_seed(seed, 1))?;
    let demand_noise = gp(n, r, m, 120.0 * 120.0, 0.2, 40.0, rng::derive_seed(seed, 2))?;
    let mut s = rng::seeded(rng::derive_seed(seed, 3));
    // seasonal level shared by the whole week, plus a per-day offset
    let week: Vec<f64> = (0..n).map(|_| 4.0 * rng::normal(&mut s)).collect();
    let day: Vec<f64> = (0..n * r).map(|_| 2.0 * rng::normal(&mut s)).collect();
    let temp = FunctionBatch::from_fn(n, r, m, |i, d, k| {
        let cycle = 5.0 * (2.0 * std::f64::consts::PI * (t[k] - 0.4)).sin();
        18.0 + week[i] + day[i * r + d] + cycle + daily.get(i, d, k)
    });
    // demand responds linearly to the same day's temperature through a
    // smooth kernel
    let kernel: Vec<f64> = (0..m * m)
        .map(|idx| {
            let (a, b) = (t[idx / m], t[idx % m]);
            60.0 * bump(a - b, 0.0, 0.15) / (0.15 * std::f64::consts::PI.sqrt())
        })
        .collect();
    let demand = FunctionBatch::from_fn(n, r, m, |i, d, k| {
        let weekend = if d >= 5 { -180.0 } else { 0.0 };
        let shape = 1500.0 + 350.0 * (2.0 * std::f64::consts::PI * (t[k] - 0.3)).sin();
        let effect: f64 = (0..m).map(|u| kernel[k * m + u] * q[u] * (temp.get(i, d, u) - 18.0)).sum();
        shape + weekend + effect + demand_noise.get(i, d, k)
    });
    let names: Vec<String> = WEEKDAYS.iter().map(|s| s.to_string()).collect();
    Ok((
        FunctionalDataset::new(temp, grid.clone(), names.clone(), None)?,
        FunctionalDataset::new(demand, grid, names, None)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_labels() {
        let p = phoneme_like(40, 1).unwrap();
        assert_eq!(p.values.shape(), (40, 1, 150));
        let labels = p.labels.as_ref().unwrap();
        assert!(labels.iter().all(|l| l == "aa" || l == "ao"));
        assert!(labels.iter().any(|l| l == "aa") && labels.iter().any(|l| l == "ao"));
        let (temp, demand) = adelaide_like(10, 2).unwrap();
        assert_eq!(temp.values.shape(), (10, 7, 48));
        assert_eq!(demand.values.shape(), (10, 7, 48));
        assert_eq!(temp.feature_names[0], "monday");
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(phoneme_like(5, 3).unwrap(), phoneme_like(5, 3).unwrap());
        assert_ne!(phoneme_like(5, 3).unwrap(), phoneme_like(5, 4).unwrap());
    }
}
