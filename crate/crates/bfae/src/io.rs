//! Dataset files.
//!
//! A dataset is a CSV file with header `sample_id,feature,label,t_1,...,t_M`
//! and one row per (sample, feature), plus a sidecar `<stem>.grid.json`
//! holding `{"interval":[a,b],"points":[...]}`. Values are written with 17
//! significant digits so a save/load round trip is exact. Files are UTF-8
//! with LF line endings; empty `label` cells mean "unlabelled".

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bfae_core::{FunctionBatch, FunctionalDataset, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    interval: [f64; 2],
    points: Vec<f64>,
}

/// Decimal rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sidecar path for a dataset CSV: `data.csv` → `data.grid.json`.
pub fn grid_path(csv: &Path) -> PathBuf {
    csv.with_extension("grid.json")
}

pub fn save_grid(grid: &Grid, path: &Path) -> Result<()> {
    let body = GridFile { interval: [grid.start(), grid.end()], points: grid.points().to_vec() };
    let mut text = serde_json::to_string(&body)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn load_grid(path: &Path) -> Result<Grid> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let g: GridFile = serde_json::from_str(&text)
        .map_err(|e| Error::Format { path: path.into(), message: format!("bad grid sidecar: {e}") })?;
    let (first, last) = match (g.points.first(), g.points.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::Format { path: path.into(), message: "grid has no points".into() }),
    };
    if first != g.interval[0] || last != g.interval[1] {
        return Err(Error::Format {
            path: path.into(),
            message: format!("points span [{first}, {last}] but interval is {:?}", g.interval),
        });
    }
    Ok(Grid::from_points(g.points)?)
}

/// Write `data` as CSV plus grid sidecar.
pub fn save_csv(data: &FunctionalDataset, path: &Path) -> Result<()> {
    let m = data.points();
    let mut out = String::with_capacity(data.n() * data.features() * (m * 24 + 16));
    out.push_str("sample_id,feature,label");
    for t in 1..=m {
        out.push_str(&format!(",t_{t}"));
    }
    out.push('\n');
    for i in 0..data.n() {
        let label = data.labels.as_ref().map_or("", |l| l[i].as_str());
        for (r, name) in data.feature_names.iter().enumerate() {
            out.push_str(&format!("{i},{},{}", csv_field(name), csv_field(label)));
            for v in data.values.curve(i, r) {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(out.as_bytes()).map_err(io_err(path))?;
    save_grid(&data.grid, &grid_path(path))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Sample {
    id: String,
    label: String,
    features: Vec<String>,
    values: Vec<f64>,
    first_row: usize,
}

/// Read a dataset written by [`save_csv`] (or any file following the same
/// layout). The grid comes from the sidecar next to `path`.
pub fn load_csv(path: &Path) -> Result<FunctionalDataset> {
    let grid = load_grid(&grid_path(path))?;
    let m = grid.len();
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Format { path: path.into(), message: format!("unreadable header: {e}") })?
        .clone();
    let expected: Vec<String> =
        ["sample_id", "feature", "label"].iter().map(|s| s.to_string()).chain((1..=m).map(|t| format!("t_{t}"))).collect();
    if header.len() != expected.len() || header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(Error::Format {
            path: path.into(),
            message: format!(
                "header must be sample_id,feature,label,t_1..t_{m} to match the grid sidecar ({} columns found)",
                header.len()
            ),
        });
    }
    let mut samples: Vec<Sample> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Malformed {
            path: path.into(),
            row,
            column: "-".into(),
            message: e.to_string(),
        })?;
        if record.len() != expected.len() {
            return Err(Error::Malformed {
                path: path.into(),
                row,
                column: "-".into(),
                message: format!("expected {} cells, found {}", expected.len(), record.len()),
            });
        }
        let id = record[0].to_string();
        let feature = record[1].to_string();
        let label = record[2].to_string();
        let mut values = Vec::with_capacity(m);
        for (c, cell) in record.iter().enumerate().skip(3) {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Malformed {
                path: path.into(),
                row,
                column: expected[c].clone(),
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Malformed {
                    path: path.into(),
                    row,
                    column: expected[c].clone(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
        match samples.last_mut() {
            Some(s) if s.id == id => {
                if s.label != label {
                    return Err(Error::Malformed {
                        path: path.into(),
                        row,
                        column: "label".into(),
                        message: format!("label {label:?} differs from {:?} given earlier for sample {id}", s.label),
                    });
                }
                s.features.push(feature);
                s.values.extend(values);
            }
            _ => {
                if samples.iter().any(|s| s.id == id) {
                    return Err(Error::Malformed {
                        path: path.into(),
                        row,
                        column: "sample_id".into(),
                        message: format!("rows of sample {id} are not contiguous"),
                    });
                }
                samples.push(Sample { id, label, features: vec![feature], values, first_row: row });
            }
        }
    }
    let first = samples
        .first()
        .ok_or_else(|| Error::Format { path: path.into(), message: "no data rows".into() })?;
    let names = first.features.clone();
    for s in &samples {
        if s.features != names {
            return Err(Error::Malformed {
                path: path.into(),
                row: s.first_row,
                column: "feature".into(),
                message: format!("sample {} has features {:?}, expected {:?}", s.id, s.features, names),
            });
        }
    }
    let labelled = samples.iter().filter(|s| !s.label.is_empty()).count();
    if labelled != 0 && labelled != samples.len() {
        let s = samples.iter().find(|s| s.label.is_empty()).expect("counted above");
        return Err(Error::Malformed {
            path: path.into(),
            row: s.first_row,
            column: "label".into(),
            message: "missing label in a labelled file".into(),
        });
    }
    let labels = (labelled > 0).then(|| samples.iter().map(|s| s.label.clone()).collect());
    let n = samples.len();
    let r = names.len();
    let data: Vec<f64> = samples.into_iter().flat_map(|s| s.values).collect();
    let values = FunctionBatch::from_vec(n, r, m, data)?;
    Ok(FunctionalDataset::new(values, grid, names, labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> FunctionalDataset {
        let g = Grid::uniform(0.0, 1.0, 3).unwrap();
        let v = FunctionBatch::from_vec(2, 1, 3, vec![0.1, -2.5, 1e-300, 3.0, 1.0 / 3.0, -0.0]).unwrap();
        FunctionalDataset::new(v, g, vec!["x".into()], Some(vec!["aa".into(), "ao".into()])).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = tiny();
        save_csv(&d, &p).unwrap();
        let back = load_csv(&p).unwrap();
        assert_eq!(back.values.shape(), (2, 1, 3));
        for (a, b) in d.values.as_slice().iter().zip(back.values.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.labels, d.labels);
        assert_eq!(back.grid, d.grid);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("sample_id,feature,label,t_1,t_2,t_3\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn bad_cell_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_csv(&tiny(), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap().replacen("3.0000000000000000e0", "oops", 1);
        fs::write(&p, text).unwrap();
        let e = load_csv(&p).unwrap_err().to_string();
        assert!(e.contains("row 3") && e.contains("t_1") && e.contains("oops"), "{e}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_csv(&tiny(), &p).unwrap();
        let mut text = fs::read_to_string(&p).unwrap();
        text.push_str("2,x,aa,1.0,2.0\n");
        fs::write(&p, text).unwrap();
        let e = load_csv(&p).unwrap_err().to_string();
        assert!(e.contains("row 4") && e.contains("expected 6 cells"), "{e}");
    }
}
