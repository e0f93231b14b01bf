use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use partial_ot::measure::{DiscreteMeasure, Histogram};
use partial_ot::multimarginal::TensorPlan;
use partial_ot::transport::Coupling;

pub const CSV_VERSION_LINE: &str = "# partial-ot v1";

/// Output formats selected with `--format`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Formats {
    pub csv: bool,
    pub svg: bool,
    pub json: bool,
}

impl Formats {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut f = Formats::default();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "svg" => f.svg = true,
                "json" => f.json = true,
                other => return Err(format!("unknown format {other:?} (expected csv, svg, json)")),
            }
        }
        Ok(f)
    }
}

/// Artifacts staged in memory and written only once the whole command
/// succeeded, each through a temp file renamed into place.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("temp file in {}", dir.display()))?;
            tmp.write_all(bytes)?;
            tmp.flush()?;
            tmp.persist(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn versioned_csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "{CSV_VERSION_LINE}")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn coord_names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (0..dim).map(|k| format!("{prefix}_{k}")).collect()
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn measure_csv(mu: &DiscreteMeasure) -> Result<Vec<u8>> {
    let mut header = coord_names("x", mu.dim());
    header.push("mass".into());
    versioned_csv(
        &header,
        mu.atoms().map(|(p, w)| {
            let mut row: Vec<String> = p.iter().copied().map(fmt).collect();
            row.push(fmt(w));
            row
        }),
    )
}

pub fn tensor_plan_csv(plan: &TensorPlan) -> Result<Vec<u8>> {
    let dim = plan.marginals.first().map_or(1, DiscreteMeasure::dim);
    let mut header: Vec<String> = (1..=plan.arity())
        .flat_map(|j| coord_names(&format!("x{j}"), dim))
        .collect();
    header.push("mass".into());
    versioned_csv(
        &header,
        plan.entries.iter().map(|e| {
            let mut row: Vec<String> = plan
                .entry_points(e)
                .iter()
                .flat_map(|p| p.iter().copied().map(fmt))
                .collect();
            row.push(fmt(e.mass));
            row
        }),
    )
}

pub fn coupling_csv(plan: &Coupling) -> Result<Vec<u8>> {
    let dim = plan.source.dim();
    let mut header = coord_names("x", dim);
    header.extend(coord_names("y", dim));
    header.push("mass".into());
    versioned_csv(
        &header,
        plan.entries.iter().map(|e| {
            let mut row: Vec<String> = plan
                .source
                .point(e.source)
                .iter()
                .chain(plan.target.point(e.target))
                .copied()
                .map(fmt)
                .collect();
            row.push(fmt(e.mass));
            row
        }),
    )
}

/// Long-format histograms: one row per `(m, bin)`.
pub fn histograms_csv(rows: &[(f64, Histogram)]) -> Result<Vec<u8>> {
    let header: Vec<String> = ["m", "bin_lo", "bin_hi", "mass", "density"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut out = Vec::new();
    for (m, h) in rows {
        for ((lo, hi), mass) in h.edges().zip(&h.masses) {
            out.push(vec![fmt(*m), fmt(lo), fmt(hi), fmt(*mass), fmt(mass / h.width)]);
        }
    }
    versioned_csv(&header, out)
}

pub fn table_csv(header: &[&str], rows: Vec<Vec<f64>>) -> Result<Vec<u8>> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    versioned_csv(&header, rows.into_iter().map(|r| r.into_iter().map(fmt).collect()))
}

pub fn pretty_json(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_list() {
        let f = Formats::parse("csv,json").unwrap();
        assert!(f.csv && f.json && !f.svg);
        assert!(Formats::parse("csv,png").is_err());
    }

    #[test]
    fn measure_csv_layout() {
        let mu = DiscreteMeasure::from_1d(&[(-1.0, 0.5), (2.0, 1.0)]).unwrap();
        let text = String::from_utf8(measure_csv(&mu).unwrap()).unwrap();
        assert_eq!(text, "# partial-ot v1\nx,mass\n-1,0.5\n2,1\n");
    }

    #[test]
    fn artifacts_land_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.add("one.txt", "1");
        a.add("two.txt", "2");
        let paths = a.write_all(dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(std::fs::read_to_string(&paths[1]).unwrap(), "2");
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 2);
    }
}
