//! CSV result tables.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which reads
//! back to the identical `f64`. Headers per command:
//!
//! | command        | header |
//! |----------------|--------|
//! | gap-curve      | `variance,rate_uniform_bits,rate_optimal_bits,gap_bits` |
//! | waterfill      | `index,variance,distortion,rate_bits` |
//! | channel-verify | `variance,distortion,samples,mi_bits,std_error_bits,closed_form_bits,z_score,output_variance,expected_output_variance` |
//! | correlation    | `variance,rho,distortion,rate_independent_bits,rate_correlated_bits,overestimate_bits` |
//! | rd-sweep       | `budget,latent_rate_bps,rate_bpp,mse,psnr_db` |
//! | ablation       | `arm,budget,latent_rate_bps,rate_bpp,mse,psnr_db` |

use std::path::Path;

use crate::error::{Error, Result};
use crate::gaussian_rd::RatePair;
use crate::pipeline::RDCurve;

pub const GAP_CURVE_HEADER: &[&str] = &[
    "variance",
    "rate_uniform_bits",
    "rate_optimal_bits",
    "gap_bits",
];
pub const WATERFILL_HEADER: &[&str] = &["index", "variance", "distortion", "rate_bits"];
pub const CHANNEL_VERIFY_HEADER: &[&str] = &[
    "variance",
    "distortion",
    "samples",
    "mi_bits",
    "std_error_bits",
    "closed_form_bits",
    "z_score",
    "output_variance",
    "expected_output_variance",
];
pub const CORRELATION_HEADER: &[&str] = &[
    "variance",
    "rho",
    "distortion",
    "rate_independent_bits",
    "rate_correlated_bits",
    "overestimate_bits",
];
pub const RD_SWEEP_HEADER: &[&str] = &["budget", "latent_rate_bps", "rate_bpp", "mse", "psnr_db"];
pub const ABLATION_HEADER: &[&str] = &[
    "arm",
    "budget",
    "latent_rate_bps",
    "rate_bpp",
    "mse",
    "psnr_db",
];

/// Round-trip exact float text.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::ShapeMismatch {
                left: format!("{} columns", self.header.len()),
                right: format!("row of {}", row.len()),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_floats(&mut self, values: &[f64]) -> Result<()> {
        self.push(values.iter().map(|&v| format_float(v)).collect())
    }

    /// Column `name` parsed as floats.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row[i].parse::<f64>().map_err(|_| {
                    Error::parse(
                        r + 1,
                        format!("column {name}: {:?} is not a number", row[i]),
                    )
                })
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.into_inner()
            .map_err(|e| Error::invalid(format!("csv buffer: {e}")))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(bytes);
        let header = r
            .headers()
            .map_err(csv_error)?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map(|r| r.iter().map(str::to_string).collect())
                    .map_err(csv_error)
            })
            .collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }

    pub fn gap_curve(pairs: &[RatePair]) -> Result<Self> {
        let mut t = Self::new(GAP_CURVE_HEADER);
        for p in pairs {
            t.push_floats(&[p.variance, p.rate_uniform, p.rate_optimal, p.gap])?;
        }
        Ok(t)
    }

    pub fn rd_curve(curve: &RDCurve) -> Result<Self> {
        let mut t = Self::new(RD_SWEEP_HEADER);
        for p in sorted_by_budget(curve) {
            t.push_floats(&[p.budget, p.latent_rate, p.rate, p.distortion_mse, p.psnr_db])?;
        }
        Ok(t)
    }

    /// Rows grouped by arm in `arms` order, each sorted by budget.
    pub fn ablation(arms: &[(&str, &RDCurve)]) -> Result<Self> {
        let mut t = Self::new(ABLATION_HEADER);
        for (name, curve) in arms {
            for p in sorted_by_budget(curve) {
                let mut row = vec![name.to_string()];
                row.extend(
                    [p.budget, p.latent_rate, p.rate, p.distortion_mse, p.psnr_db]
                        .iter()
                        .map(|&v| format_float(v)),
                );
                t.push(row)?;
            }
        }
        Ok(t)
    }
}

fn sorted_by_budget(curve: &RDCurve) -> Vec<&crate::pipeline::RDPoint> {
    let mut pts: Vec<_> = curve.points().iter().collect();
    pts.sort_by(|a, b| a.budget.total_cmp(&b.budget));
    pts
}

fn csv_error(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte() as usize);
    Error::parse(offset, e.to_string())
}

pub fn write_table(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Table::from_bytes(&bytes)
}
