//! Plain-text artifacts: header-free matrix CSV and loss-history CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::objectives::LossReport;

/// One row per line, comma separated, shortest round-trip decimal form.
pub fn matrix_to_csv(m: ArrayView2<'_, f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn loss_history_to_csv(history: &[LossReport]) -> String {
    let mut out = String::from("epoch,contrast,decouple,cov,total\n");
    for (i, r) in history.iter().enumerate() {
        writeln!(out, "{},{},{},{},{}", i + 1, r.contrast, r.decouple, r.cov, r.total).expect("writing to a String");
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
