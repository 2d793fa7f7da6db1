use std::path::Path;

use esc_core::dataset::format_f64;
use esc_core::metrics::CurvePoints;
use serde::Serialize;

use crate::CliError;

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(esc_core::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(esc_core::Error::from)?;
    }
    std::fs::write(path, text).map_err(esc_core::Error::from)?;
    Ok(())
}

pub(crate) fn write_curve(path: &Path, curve: &CurvePoints, x: &str, y: &str) -> Result<(), CliError> {
    write_text(path, &curve.to_csv(x, y))
}

/// Float rows under a header, after a leading integer row index.
pub(crate) fn indexed_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for (i, row) in rows.into_iter().enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push(',');
            out.push_str(&format_f64(v));
        }
        out.push('\n');
    }
    out
}
