//! CSV persistence of solution series: header `t,<name>...`, `\n` line
//! endings, numbers in shortest round-trip decimal form.

use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::SolutionSeries;

pub fn format_number(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_series(series: &SolutionSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    let mut header = vec!["t".to_string()];
    header.extend(series.names.iter().cloned());
    w.write_record(&header)?;
    for (t, row) in series.grid.iter().zip(&series.values) {
        let mut rec = vec![format_number(*t)];
        rec.extend(row.iter().map(|&v| format_number(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a file written by [`write_series`]; route and diagnostics are not
/// stored and come back empty.
pub fn read_series(path: impl AsRef<Path>) -> Result<SolutionSeries> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("t") || header.len() < 2 {
        return Err(Error::Parse(format!("{}: header must be `t,<name>...`", path.display())));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let nums = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("{}: `{f}`: {e}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        grid.push(nums[0]);
        values.push(nums[1..].to_vec());
    }
    SolutionSeries::new(names, grid, values, None)
}
