//! CSV data files, JSON-lines traces, JSON reports and atomic output
//! directories.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linmodel::Dataset;
use crate::sampler::{TraceRecord, TraceSink};

/// Name of the file whose presence marks a completed output directory.
pub const REPORT_FILE: &str = "report.json";

/// Read a headed numeric CSV into rows.
pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Csv { line, msg: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|cell| {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Csv { line, msg: format!("non-numeric cell {cell:?}") })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Csv { line, msg: format!("non-finite cell {cell:?}") })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_file_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let f = File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_csv_rows(f).map_err(|e| match e {
        Error::Csv { line, msg } => Error::Csv { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })
}

/// Load an `n × d` design and an `n × 1` response.
pub fn load_csv(x_path: &Path, z_path: &Path, sigma2: f64) -> Result<Dataset> {
    let xr = read_file_rows(x_path)?;
    let zr = read_file_rows(z_path)?;
    let n = xr.len();
    if n == 0 {
        return Err(Error::Csv { line: 2, msg: format!("{}: no data rows", x_path.display()) });
    }
    let d = xr[0].len();
    if let Some(r) = zr.iter().position(|r| r.len() != 1) {
        return Err(Error::Csv { line: r as u64 + 2, msg: format!("{}: response must have one column", z_path.display()) });
    }
    if zr.len() != n {
        return Err(Error::DimensionMismatch { what: "response rows vs design rows", expected: n, found: zr.len() });
    }
    let x = DMatrix::from_fn(n, d, |i, j| xr[i][j]);
    let z = DVector::from_iterator(n, zr.into_iter().map(|r| r[0]));
    Dataset::new(x, z, sigma2)
}

pub fn write_matrix_csv<W: Write>(out: W, prefix: &str, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |line: u64| move |e: csv::Error| Error::Csv { line, msg: e.to_string() };
    w.write_record((0..m.ncols()).map(|j| format!("{prefix}{}", j + 1))).map_err(csv_err(1))?;
    for i in 0..m.nrows() {
        // `{}` on f64 prints the shortest representation that parses back exactly.
        w.write_record(m.row(i).iter().map(|v| format!("{v}"))).map_err(csv_err(i as u64 + 2))?;
    }
    w.flush()?;
    Ok(())
}

/// Write `x.csv` and `z.csv` into `dir`.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    write_matrix_csv(BufWriter::new(File::create(dir.join("x.csv"))?), "x", data.x())?;
    let z = DMatrix::from_column_slice(data.n(), 1, data.z().as_slice());
    write_matrix_csv(BufWriter::new(File::create(dir.join("z.csv"))?), "z", &z)
}

/// One JSON object per line, keeping sweeps whose index is a multiple of
/// `thin`.
pub struct JsonlSink<W: Write> {
    out: W,
    thin: u64,
    written: usize,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W, thin: usize) -> Result<Self> {
        if thin == 0 {
            return Err(Error::InvalidArgument("thinning must be at least 1".into()));
        }
        Ok(Self { out, thin: thin as u64, written: 0 })
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for JsonlSink<W> {
    fn record(&mut self, r: &TraceRecord) -> Result<()> {
        if r.iter % self.thin != 0 {
            return Ok(());
        }
        let obj = json!({
            "iter": r.iter,
            "delta": r.delta.bitstring(),
            "theta": r.theta,
            "q": r.q,
            "lambda1": r.lambda1,
            "lambda2": r.lambda2,
            "log_target": r.log_target,
            "acc_mala": r.acc_mala,
            "acc_ind": r.acc_ind,
            "acc_rwm": r.acc_rwm,
        });
        serde_json::to_writer(&mut self.out, &obj)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }
}

pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// A staging directory next to the target that becomes the target on
/// [`OutputDir::commit`]. Dropped without a commit, it is removed.
pub struct OutputDir {
    staging: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl OutputDir {
    /// Refuses a non-empty target unless it holds a previous run's
    /// [`REPORT_FILE`].
    pub fn create(target: &Path) -> Result<Self> {
        if target.exists() {
            let ours = target.join(REPORT_FILE).is_file();
            let empty = target.is_dir() && fs::read_dir(target)?.next().is_none();
            if !ours && !empty {
                return Err(Error::Config(format!("{} exists and is not a previous run directory", target.display())));
            }
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let name = target.file_name().ok_or_else(|| Error::Config(format!("bad output path {}", target.display())))?;
        let staging = parent.join(format!(".{}.staging-{}", name.to_string_lossy(), std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        Ok(Self { staging, target: target.to_path_buf(), committed: false })
    }

    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.staging.join(name))?))
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.staging, &self.target)?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_name_their_line() {
        let err = read_csv_rows("a,b\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
        let err = read_csv_rows("a,b\n1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
    }

    #[test]
    fn matrix_csv_round_trips_bitwise() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1.0 / 3.0, 1e-300, 2.0, f64::MAX, -0.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, "x", &m).unwrap();
        let rows = read_csv_rows(buf.as_slice()).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(rows[i][j].to_bits(), m[(i, j)].to_bits());
            }
        }
    }
}
