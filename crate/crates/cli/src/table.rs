//! CSV files written and read by the runner.
//!
//! Every file starts with one `#` line naming the tool version and the hash
//! of the configuration that produced it, followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cisim::{Array64, Measurement64, Point3, C64};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn stamp(hash: &str) -> String {
    format!("# cisim {VERSION} config_sha256={hash}")
}

/// Shortest round-trip representation; `NaN` for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub struct Table {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, hash: &str, header: &[String]) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut buf = BufWriter::new(file);
        writeln!(buf, "{}", stamp(hash)).map_err(|e| CliError::io(path, e))?;
        let mut t = Self {
            path: path.to_owned(),
            inner: csv::Writer::from_writer(buf),
        };
        t.row(header)?;
        Ok(t)
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        self.inner.write_record(fields).map_err(|e| csv_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Config(format!("{}: {other:?}", path.display())),
    }
}

pub fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f))
}

fn schema(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {msg}", path.display()))
}

pub fn parse_f64(path: &Path, s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| schema(path, format!("not a number: {s:?}")))
}

/// Receivers as rows; `re_<f>`, `im_<f>` column pairs per frequency.
pub fn write_measurement(path: &Path, hash: &str, m: &Measurement64) -> Result<(), CliError> {
    let mut head = header(&["x_m", "y_m", "z_m"]);
    for f in &m.frequencies {
        head.push(format!("re_{}", num(*f)));
        head.push(format!("im_{}", num(*f)));
    }
    let mut t = Table::create(path, hash, &head)?;
    for (i, p) in m.array.points.iter().enumerate() {
        let mut row = vec![num(p.x), num(p.y), num(p.z)];
        for z in m.pressures.row(i).iter() {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        t.row(&row)?;
    }
    t.finish()
}

pub fn read_measurement(path: &Path) -> Result<Measurement64, CliError> {
    let mut r = reader(path)?;
    let head = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if head.len() < 5 || (head.len() - 3) % 2 != 0 || &head[0] != "x_m" || &head[1] != "y_m" || &head[2] != "z_m" {
        return Err(schema(path, "expected x_m,y_m,z_m followed by re_<f>,im_<f> pairs"));
    }
    let mut freqs = Vec::new();
    for k in (3..head.len()).step_by(2) {
        let (re, im) = (&head[k], &head[k + 1]);
        match (re.strip_prefix("re_"), im.strip_prefix("im_")) {
            (Some(a), Some(b)) if a == b => freqs.push(parse_f64(path, a)?),
            _ => return Err(schema(path, format!("bad column pair {re:?}, {im:?}"))),
        }
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != head.len() {
            return Err(schema(path, "ragged row"));
        }
        let v: Vec<f64> = rec.iter().map(|s| parse_f64(path, s)).collect::<Result<_, _>>()?;
        points.push(Point3::new(v[0], v[1], v[2]));
        values.push(v[3..].chunks(2).map(|c| C64::new(c[0], c[1])).collect::<Vec<_>>());
    }
    let array = Array64::new(points, path.display().to_string()).map_err(|e| schema(path, e))?;
    let p = cisim::DMatrix::from_fn(values.len(), freqs.len(), |i, j| values[i][j]);
    Measurement64::new(array, freqs, p).map_err(|e| schema(path, e))
}

/// One absorption results file.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionRows {
    pub scheme: String,
    pub frequencies: Vec<f64>,
    pub alpha: Vec<f64>,
    pub nmse_p: Vec<f64>,
    pub nmse_uz: Vec<f64>,
}

pub const ABSORPTION_HEADER: [&str; 9] = [
    "f_hz",
    "re_zs",
    "im_zs",
    "alpha_raw",
    "alpha_clipped",
    "nmse_p",
    "nmse_uz",
    "lambda",
    "scheme",
];

pub fn read_absorption(path: &Path) -> Result<AbsorptionRows, CliError> {
    let mut r = reader(path)?;
    let head = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if head.iter().ne(ABSORPTION_HEADER) {
        return Err(schema(path, "not an absorption results file"));
    }
    let mut out = AbsorptionRows {
        scheme: String::new(),
        frequencies: vec![],
        alpha: vec![],
        nmse_p: vec![],
        nmse_uz: vec![],
    };
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        out.frequencies.push(parse_f64(path, &rec[0])?);
        out.alpha.push(parse_f64(path, &rec[3])?);
        out.nmse_p.push(parse_f64(path, &rec[5])?);
        out.nmse_uz.push(parse_f64(path, &rec[6])?);
        out.scheme = rec[8].to_string();
    }
    if out.frequencies.is_empty() {
        return Err(schema(path, "no rows"));
    }
    Ok(out)
}
