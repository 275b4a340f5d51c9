//! Uniformly gridded trajectories, ensembles, and the shared CSV schema
//! (`t,x1,...,xd`, 17 significant digits).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N × d` samples on the grid `t_n = t0 + n·h`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    t0: f64,
    h: f64,
    dim: usize,
    data: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, h: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("time series needs at least one component".into()));
        }
        if !(h > 0.0) || !h.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive and finite, got {h}")));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument("sample count is not a positive multiple of the dimension".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("time series values must be finite".into()));
        }
        Ok(TimeSeries { t0, h, dim, data })
    }

    pub fn from_rows(t0: f64, h: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Self::new(t0, h, dim, rows.concat())
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.len() - 1)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.t0 == other.t0 && self.h == other.h && self.dim == other.dim && self.len() == other.len()
    }

    /// Writes `t,x1,...,xd` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("t");
        for i in 1..=self.dim {
            header.push_str(&format!(",x{i}"));
        }
        writeln!(w, "{header}")?;
        for (n, row) in self.rows().enumerate() {
            let mut line = format!("{:.16e}", self.time(n));
            for v in row {
                line.push_str(&format!(",{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the CSV schema; `t,x,z` is accepted as an alias header at d=2.
    /// The step is recovered as `(t_last − t0)/(N − 1)` and every time stamp
    /// must lie on that grid.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.len() < 2 || cols[0] != "t" {
            return Err(Error::Parse("expected header starting with `t`".into()));
        }
        let dim = cols.len() - 1;
        let canonical = cols[1..].iter().enumerate().all(|(i, c)| *c == format!("x{}", i + 1));
        let alias = dim == 2 && cols[1] == "x" && cols[2] == "z";
        if !canonical && !alias {
            return Err(Error::Parse(format!("unrecognised header `{}`", cols.join(","))));
        }
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != dim + 1 {
                return Err(Error::Parse(format!("row {}: expected {} fields", line + 1, dim + 1)));
            }
            let mut vals = rec.iter().map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: `{f}` is not a number", line + 1)))
            });
            times.push(vals.next().unwrap()?);
            for v in vals {
                data.push(v?);
            }
        }
        if times.is_empty() {
            return Err(Error::Parse("no data rows".into()));
        }
        let t0 = times[0];
        let n = times.len();
        let h = if n == 1 { 1.0 } else { (times[n - 1] - t0) / (n - 1) as f64 };
        if !(h > 0.0) {
            return Err(Error::Parse("time stamps must be strictly increasing".into()));
        }
        for (k, &t) in times.iter().enumerate() {
            let expected = t0 + k as f64 * h;
            if (t - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                return Err(Error::Parse(format!("row {}: time {t} is off the uniform grid", k + 1)));
            }
        }
        TimeSeries::new(t0, h, dim, data).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Independent trajectories on one shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    runs: Vec<TimeSeries>,
}

impl Ensemble {
    pub fn new(runs: Vec<TimeSeries>) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::InvalidArgument("ensemble needs at least one run".into()))?;
        if let Some(k) = runs.iter().position(|r| !r.same_grid(first)) {
            return Err(Error::InvalidArgument(format!("run {k} is on a different grid")));
        }
        Ok(Ensemble { runs })
    }

    pub fn runs(&self) -> &[TimeSeries] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Pointwise arithmetic mean over runs.
    pub fn mean(&self) -> TimeSeries {
        let first = &self.runs[0];
        let mut acc = vec![0.0; first.data.len()];
        for r in &self.runs {
            for (a, v) in acc.iter_mut().zip(&r.data) {
                *a += v;
            }
        }
        let k = self.runs.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        TimeSeries { t0: first.t0, h: first.h, dim: first.dim, data: acc }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_of_constant_runs() {
        let a = TimeSeries::new(0.0, 0.5, 1, vec![0.0; 4]).unwrap();
        let b = TimeSeries::new(0.0, 0.5, 1, vec![2.0; 4]).unwrap();
        let m = Ensemble::new(vec![a.clone(), b]).unwrap().mean();
        assert_eq!(m.data(), &[1.0; 4]);
        assert_eq!(Ensemble::new(vec![a.clone()]).unwrap().mean(), a);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = TimeSeries::new(0.0, 0.5, 1, vec![0.0; 4]).unwrap();
        let b = TimeSeries::new(0.0, 0.25, 1, vec![0.0; 4]).unwrap();
        assert!(Ensemble::new(vec![a, b]).is_err());
        assert!(Ensemble::new(vec![]).is_err());
    }

    #[test]
    fn csv_alias_header() {
        let text = "t,x,z\n0,1,2\n0.5,3,4\n1.0,5,6\n";
        let ts = TimeSeries::read_csv(text.as_bytes()).unwrap();
        assert_eq!(ts.dim(), 2);
        assert_eq!(ts.h(), 0.5);
        assert_eq!(ts.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn csv_malformed() {
        assert!(TimeSeries::read_csv("t,y\n0,1\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("t,x1\n0,1\n1,abc\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("t,x1\n0,1\n1,2\n5,3\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("t,x1\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_long_grid_round_trip() {
        let h = 2.0 / 135.0;
        let data: Vec<f64> = (0..1801 * 2).map(|k| (k as f64 * 0.37).sin().abs()).collect();
        let ts = TimeSeries::new(0.0, h, 2, data).unwrap();
        let back = TimeSeries::read_csv(ts.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back.data(), ts.data());
        assert!((back.h() - h).abs() <= 1e-15 * h);
    }

    proptest! {
        #[test]
        fn csv_values_round_trip(
            vals in proptest::collection::vec(-1e6f64..1e6, 6..60),
            h in 1e-3f64..10.0,
            t0 in -5.0f64..5.0,
        ) {
            let n = vals.len() / 3 * 3;
            let ts = TimeSeries::new(t0, h, 3, vals[..n].to_vec()).unwrap();
            let back = TimeSeries::read_csv(ts.to_csv_string().as_bytes()).unwrap();
            prop_assert_eq!(back.data(), ts.data());
            prop_assert_eq!(back.t0(), ts.t0());
            prop_assert!((back.h() - h).abs() <= 1e-12 * h);
        }
    }
}
