use std::io::Read;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::ensemble_builder::{LongSeries, ValueKind};
use crate::error::{Error, Result};

/// Reads a `timestamp,value` CSV with header.
pub fn load_series(path: &FsPath, value_kind: ValueKind) -> Result<LongSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series(file, value_kind)
}

pub fn read_series<R: Read>(input: R, value_kind: ValueKind) -> Result<LongSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Err(Error::rejected("series file is empty"));
    }
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "value" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `timestamp,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let num = |j: usize, name: &str| -> Result<f64> {
            let raw = rec.get(j).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing `{name}`"),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("`{name}` is not a number: {raw:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("`{name}` is not finite"),
                });
            }
            Ok(v)
        };
        let t = num(0, "timestamp")?;
        let v = num(1, "value")?;
        if let Some(&prev) = timestamps.last() {
            if t == prev {
                return Err(Error::rejected(format!(
                    "duplicate timestamp {t} at line {line} (row {i})"
                )));
            }
            if t < prev {
                return Err(Error::rejected(format!(
                    "timestamp {t} at line {line} (row {i}) is earlier than the row before it"
                )));
            }
        }
        timestamps.push(t);
        values.push(v);
    }
    if timestamps.is_empty() {
        return Err(Error::rejected("series file has a header but no rows"));
    }
    LongSeries::new(timestamps, values, value_kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub n_input: usize,
    pub n_output: usize,
    /// Grid points with no observation on them, filled from the previous tick.
    pub filled: usize,
    pub longest_fill_run: usize,
    pub max_input_spacing: f64,
}

/// Previous-tick resampling onto `t_first + k·dt`.
pub fn regularize(series: &LongSeries, dt: f64) -> Result<(LongSeries, GapStats)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::rejected(format!("regularization step must be > 0, got {dt}")));
    }
    if series.is_empty() {
        return Err(Error::rejected("cannot regularize an empty series"));
    }
    let ts = &series.timestamps;
    let spacings: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let min_spacing = spacings.iter().copied().fold(f64::INFINITY, f64::min);
    let max_spacing = spacings.iter().copied().fold(0.0, f64::max);
    if dt < min_spacing / 10.0 {
        return Err(Error::rejected(format!(
            "step {dt} is below a tenth of the smallest observed spacing {min_spacing}"
        )));
    }
    let t0 = ts[0];
    let span = ts[ts.len() - 1] - t0;
    let n_out = (span / dt + 1e-9).floor() as usize + 1;
    let tol = 1e-9 * dt;

    let mut out_t = Vec::with_capacity(n_out);
    let mut out_v = Vec::with_capacity(n_out);
    let (mut filled, mut run, mut longest) = (0, 0, 0);
    let mut j = 0;
    for k in 0..n_out {
        let t = t0 + k as f64 * dt;
        while j + 1 < ts.len() && ts[j + 1] <= t + tol {
            j += 1;
        }
        if (ts[j] - t).abs() <= tol {
            run = 0;
        } else {
            filled += 1;
            run += 1;
            longest = longest.max(run);
        }
        out_t.push(t);
        out_v.push(series.values[j]);
    }
    let stats = GapStats {
        n_input: series.len(),
        n_output: n_out,
        filled,
        longest_fill_run: longest,
        max_input_spacing: max_spacing,
    };
    Ok((LongSeries::new(out_t, out_v, series.value_kind)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LongSeries> {
        read_series(text.as_bytes(), ValueKind::Level)
    }

    #[test]
    fn well_formed_file() {
        let s = parse("timestamp,value\n0,1.5\n1,2.5\n2,3.5\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.values, vec![1.5, 2.5, 3.5]);
    }

    #[test]
    fn bad_rows_are_named() {
        let err = parse("timestamp,value\n0,1\n1,2\n1,3\n").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        let err = parse("timestamp,value\n0,1\n2,2\n1,3\n").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        assert!(matches!(parse("timestamp,value\n0,1\n1,x\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse(""), Err(Error::RejectedInput(_))));
        assert!(matches!(parse("timestamp,value\n"), Err(Error::RejectedInput(_))));
        assert!(parse("time,price\n0,1\n").is_err());
    }

    fn series(ts: &[f64], vs: &[f64]) -> LongSeries {
        LongSeries::new(ts.to_vec(), vs.to_vec(), ValueKind::Level).unwrap()
    }

    #[test]
    fn uniform_input_is_unchanged() {
        let s = series(&[0.0, 1.0, 2.0, 3.0], &[4.0, 3.0, 2.0, 1.0]);
        let (r, g) = regularize(&s, 1.0).unwrap();
        assert_eq!(r, s);
        assert_eq!(g.filled, 0);
    }

    #[test]
    fn missing_sample_is_carried_forward() {
        let s = series(&[0.0, 1.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 5.0]);
        let (r, g) = regularize(&s, 1.0).unwrap();
        assert_eq!(r.values, vec![1.0, 2.0, 2.0, 4.0, 5.0]);
        assert_eq!(g.filled, 1);
        assert_eq!(g.longest_fill_run, 1);
    }

    #[test]
    fn coarser_step_keeps_every_other_sample() {
        let s = series(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let (r, g) = regularize(&s, 2.0).unwrap();
        assert_eq!(r.values, vec![0.0, 2.0, 4.0]);
        assert_eq!(g.filled, 0);
    }

    #[test]
    fn oversampling_is_refused() {
        let s = series(&[0.0, 1.0, 2.0], &[0.0; 3]);
        assert!(regularize(&s, 0.05).is_err());
        assert!(regularize(&s, 0.1).is_ok());
        assert!(regularize(&s, 0.0).is_err());
    }

    #[test]
    fn idempotent_on_irregular_input() {
        let s = series(&[0.0, 0.7, 1.1, 3.9, 4.2, 7.0], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (once, _) = regularize(&s, 0.5).unwrap();
        let (twice, g) = regularize(&once, 0.5).unwrap();
        assert_eq!(once, twice);
        assert_eq!(g.filled, 0);
    }
}
