//! Residual reports shared by the admissibility and optimality checks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::fmt_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub r: Vec<f64>,
}

/// Per-sample values of one named residual plus summary norms.
///
/// Samples inside breakpoint windows are left out and counted in `skipped`.
/// `l2` is the root-mean-square over all reported components, so it is
/// comparable across mesh sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub max_abs: f64,
    pub l2: f64,
    pub skipped: usize,
    pub samples: Vec<Sample>,
}

impl ResidualReport {
    pub fn new(name: impl Into<String>, times: &[f64], values: Vec<Vec<f64>>, skip: &[bool]) -> Self {
        debug_assert_eq!(times.len(), values.len());
        let mut samples = Vec::with_capacity(values.len());
        let mut skipped = 0;
        for (k, (t, r)) in times.iter().zip(values).enumerate() {
            if skip.get(k).copied().unwrap_or(false) {
                skipped += 1;
            } else {
                samples.push(Sample { t: *t, r });
            }
        }
        let mut max_abs: f64 = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for s in &samples {
            for &v in &s.r {
                max_abs = max_abs.max(v.abs());
                sum_sq += v * v;
                count += 1;
            }
        }
        let l2 = if count == 0 {
            0.0
        } else {
            (sum_sq / count as f64).sqrt()
        };
        ResidualReport {
            name: name.into(),
            max_abs,
            l2,
            skipped,
            samples,
        }
    }

    /// Scalar-valued convenience constructor.
    pub fn scalar(name: impl Into<String>, times: &[f64], values: &[f64], skip: &[bool]) -> Self {
        Self::new(name, times, values.iter().map(|&v| vec![v]).collect(), skip)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs <= tol
    }

    /// Writes `t,r1,..,rm` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let width = self.samples.first().map_or(1, |s| s.r.len());
        let mut header = String::from("t");
        for i in 1..=width {
            header.push_str(&format!(",r{i}"));
        }
        writeln!(out, "{header}")?;
        for s in &self.samples {
            let mut line = fmt_f64(s.t);
            for v in &s.r {
                line.push(',');
                line.push_str(&fmt_f64(*v));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log(err)` against `log(step)`.
///
/// Returns `None` when fewer than two usable points exist (non-positive
/// errors or steps are dropped).
pub fn fit_order(steps: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skipped_samples_are_excluded_from_norms() {
        let t = [0.0, 0.5, 1.0];
        let r = ResidualReport::scalar("demo", &t, &[1.0, 100.0, -2.0], &[false, true, false]);
        assert_eq!(r.skipped, 1);
        assert_eq!(r.samples.len(), 2);
        assert_eq!(r.max_abs, 2.0);
        assert!((r.l2 - (2.5f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let r = ResidualReport::new("v", &[0.0, 1.0], vec![vec![1.0, 2.0], vec![0.5, -0.25]], &[]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,r1,r2\n0.0,1.0,2.0\n1.0,0.5,-0.25\n");
    }

    #[test]
    fn order_of_a_power_law() {
        let steps = [0.1, 0.05, 0.025];
        let errs: Vec<f64> = steps.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        let p = fit_order(&steps, &errs).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
        assert_eq!(fit_order(&[0.1], &[1.0]), None);
        assert_eq!(fit_order(&[0.1, 0.05], &[0.0, 0.0]), None);
    }
}
