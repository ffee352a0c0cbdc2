//! Problem files and trajectory CSV.
//!
//! A problem file is JSON:
//!
//! ```json
//! { "n": 1, "interval": [0.0, 1.0], "lagrangian": "dx1^2/2 - x1",
//!   "alpha": [1.0], "gamma": 0.0,
//!   "families": [ { "name": "time-shift", "T": "t + s", "X": ["x1"], "Z": "z",
//!                   "expect_invariant": true } ] }
//! ```
//!
//! Trajectory CSV starts with the columns `t,x1..xn,dx1..dxn,z`. Extra
//! trailing columns (such as the multipliers written by the solver) are
//! ignored on input.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noether::TransformationFamily;
use crate::problem::{HerglotzProblem, Multipliers, Trajectory};

/// Shortest decimal that round-trips to the same `f64`, with a `.` decimal
/// point regardless of locale.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    #[serde(rename = "T")]
    pub t: String,
    #[serde(rename = "X")]
    pub x: Vec<String>,
    #[serde(rename = "Z")]
    pub z: String,
    /// Whether the problem is known to be invariant under this family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_invariant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub interval: [f64; 2],
    pub lagrangian: String,
    pub alpha: Vec<f64>,
    pub gamma: f64,
    #[serde(default)]
    pub families: Vec<FamilySpec>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn problem(&self) -> Result<HerglotzProblem> {
        HerglotzProblem::from_source(
            self.n,
            self.interval[0],
            self.interval[1],
            &self.lagrangian,
            self.alpha.clone(),
            self.gamma,
        )
    }

    pub fn family(&self, p: &HerglotzProblem, name: &str) -> Result<(TransformationFamily, Option<bool>)> {
        let spec = self
            .families
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::InvalidFamily {
                family: name.into(),
                reason: "not declared in the problem file".into(),
            })?;
        let fam = TransformationFamily::from_source(p, &spec.name, &spec.t, &spec.x, &spec.z)?;
        Ok((fam, spec.expect_invariant))
    }

    /// All declared families, in file order.
    pub fn all_families(&self, p: &HerglotzProblem) -> Result<Vec<(TransformationFamily, Option<bool>)>> {
        self.families.iter().map(|f| self.family(p, &f.name)).collect()
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidMesh(msg.into())
}

/// Reads a trajectory with columns `t,x1..xn,dx1..dxn,z`.
pub fn read_trajectory<R: Read>(n: usize, input: R) -> Result<Trajectory> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .chain((1..=n).map(|i| format!("dx{i}")))
        .chain(std::iter::once("z".to_string()))
        .collect();
    let headers = rdr.headers()?.clone();
    let found: Vec<&str> = headers.iter().take(expected.len()).collect();
    if found != expected {
        return Err(bad(format!(
            "trajectory header must start with `{}`, found `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut t, mut x, mut v, mut z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut vals = Vec::with_capacity(expected.len());
        for (col, field) in record.iter().take(expected.len()).enumerate() {
            let val: f64 = field.parse().map_err(|_| {
                bad(format!(
                    "row {}: `{field}` in column `{}` is not a number",
                    row + 2,
                    expected[col]
                ))
            })?;
            vals.push(val);
        }
        if vals.len() != expected.len() {
            return Err(bad(format!("row {}: expected {} columns", row + 2, expected.len())));
        }
        t.push(vals[0]);
        x.extend_from_slice(&vals[1..=n]);
        v.extend_from_slice(&vals[n + 1..=2 * n]);
        z.push(vals[2 * n + 1]);
    }
    Trajectory::new(n, t, x, v, z, Vec::new())
}

pub fn load_trajectory(n: usize, path: &Path) -> Result<Trajectory> {
    read_trajectory(n, fs::File::open(path)?)
}

/// Writes `t,x1..xn,dx1..dxn,z` and, when given, `psi_z,psi_x1..psi_xn`.
pub fn write_trajectory<W: Write>(mut out: W, traj: &Trajectory, mult: Option<&Multipliers>) -> Result<()> {
    let n = traj.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("dx{i}")));
    header.push("z".into());
    if mult.is_some() {
        header.push("psi_z".into());
        header.extend((1..=n).map(|i| format!("psi_x{i}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for k in 0..traj.len() {
        let mut row: Vec<f64> = vec![traj.times()[k]];
        row.extend_from_slice(traj.x(k));
        row.extend_from_slice(traj.v(k));
        row.push(traj.z(k));
        if let Some(m) = mult {
            row.push(m.psi_z()[k]);
            row.extend_from_slice(m.psi_x(k));
        }
        let line: Vec<String> = row.into_iter().map(fmt_f64).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes named columns of equal length as CSV.
pub fn write_columns<W: Write>(mut out: W, columns: &[(&str, &[f64])]) -> Result<()> {
    let names: Vec<&str> = columns.iter().map(|c| c.0).collect();
    writeln!(out, "{}", names.join(","))?;
    let rows = columns.first().map_or(0, |c| c.1.len());
    for k in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_f64(c.1[k])).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRAV: &str = r#"{ "n": 1, "interval": [0.0, 1.0], "lagrangian": "dx1^2/2 - x1",
        "alpha": [1.0], "gamma": 0.0,
        "families": [ { "name": "time-shift", "T": "t + s", "X": ["x1"], "Z": "z", "expect_invariant": true },
                      { "name": "space", "T": "t", "X": ["x1 + s"], "Z": "z" } ] }"#;

    #[test]
    fn problem_file_roundtrip() {
        let f = ProblemFile::from_json(GRAV).unwrap();
        assert_eq!(f.families.len(), 2);
        assert_eq!(f.families[0].expect_invariant, Some(true));
        assert_eq!(f.families[1].expect_invariant, None);
        let p = f.problem().unwrap();
        assert_eq!(p.interval(), (0.0, 1.0));
        assert_eq!(f.all_families(&p).unwrap().len(), 2);
        assert!(f.family(&p, "missing").is_err());
        let back = ProblemFile::from_json(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn families_are_optional() {
        let f =
            ProblemFile::from_json(r#"{"n":1,"interval":[0,1],"lagrangian":"dx1^2","alpha":[0],"gamma":0}"#).unwrap();
        assert!(f.families.is_empty());
        assert!(ProblemFile::from_json(r#"{"n":1}"#).is_err());
        assert!(ProblemFile::from_json(
            r#"{"n":1,"interval":[0,1],"lagrangian":"dx1^2","alpha":[0],"gamma":0,"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn trajectory_csv_roundtrip() {
        let traj = Trajectory::from_fn(2, 0.0, 1.0, 4, |t| (vec![t, 0.1 + t], vec![1.0, 1.0 / 3.0], -t)).unwrap();
        let mult = Multipliers::new(2, vec![0.5; 10], vec![1.0; 5]).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj, Some(&mult)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "t,x1,x2,dx1,dx2,z,psi_z,psi_x1,psi_x2\n0.0,0.0,0.1,1.0,0.3333333333333333,-0.0,1.0,0.5,0.5\n"
        ));
        let back = read_trajectory(2, buf.as_slice()).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn trajectory_csv_errors() {
        assert!(read_trajectory(1, "t,x1,z\n0,1,0\n".as_bytes()).is_err());
        assert!(read_trajectory(1, "t,x1,dx1,z\n0,1,0,0\n0.5,oops,0,0\n".as_bytes()).is_err());
        assert!(read_trajectory(1, "t,x1,dx1,z\n0,1,0,0\n0,1,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn float_format_is_round_trip() {
        for v in [0.1, -7.0 / 6.0, 1e-300, 12345.678, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(2.0), "2.0");
    }
}
