use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use herglotz::io::{load_trajectory, ProblemFile};
use herglotz::{
    compute_psi_z, shoot, Error, HerglotzProblem, Multipliers, ShootingOptions, ShootingResult, Trajectory,
};
use serde::Serialize;

use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    InputError,
    NotConverged,
    ConditionFailed,
    NotInvariant,
}

impl Outcome {
    pub fn code(self) -> ExitCode {
        ExitCode::from(match self {
            Outcome::Success => 0,
            Outcome::InputError => 1,
            Outcome::NotConverged => 2,
            Outcome::ConditionFailed => 3,
            Outcome::NotInvariant => 4,
        })
    }
}

pub fn load_problem(path: &Path) -> Result<(ProblemFile, HerglotzProblem)> {
    let file = ProblemFile::load(path).with_context(|| format!("reading problem file {}", path.display()))?;
    let problem = file
        .problem()
        .with_context(|| format!("in problem file {}", path.display()))?;
    Ok((file, problem))
}

pub fn guess(common: &Common, p: &HerglotzProblem) -> Result<Vec<f64>> {
    match &common.guess {
        None => Ok(vec![0.0; p.dim()]),
        Some(g) if g.len() == p.dim() => Ok(g.clone()),
        Some(g) => bail!("--guess has {} values, the problem has n = {}", g.len(), p.dim()),
    }
}

/// Solver failures that map to exit code 2.
pub fn is_solver_failure(err: &Error) -> bool {
    matches!(
        err,
        Error::NewtonDiverged { .. } | Error::SingularJacobian { .. } | Error::NonFinite { .. }
    )
}

pub enum Shot {
    Done(Box<ShootingResult>),
    Failed(String),
}

pub fn run_shooting(p: &HerglotzProblem, v0: &[f64], opts: &ShootingOptions) -> Result<Shot> {
    match shoot(p, v0, opts) {
        Ok(r) if r.converged => Ok(Shot::Done(Box::new(r))),
        Ok(r) => {
            let log: Vec<String> = r.history.iter().map(|h| format!("{h:e}")).collect();
            Ok(Shot::Failed(format!(
                "Newton did not converge in {} iterations; residual history: [{}]",
                r.iterations,
                log.join(", ")
            )))
        }
        Err(e) if is_solver_failure(&e) => Ok(Shot::Failed(e.to_string())),
        Err(e) => Err(e).context("shooting"),
    }
}

/// Where the trajectory under test comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Solve,
    File,
}

pub enum Obtained {
    Pair {
        source: Source,
        trajectory: Trajectory,
        multipliers: Multipliers,
    },
    Failed(String),
}

pub fn obtain_trajectory(
    common: &Common,
    p: &HerglotzProblem,
    traj: Option<&Path>,
    newton_tol: f64,
) -> Result<Obtained> {
    if let Some(path) = traj {
        let trajectory =
            load_trajectory(p.dim(), path).with_context(|| format!("reading trajectory {}", path.display()))?;
        p.check_trajectory(&trajectory)
            .with_context(|| format!("trajectory {}", path.display()))?;
        let multipliers = compute_psi_z(p, &trajectory).context("computing multipliers")?;
        return Ok(Obtained::Pair {
            source: Source::File,
            trajectory,
            multipliers,
        });
    }
    let opts = ShootingOptions {
        steps: common.steps,
        tol: newton_tol,
        ..Default::default()
    };
    Ok(match run_shooting(p, &guess(common, p)?, &opts)? {
        Shot::Done(r) => Obtained::Pair {
            source: Source::Solve,
            trajectory: r.trajectory,
            multipliers: r.multipliers,
        },
        Shot::Failed(msg) => Obtained::Failed(msg),
    })
}

pub fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Prints either the JSON document or the text lines.
pub fn emit<T: Serialize>(json: bool, doc: &T, lines: &[String]) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(doc)?);
    } else {
        for line in lines {
            println!("{line}");
        }
    }
    Ok(())
}

/// File-name friendly form of a family name.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
