use anyhow::{Context, Result};
use herglotz::conditions::{classical_el_residual, dubois_reymond_residual, el_residual, pmp_residuals};
use herglotz::problem::admissibility_residual;
use herglotz::{HerglotzProblem, Multipliers, ResidualReport, Trajectory};
use serde::Serialize;

use crate::common::{create_file, create_out_dir, emit, load_problem, obtain_trajectory, Obtained, Outcome, Source};
use crate::CheckArgs;

#[derive(Debug, Serialize)]
struct Flags {
    problem: String,
    steps: usize,
    tol: f64,
    newton_tol: f64,
    guess: Option<Vec<f64>>,
    traj: Option<String>,
    out: String,
    json: bool,
}

#[derive(Debug, Serialize)]
struct Entry {
    name: String,
    max_abs: f64,
    l2: f64,
    skipped: usize,
    threshold: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct Checks {
    version: &'static str,
    flags: Flags,
    source: Option<Source>,
    conditions: Vec<Entry>,
    pass: bool,
    error: Option<String>,
}

fn transversality_report(p: &HerglotzProblem, traj: &Trajectory) -> Result<ResidualReport> {
    let k = traj.len() - 1;
    let t = traj.times()[k];
    let jet = p.jet(t, traj.x(k), traj.v(k), traj.z(k))?;
    Ok(ResidualReport::new("transversality", &[t], vec![jet.l_v], &[]))
}

fn reports(p: &HerglotzProblem, traj: &Trajectory, mult: &Multipliers) -> Result<Vec<ResidualReport>> {
    let mut out = vec![el_residual(p, traj)?];
    if p.is_classical() {
        out.push(classical_el_residual(p, traj)?);
    }
    out.push(transversality_report(p, traj)?);
    out.push(dubois_reymond_residual(p, traj, mult)?);
    out.extend(pmp_residuals(p, traj, mult)?);
    Ok(out)
}

pub fn run(args: &CheckArgs) -> Result<Outcome> {
    let common = &args.common;
    let (_, p) = load_problem(&common.problem)?;
    let flags = Flags {
        problem: common.problem.display().to_string(),
        steps: common.steps,
        tol: args.tol,
        newton_tol: args.newton_tol,
        guess: common.guess.clone(),
        traj: args.traj.as_ref().map(|t| t.display().to_string()),
        out: common.out.display().to_string(),
        json: common.json,
    };
    let obtained = obtain_trajectory(common, &p, args.traj.as_deref(), args.newton_tol)?;
    create_out_dir(&common.out)?;
    let (source, traj, mult) = match obtained {
        Obtained::Pair {
            source,
            trajectory,
            multipliers,
        } => (source, trajectory, multipliers),
        Obtained::Failed(reason) => {
            let doc = Checks {
                version: herglotz::VERSION,
                flags,
                source: None,
                conditions: Vec::new(),
                pass: false,
                error: Some(reason.clone()),
            };
            crate::common::write_json(&common.out.join("checks.json"), &doc)?;
            eprintln!("{reason}");
            emit(common.json, &doc, &["not converged".to_string()])?;
            return Ok(Outcome::NotConverged);
        }
    };

    let adm = admissibility_residual(&p, &traj).context("admissibility")?;
    adm.dynamics
        .write_csv(create_file(&common.out.join("admissibility.csv"))?)?;
    let mut entries = vec![Entry {
        name: "admissibility".into(),
        max_abs: adm.max_abs(),
        l2: adm.dynamics.l2,
        skipped: adm.dynamics.skipped,
        threshold: adm.tolerance,
        pass: adm.admissible,
    }];
    for r in reports(&p, &traj, &mult).context("evaluating conditions")? {
        r.write_csv(create_file(&common.out.join(format!("{}.csv", r.name)))?)?;
        entries.push(Entry {
            pass: r.passes(args.tol),
            name: r.name,
            max_abs: r.max_abs,
            l2: r.l2,
            skipped: r.skipped,
            threshold: args.tol,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    let lines: Vec<String> = entries
        .iter()
        .map(|e| {
            format!(
                "{:<16} max_abs = {:<24e} {}",
                e.name,
                e.max_abs,
                if e.pass { "PASS" } else { "FAIL" }
            )
        })
        .collect();
    let doc = Checks {
        version: herglotz::VERSION,
        flags,
        source: Some(source),
        conditions: entries,
        pass,
        error: None,
    };
    crate::common::write_json(&common.out.join("checks.json"), &doc)?;
    emit(common.json, &doc, &lines)?;
    Ok(if pass {
        Outcome::Success
    } else {
        Outcome::ConditionFailed
    })
}
