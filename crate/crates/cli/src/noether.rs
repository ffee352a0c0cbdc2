use anyhow::{bail, Context, Result};
use herglotz::io::write_columns;
use herglotz::noether::{analyze_family, generators, FamilyReport, DEFAULT_S_VALUES};
use serde::Serialize;

use crate::common::{
    create_file, create_out_dir, emit, load_problem, obtain_trajectory, slug, write_json, Obtained, Outcome, Source,
};
use crate::NoetherArgs;

#[derive(Debug, Serialize)]
struct Flags {
    problem: String,
    family: Vec<String>,
    all: bool,
    steps: usize,
    tol: f64,
    newton_tol: f64,
    guess: Option<Vec<f64>>,
    traj: Option<String>,
    out: String,
    json: bool,
    s_values: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct NoetherDoc {
    version: &'static str,
    flags: Flags,
    source: Option<Source>,
    families: Vec<FamilyReport>,
    pass: bool,
    error: Option<String>,
}

fn summary(r: &FamilyReport) -> String {
    let expected = match r.expect_invariant {
        Some(true) => "expected invariant",
        Some(false) => "expected non-invariant",
        None => "no expectation",
    };
    if let Some(err) = &r.error {
        return format!("{:<20} error: {err} ({expected})", r.family);
    }
    let dev = r
        .constancy
        .map_or_else(|| "n/a".to_string(), |c| format!("{:e}", c.max_deviation));
    format!(
        "{:<20} {:<13} xi = {:<12} deviation = {:<24} {} ({expected})",
        r.family,
        if r.invariant { "invariant" } else { "not invariant" },
        r.xi.map_or_else(|| "undefined".to_string(), |x| format!("{x:e}")),
        dev,
        if r.conserved { "conserved" } else { "not conserved" },
    )
}

pub fn run(args: &NoetherArgs) -> Result<Outcome> {
    let common = &args.common;
    let (file, p) = load_problem(&common.problem)?;
    let selected = if args.all {
        if file.families.is_empty() {
            bail!("{} declares no families", common.problem.display());
        }
        file.all_families(&p)
    } else {
        args.family.iter().map(|name| file.family(&p, name)).collect()
    }
    .context("building transformation families")?;

    let flags = Flags {
        problem: common.problem.display().to_string(),
        family: args.family.clone(),
        all: args.all,
        steps: common.steps,
        tol: args.tol,
        newton_tol: args.newton_tol,
        guess: common.guess.clone(),
        traj: args.traj.as_ref().map(|t| t.display().to_string()),
        out: common.out.display().to_string(),
        json: common.json,
        s_values: DEFAULT_S_VALUES.to_vec(),
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
            let doc = NoetherDoc {
                version: herglotz::VERSION,
                flags,
                source: None,
                families: Vec::new(),
                pass: false,
                error: Some(reason.clone()),
            };
            write_json(&common.out.join("noether.json"), &doc)?;
            eprintln!("{reason}");
            emit(common.json, &doc, &["not converged".to_string()])?;
            return Ok(Outcome::NotConverged);
        }
    };

    let mut reports = Vec::with_capacity(selected.len());
    for (fam, expect) in &selected {
        let report = analyze_family(&p, fam, *expect, &traj, &mult, &DEFAULT_S_VALUES, args.tol)
            .with_context(|| format!("family `{}`", fam.name()))?;
        if let (Ok(gen), Some(q)) = (generators(&p, fam, &traj), &report.quantity) {
            let mut columns: Vec<(String, &[f64])> = vec![("t".into(), traj.times()), ("T".into(), &gen.t)];
            let x_cols: Vec<Vec<f64>> = (0..p.dim()).map(|i| gen.x.iter().map(|x| x[i]).collect()).collect();
            for (i, col) in x_cols.iter().enumerate() {
                columns.push((format!("X{}", i + 1), col));
            }
            columns.push(("Z".into(), &gen.z));
            columns.push(("quantity".into(), q));
            if let Some(g) = &report.georgieva {
                columns.push(("georgieva".into(), &g.samples));
            }
            let named: Vec<(&str, &[f64])> = columns.iter().map(|(n, c)| (n.as_str(), *c)).collect();
            write_columns(
                create_file(&common.out.join(format!("noether-{}.csv", slug(fam.name()))))?,
                &named,
            )?;
        }
        reports.push(report);
    }

    let pass = reports.iter().all(|r| r.expect_invariant != Some(true) || r.passes());
    let lines: Vec<String> = reports.iter().map(summary).collect();
    let doc = NoetherDoc {
        version: herglotz::VERSION,
        flags,
        source: Some(source),
        families: reports,
        pass,
        error: None,
    };
    write_json(&common.out.join("noether.json"), &doc)?;
    emit(common.json, &doc, &lines)?;
    Ok(if pass { Outcome::Success } else { Outcome::NotInvariant })
}
