use anyhow::Result;
use herglotz::io::write_trajectory;
use herglotz::ShootingOptions;
use serde::Serialize;

use crate::common::{create_file, create_out_dir, emit, guess, load_problem, run_shooting, write_json, Outcome, Shot};
use crate::SolveArgs;

#[derive(Debug, Serialize)]
struct Solution {
    version: &'static str,
    converged: bool,
    v_star: Vec<f64>,
    z_b: f64,
    transversality_norm: f64,
    iterations: usize,
    steps: usize,
    tol: f64,
}

#[derive(Debug, Serialize)]
struct Failure<'a> {
    version: &'static str,
    converged: bool,
    reason: &'a str,
}

pub fn run(args: &SolveArgs) -> Result<Outcome> {
    let common = &args.common;
    let (_, p) = load_problem(&common.problem)?;
    let opts = ShootingOptions {
        steps: common.steps,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let v0 = guess(common, &p)?;
    create_out_dir(&common.out)?;
    match run_shooting(&p, &v0, &opts)? {
        Shot::Done(r) => {
            write_trajectory(
                create_file(&common.out.join("trajectory.csv"))?,
                &r.trajectory,
                Some(&r.multipliers),
            )?;
            let sol = Solution {
                version: herglotz::VERSION,
                converged: true,
                v_star: r.v_star.clone(),
                z_b: r.z_b(),
                transversality_norm: r.transversality_norm,
                iterations: r.iterations,
                steps: opts.steps,
                tol: opts.tol,
            };
            write_json(&common.out.join("solution.json"), &sol)?;
            emit(
                common.json,
                &sol,
                &[
                    format!("converged in {} iterations", r.iterations),
                    format!("v* = {:?}", r.v_star),
                    format!("z(b) = {:?}", r.z_b()),
                    format!("|dL/ddx(b)| = {:e}", r.transversality_norm),
                ],
            )?;
            Ok(Outcome::Success)
        }
        Shot::Failed(reason) => {
            let doc = Failure {
                version: herglotz::VERSION,
                converged: false,
                reason: &reason,
            };
            write_json(&common.out.join("solution.json"), &doc)?;
            eprintln!("{reason}");
            emit(common.json, &doc, &["not converged".to_string()])?;
            Ok(Outcome::NotConverged)
        }
    }
}
