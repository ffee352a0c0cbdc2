//! Pointwise residuals of the necessary optimality conditions.
//!
//! Every check works on sampled data. Time derivatives of sampled
//! quantities use three-point stencils (central in the interior, one-sided
//! second order at the ends), so residuals of an exact extremal shrink like
//! `h²`. Samples within one mesh interval of a breakpoint are skipped.

use crate::error::{Error, Result};
use crate::problem::{dot, HerglotzProblem, Jet, Multipliers, Trajectory};
use crate::report::ResidualReport;

/// Minimum number of mesh intervals for derivative-based residuals.
pub const MIN_INTERVALS: usize = 4;

/// Second-order derivative of samples `y` on the (possibly non-uniform) mesh `t`.
pub fn sample_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let m = t.len();
    assert!(m >= 3 && y.len() == m, "need at least three samples");
    // differenced form, so constants give exactly zero
    let mut d = Vec::with_capacity(m);
    {
        let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
        let s = h1 + h2;
        d.push(s / (h1 * h2) * (y[1] - y[0]) - h1 / (h2 * s) * (y[2] - y[0]));
    }
    for k in 1..m - 1 {
        let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        let s = h1 + h2;
        d.push(h1 / (h2 * s) * (y[k + 1] - y[k]) + h2 / (h1 * s) * (y[k] - y[k - 1]));
    }
    {
        let (h1, h2) = (t[m - 2] - t[m - 3], t[m - 1] - t[m - 2]);
        let s = h1 + h2;
        d.push((h1 + 2.0 * h2) / (h2 * s) * (y[m - 1] - y[m - 2]) + h2 / (h1 * s) * (y[m - 3] - y[m - 2]));
    }
    d
}

/// Accelerations from differencing the sampled velocities, row-major.
pub fn sampled_acceleration(traj: &Trajectory) -> Vec<Vec<f64>> {
    let n = traj.dim();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| sample_derivative(traj.times(), &traj.v_component(i)))
        .collect();
    (0..traj.len()).map(|k| cols.iter().map(|c| c[k]).collect()).collect()
}

fn require_mesh(traj: &Trajectory) -> Result<()> {
    if traj.len() < MIN_INTERVALS + 1 {
        return Err(Error::MeshTooCoarse {
            samples: traj.len(),
            required: MIN_INTERVALS + 1,
        });
    }
    Ok(())
}

fn require_multipliers(traj: &Trajectory, mult: &Multipliers) -> Result<()> {
    if mult.len() != traj.len() {
        return Err(Error::InvalidMesh(format!(
            "multipliers have {} samples, trajectory has {}",
            mult.len(),
            traj.len()
        )));
    }
    Ok(())
}

fn jets(p: &HerglotzProblem, traj: &Trajectory) -> Result<Vec<Jet>> {
    (0..traj.len()).map(|k| p.jet_env(&traj.env(k))).collect()
}

fn euler_lagrange(p: &HerglotzProblem, traj: &Trajectory, coupling: bool, name: &str) -> Result<ResidualReport> {
    p.check_trajectory(traj)?;
    require_mesh(traj)?;
    let n = p.dim();
    let acc = sampled_acceleration(traj);
    let mut values = Vec::with_capacity(traj.len());
    for (k, acc_k) in acc.iter().enumerate() {
        let env = traj.env(k);
        let jet = p.jet_env(&env)?;
        let vj = p.velocity_jet_env(&env)?;
        let v = traj.v(k);
        let row = (0..n)
            .map(|i| {
                // chain-rule expansion of d/dt ∂L/∂ẋ_i with ż = L
                let mut ddt = vj.l_tv[i];
                for j in 0..n {
                    ddt += vj.l_xv[i][j] * v[j] + vj.l_vv[i][j] * acc_k[j];
                }
                ddt += vj.l_zv[i] * jet.l;
                let mut r = jet.l_x[i] - ddt;
                if coupling {
                    r += jet.l_z * jet.l_v[i];
                }
                r
            })
            .collect();
        values.push(row);
    }
    Ok(ResidualReport::new(name, traj.times(), values, &traj.skip_mask()))
}

/// Generalized Euler-Lagrange residual `∂L/∂x − d/dt ∂L/∂ẋ + ∂L/∂z ∂L/∂ẋ`.
pub fn el_residual(p: &HerglotzProblem, traj: &Trajectory) -> Result<ResidualReport> {
    euler_lagrange(p, traj, true, "el")
}

/// Classical residual `∂L/∂x − d/dt ∂L/∂ẋ`, only for z-free Lagrangians.
pub fn classical_el_residual(p: &HerglotzProblem, traj: &Trajectory) -> Result<ResidualReport> {
    if !p.is_classical() {
        return Err(Error::NotClassical);
    }
    euler_lagrange(p, traj, false, "classical-el")
}

/// Max-norm of `∂L/∂ẋ` at `t = b`.
pub fn transversality_residual(p: &HerglotzProblem, traj: &Trajectory) -> Result<f64> {
    p.check_trajectory(traj)?;
    let jet = p.jet_env(&traj.env(traj.len() - 1))?;
    Ok(jet.l_v.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// The sampled bracket `ψ_z (L − ∂L/∂ẋ·ẋ)`.
pub fn dubois_reymond_bracket(p: &HerglotzProblem, traj: &Trajectory, mult: &Multipliers) -> Result<Vec<f64>> {
    p.check_trajectory(traj)?;
    require_multipliers(traj, mult)?;
    let jets = jets(p, traj)?;
    Ok(jets
        .iter()
        .enumerate()
        .map(|(k, j)| mult.psi_z()[k] * (j.l - dot(&j.l_v, traj.v(k))))
        .collect())
}

/// `d/dt [ψ_z (L − ∂L/∂ẋ·ẋ)] − ψ_z ∂L/∂t`, the derivative by differencing.
pub fn dubois_reymond_residual(p: &HerglotzProblem, traj: &Trajectory, mult: &Multipliers) -> Result<ResidualReport> {
    require_mesh(traj)?;
    let bracket = dubois_reymond_bracket(p, traj, mult)?;
    let d = sample_derivative(traj.times(), &bracket);
    let jets = jets(p, traj)?;
    let values: Vec<f64> = (0..traj.len()).map(|k| d[k] - mult.psi_z()[k] * jets[k].l_t).collect();
    Ok(ResidualReport::scalar(
        "dubois-reymond",
        traj.times(),
        &values,
        &traj.skip_mask(),
    ))
}

/// Pontryagin conditions of the optimal-control form, in order:
/// optimality `ψ_x + ψ_z ∂L/∂ẋ`, adjoint defects `ψ̇_x + ψ_z ∂L/∂x` and
/// `ψ̇_z + ψ_z ∂L/∂z`, and the endpoint defects `ψ_x(b)`, `ψ_z(b) − 1`.
pub fn pmp_residuals(p: &HerglotzProblem, traj: &Trajectory, mult: &Multipliers) -> Result<Vec<ResidualReport>> {
    p.check_trajectory(traj)?;
    require_mesh(traj)?;
    require_multipliers(traj, mult)?;
    let n = p.dim();
    let oc = p.oc_form();
    let t = traj.times();
    let skip = traj.skip_mask();
    let jets = jets(p, traj)?;
    let psi_z = mult.psi_z();

    let optimality: Vec<Vec<f64>> = (0..traj.len())
        .map(|k| oc.dh_du(&jets[k], mult.psi_x(k), psi_z[k]))
        .collect();

    let dpsi_x: Vec<Vec<f64>> = (0..n).map(|i| sample_derivative(t, &mult.psi_x_component(i))).collect();
    let adjoint_x: Vec<Vec<f64>> = (0..traj.len())
        .map(|k| {
            let dh = oc.dh_dx(&jets[k], psi_z[k]);
            (0..n).map(|i| dpsi_x[i][k] + dh[i]).collect()
        })
        .collect();

    let dpsi_z = sample_derivative(t, psi_z);
    let adjoint_z: Vec<f64> = (0..traj.len())
        .map(|k| dpsi_z[k] + oc.dh_dz(&jets[k], psi_z[k]))
        .collect();

    let last = traj.len() - 1;
    let mut endpoint = mult.psi_x(last).to_vec();
    endpoint.push(psi_z[last] - 1.0);

    Ok(vec![
        ResidualReport::new("pmp-optimality", t, optimality, &skip),
        ResidualReport::new("pmp-adjoint-x", t, adjoint_x, &skip),
        ResidualReport::scalar("pmp-adjoint-z", t, &adjoint_z, &skip),
        ResidualReport::new("pmp-endpoints", &t[last..], vec![endpoint], &[]),
    ])
}

/// `H_k = ψ_x·ẋ + ψ_z L` along the trajectory.
pub fn hamiltonian(p: &HerglotzProblem, traj: &Trajectory, mult: &Multipliers) -> Result<Vec<f64>> {
    p.check_trajectory(traj)?;
    require_multipliers(traj, mult)?;
    let oc = p.oc_form();
    (0..traj.len())
        .map(|k| {
            oc.hamiltonian(
                traj.times()[k],
                traj.x(k),
                traj.v(k),
                traj.z(k),
                mult.psi_x(k),
                mult.psi_z()[k],
            )
        })
        .collect()
}

/// Total variation `Σ |q_{k+1} − q_k|` of a sampled function.
pub fn total_variation(q: &[f64]) -> f64 {
    q.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::{shoot, ShootingOptions};
    use crate::integrate::compute_psi_z;

    fn problem(l: &str) -> HerglotzProblem {
        HerglotzProblem::from_source(1, 0.0, 1.0, l, vec![1.0], 0.0).unwrap()
    }

    fn grav_extremal(steps: usize) -> Trajectory {
        Trajectory::from_fn(1, 0.0, 1.0, steps, |t| {
            (
                vec![1.0 + t - t * t / 2.0],
                vec![1.0 - t],
                -t / 2.0 - t * t + t.powi(3) / 3.0,
            )
        })
        .unwrap()
    }

    /// x(t) = e^{-0.05t}(cos ωt + B sin ωt) with x(0) = 1, ẋ(0) = v0.
    fn damped(t: f64, v0: f64) -> (f64, f64) {
        let w = (1.0f64 - 0.0025).sqrt();
        let b = (v0 + 0.05) / w;
        let e = (-0.05 * t).exp();
        let (s, c) = (w * t).sin_cos();
        let x = e * (c + b * s);
        let v = e * (-0.05 * (c + b * s) + w * (-s + b * c));
        (x, v)
    }

    #[test]
    fn stencils_are_exact_on_quadratics() {
        let t = [0.0, 0.1, 0.3, 0.35, 0.6];
        let y: Vec<f64> = t.iter().map(|t| 3.0 * t * t - t + 2.0).collect();
        for (k, d) in sample_derivative(&t, &y).iter().enumerate() {
            assert!((d - (6.0 * t[k] - 1.0)).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn el_on_analytic_grav_extremal() {
        let r = el_residual(&problem("dx1^2/2 - x1"), &grav_extremal(1000)).unwrap();
        assert!(r.max_abs <= 1e-6, "{}", r.max_abs);
    }

    #[test]
    fn el_detects_non_extremal() {
        let traj = Trajectory::from_fn(1, 0.0, 1.0, 1000, |t| (vec![1.0], vec![0.0], -t)).unwrap();
        let r = el_residual(&problem("dx1^2/2 - x1"), &traj).unwrap();
        assert!((r.max_abs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn el_on_closed_form_damped_oscillator() {
        let p = problem("dx1^2/2 - x1^2/2 - 0.1*z");
        let v0 = shoot(&p, &[0.0], &ShootingOptions::default()).unwrap().v_star[0];
        // z is only needed for admissibility; the EL residual ignores it here
        let traj = Trajectory::from_fn(1, 0.0, 1.0, 1000, |t| {
            let (x, v) = damped(t, v0);
            (vec![x], vec![v], 0.0)
        })
        .unwrap();
        let r = el_residual(&p, &traj).unwrap();
        assert!(r.max_abs <= 1e-6, "{}", r.max_abs);
    }

    #[test]
    fn classical_reduction() {
        let p = problem("dx1^2/2");
        let rest = Trajectory::from_fn(1, 0.0, 1.0, 100, |_| (vec![1.0], vec![0.0], 0.0)).unwrap();
        assert_eq!(classical_el_residual(&p, &rest).unwrap().max_abs, 0.0);

        let grav = problem("dx1^2/2 - x1");
        let traj = grav_extremal(1000);
        let gen = el_residual(&grav, &traj).unwrap();
        let cls = classical_el_residual(&grav, &traj).unwrap();
        assert!(cls.max_abs <= 1e-6);
        for (a, b) in gen.samples.iter().zip(&cls.samples) {
            assert!((a.r[0] - b.r[0]).abs() <= 1e-14);
        }
        assert!(matches!(
            classical_el_residual(&problem("dx1^2/2 - z"), &rest),
            Err(Error::NotClassical)
        ));
    }

    #[test]
    fn transversality_values() {
        let p = problem("dx1^2/2 - x1");
        assert!(transversality_residual(&p, &grav_extremal(1000)).unwrap() <= 1e-8);
        let line = Trajectory::from_fn(1, 0.0, 1.0, 10, |t| (vec![1.0 + t], vec![1.0], 0.0)).unwrap();
        assert_eq!(transversality_residual(&p, &line).unwrap(), 1.0);
    }

    #[test]
    fn dubois_reymond_on_grav() {
        let p = problem("dx1^2/2 - x1");
        let traj = grav_extremal(1000);
        let mult = compute_psi_z(&p, &traj).unwrap();
        let bracket = dubois_reymond_bracket(&p, &traj, &mult).unwrap();
        assert!(bracket.iter().all(|b| (b + 1.5).abs() < 1e-12));
        let r = dubois_reymond_residual(&p, &traj, &mult).unwrap();
        assert!(r.max_abs <= 1e-6);
        let h = hamiltonian(&p, &traj, &mult).unwrap();
        assert!(h.iter().all(|h| (h + 1.5).abs() < 1e-12));
    }

    #[test]
    fn pmp_on_grav() {
        let p = problem("dx1^2/2 - x1");
        let traj = grav_extremal(1000);
        let mult = compute_psi_z(&p, &traj).unwrap();
        for (k, &t) in traj.times().iter().enumerate() {
            assert!((mult.psi_x(k)[0] - (t - 1.0)).abs() < 1e-15);
        }
        let reports = pmp_residuals(&p, &traj, &mult).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            ["pmp-optimality", "pmp-adjoint-x", "pmp-adjoint-z", "pmp-endpoints"]
        );
        for r in &reports {
            assert!(r.max_abs <= 1e-8, "{}: {}", r.name, r.max_abs);
        }
    }

    #[test]
    fn free_extremal_is_exact() {
        let p = problem("dx1^2/2");
        let traj = Trajectory::from_fn(1, 0.0, 1.0, 100, |_| (vec![1.0], vec![0.0], 0.0)).unwrap();
        let mult = compute_psi_z(&p, &traj).unwrap();
        assert_eq!(dubois_reymond_residual(&p, &traj, &mult).unwrap().max_abs, 0.0);
        for r in pmp_residuals(&p, &traj, &mult).unwrap() {
            assert_eq!(r.max_abs, 0.0, "{}", r.name);
        }
        assert!(hamiltonian(&p, &traj, &mult).unwrap().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn coarse_mesh_is_rejected() {
        let p = problem("dx1^2/2");
        let traj = Trajectory::from_fn(1, 0.0, 1.0, 3, |_| (vec![1.0], vec![0.0], 0.0)).unwrap();
        assert!(matches!(el_residual(&p, &traj), Err(Error::MeshTooCoarse { .. })));
        let mult = compute_psi_z(&p, &traj).unwrap();
        assert!(matches!(
            dubois_reymond_residual(&p, &traj, &mult),
            Err(Error::MeshTooCoarse { .. })
        ));
        assert!(matches!(
            pmp_residuals(&p, &traj, &mult),
            Err(Error::MeshTooCoarse { .. })
        ));
    }

    #[test]
    fn breakpoint_windows_are_skipped() {
        // broken extremal of the free particle: a corner at t = 0.5
        let p = problem("dx1^2/2");
        let t = crate::integrate::uniform_mesh(0.0, 1.0, 20);
        let x: Vec<f64> = t.iter().map(|&t| if t <= 0.5 { t } else { 1.0 - t }).collect();
        let v: Vec<f64> = t.iter().map(|&t| if t <= 0.5 { 1.0 } else { -1.0 }).collect();
        let z: Vec<f64> = t.iter().map(|&t| t / 2.0).collect();
        let traj = Trajectory::new(1, t, x, v, z, vec![10]).unwrap();
        let r = el_residual(&p, &traj).unwrap();
        assert_eq!(r.skipped, 3);
        assert_eq!(r.max_abs, 0.0);
    }
}
