//! Explicit form of the generalized Euler-Lagrange equation and the
//! shooting solver for the Herglotz boundary-value problem.
//!
//! Expanding `d/dt ∂L/∂ẋ` by the chain rule, with `ż = L` substituted, the
//! equation `∂L/∂x − d/dt ∂L/∂ẋ + ∂L/∂z ∂L/∂ẋ = 0` becomes
//!
//! ```text
//! L_vv ẍ = L_x + L_z L_v − L_tv − L_xv ẋ − L_zv L
//! ```
//!
//! which is solved for `ẍ` whenever the velocity Hessian `L_vv` is
//! invertible. [`shoot`] then integrates from `(α, v, γ)` and adjusts the
//! initial velocity `v` by Newton's method until `∂L/∂ẋ(b) = 0`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Env, EvalError};
use crate::integrate::{compute_psi_z, rk4_ivp};
use crate::problem::{HerglotzProblem, Multipliers, Trajectory};

/// Condition estimate above which the velocity Hessian is treated as singular.
pub const MAX_HESSIAN_CONDITION: f64 = 1e12;

/// The Euler-Lagrange equation solved for the acceleration.
#[derive(Debug, Clone, Copy)]
pub struct ElField<'a> {
    problem: &'a HerglotzProblem,
    coupling: bool,
}

/// Generalized (Herglotz) explicit field.
pub fn el_explicit_form(p: &HerglotzProblem) -> ElField<'_> {
    ElField {
        problem: p,
        coupling: true,
    }
}

/// Classical explicit field `L_vv ẍ = L_x − L_tv − L_xv ẋ`, for z-free Lagrangians.
pub fn classical_el_explicit_form(p: &HerglotzProblem) -> Result<ElField<'_>> {
    if !p.is_classical() {
        return Err(Error::NotClassical);
    }
    Ok(ElField {
        problem: p,
        coupling: false,
    })
}

impl ElField<'_> {
    /// Right-hand side `L_x + L_z L_v − L_tv − L_xv ẋ − L_zv L` (without
    /// coupling terms for the classical field), together with `L` and `L_vv`.
    fn rhs(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Result<(Vec<f64>, f64, Vec<Vec<f64>>)> {
        let p = self.problem;
        let env = Env::point(t, x, v, z);
        let jet = p.jet_env(&env)?;
        let vj = p.velocity_jet_env(&env)?;
        let n = p.dim();
        let rhs = (0..n)
            .map(|i| {
                let mut r = jet.l_x[i] - vj.l_tv[i];
                r -= (0..n).map(|j| vj.l_xv[i][j] * v[j]).sum::<f64>();
                if self.coupling {
                    r += jet.l_z * jet.l_v[i] - vj.l_zv[i] * jet.l;
                }
                r
            })
            .collect();
        Ok((rhs, jet.l, vj.l_vv))
    }

    /// Returns `(ẍ, ż)` at a point.
    pub fn eval(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Result<(Vec<f64>, f64)> {
        let (rhs, l, hess) = self.rhs(t, x, v, z)?;
        let n = rhs.len();
        let irregular = |condition: f64| Error::IrregularLagrangian {
            t,
            x: x.to_vec(),
            dx: v.to_vec(),
            z,
            condition,
        };
        let h = DMatrix::from_fn(n, n, |i, j| hess[i][j]);
        let sv = h.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition.is_nan() || condition > MAX_HESSIAN_CONDITION {
            return Err(irregular(condition));
        }
        let acc = h
            .lu()
            .solve(&DVector::from_vec(rhs))
            .ok_or_else(|| irregular(f64::INFINITY))?;
        Ok((acc.iter().copied().collect(), l))
    }

    /// First-order system on `y = (x, ẋ, z)`.
    pub fn first_order(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.problem.dim();
        let (x, rest) = y.split_at(n);
        let (v, z) = rest.split_at(n);
        let (acc, zdot) = self.eval(t, x, v, z[0])?;
        let mut out = Vec::with_capacity(2 * n + 1);
        out.extend_from_slice(v);
        out.extend(acc);
        out.push(zdot);
        Ok(out)
    }

    /// Integrates from `(α, v0, γ)` over the problem interval.
    pub fn integrate(&self, v0: &[f64], steps: usize) -> Result<Trajectory> {
        let p = self.problem;
        let n = p.dim();
        let (a, b) = p.interval();
        let mut y0 = p.alpha().to_vec();
        y0.extend_from_slice(v0);
        y0.push(p.gamma());
        let sol = rk4_ivp(|t, y| self.first_order(t, y), a, &y0, b, steps)?;
        let mut x = Vec::with_capacity(sol.y.len() * n);
        let mut v = Vec::with_capacity(sol.y.len() * n);
        let mut z = Vec::with_capacity(sol.y.len());
        for y in &sol.y {
            x.extend_from_slice(&y[..n]);
            v.extend_from_slice(&y[n..2 * n]);
            z.push(y[2 * n]);
        }
        Trajectory::new(n, sol.t, x, v, z, Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingOptions {
    pub steps: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            steps: 1000,
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    pub v_star: Vec<f64>,
    pub trajectory: Trajectory,
    pub multipliers: Multipliers,
    pub transversality_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of ∂L/∂ẋ(b) before each Newton update and at the end.
    pub history: Vec<f64>,
}

impl ShootingResult {
    /// Turns a non-converged result into [`Error::NewtonDiverged`].
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NewtonDiverged {
                iterations: self.iterations,
                residual: self.transversality_norm,
            })
        }
    }

    pub fn z_b(&self) -> f64 {
        let traj = &self.trajectory;
        traj.z(traj.len() - 1)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn terminal_momentum(p: &HerglotzProblem, traj: &Trajectory) -> Result<Vec<f64>> {
    let k = traj.len() - 1;
    Ok(p.jet_env(&traj.env(k))?.l_v)
}

/// Solves the generalized Euler-Lagrange equation with `x(a) = α`,
/// `z(a) = γ` and the transversality condition `∂L/∂ẋ(b) = 0` by shooting
/// on the initial velocity.
///
/// Newton steps use a forward-difference Jacobian with step
/// `1e-6·(1 + |v_j|)`. When `max_iter` updates do not reach `tol`, the last
/// iterate is returned with `converged == false`. A Newton update that sends
/// the integration out of the domain of `L` (overflow, log of a negative)
/// is reported as [`Error::NewtonDiverged`]; the same failure at the initial
/// guess is returned as is.
pub fn shoot(p: &HerglotzProblem, v0: &[f64], opts: &ShootingOptions) -> Result<ShootingResult> {
    let n = p.dim();
    if v0.len() != n {
        return Err(Error::InvalidProblem(format!(
            "initial guess has {} entries, expected {n}",
            v0.len()
        )));
    }
    let field = el_explicit_form(p);
    let mut v = v0.to_vec();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let residual = history.last().copied().unwrap_or(f64::INFINITY);
        let diverged = move |e: Error| match e {
            Error::Eval(EvalError::Domain { .. }) | Error::NonFinite { .. } if iterations > 0 => {
                Error::NewtonDiverged { iterations, residual }
            }
            e => e,
        };
        let traj = field.integrate(&v, opts.steps).map_err(diverged)?;
        let f = terminal_momentum(p, &traj).map_err(diverged)?;
        let norm = inf_norm(&f);
        history.push(norm);
        let converged = norm <= opts.tol;
        if converged || iterations >= opts.max_iter {
            let multipliers = compute_psi_z(p, &traj)?;
            return Ok(ShootingResult {
                v_star: v,
                trajectory: traj,
                multipliers,
                transversality_norm: norm,
                iterations,
                converged,
                history,
            });
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-6 * (1.0 + v[j].abs());
            let mut vp = v.clone();
            vp[j] += step;
            let fp = field
                .integrate(&vp, opts.steps)
                .and_then(|t| terminal_momentum(p, &t))
                .map_err(diverged)?;
            for i in 0..n {
                jac[(i, j)] = (fp[i] - f[i]) / step;
            }
        }
        let delta = jac
            .lu()
            .solve(&DVector::from_vec(f))
            .filter(|d| d.iter().all(|x| x.is_finite()))
            .ok_or_else(|| Error::SingularJacobian { v: v.clone() })?;
        for (vi, di) in v.iter_mut().zip(delta.iter()) {
            *vi -= di;
        }
        iterations += 1;
    }
}
