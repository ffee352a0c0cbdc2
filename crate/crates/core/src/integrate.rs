//! Fixed-step Runge-Kutta integration, composite Simpson quadrature and the
//! multiplier ψ_z.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{HerglotzProblem, Multipliers, Trajectory};

/// Mesh and samples produced by [`rk4_ivp`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl OdeSolution {
    pub fn last(&self) -> &[f64] {
        self.y.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// `steps + 1` equally spaced nodes from `a` to `b`, endpoints exact.
pub fn uniform_mesh(a: f64, b: f64, steps: usize) -> Vec<f64> {
    let h = (b - a) / steps as f64;
    let mut t: Vec<f64> = (0..=steps).map(|k| a + k as f64 * h).collect();
    if let Some(last) = t.last_mut() {
        *last = b;
    }
    t
}

fn check_finite(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t, y: y.to_vec() })
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One classical RK4 step of size `h` (negative steps integrate backward).
pub fn rk4_step<F>(field: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut eval = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let k = field(t, y)?;
        check_finite(t, &k).map_err(|_| Error::NonFinite { t, y: y.to_vec() })?;
        Ok(k)
    };
    let k1 = eval(t, y)?;
    let k2 = eval(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = eval(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = eval(t + h, &axpy(y, h, &k3))?;
    let next: Vec<f64> = (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    check_finite(t + h, &next)?;
    Ok(next)
}

/// Integrates `y' = field(t, y)` from `(t0, y0)` to `t1` in `steps` uniform
/// RK4 steps. `t1 < t0` integrates backward.
pub fn rk4_ivp<F>(mut field: F, t0: f64, y0: &[f64], t1: f64, steps: usize) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    if steps == 0 {
        return Err(Error::InvalidMesh("RK4 needs at least one step".into()));
    }
    check_finite(t0, y0)?;
    let t = uniform_mesh(t0, t1, steps);
    let mut y = Vec::with_capacity(t.len());
    y.push(y0.to_vec());
    for k in 0..steps {
        let h = t[k + 1] - t[k];
        let next = rk4_step(&mut field, t[k], &y[k], h)?;
        y.push(next);
    }
    Ok(OdeSolution { t, y })
}

/// Composite Simpson rule for equally spaced samples.
pub fn simpson(samples: &[f64], spacing: f64) -> Result<f64> {
    let m = samples.len();
    if m.is_multiple_of(2) {
        return Err(Error::EvenSampleCount(m));
    }
    if m == 1 {
        return Ok(0.0);
    }
    let mut odd = 0.0;
    let mut even = 0.0;
    for (k, &f) in samples.iter().enumerate().take(m - 1).skip(1) {
        if k % 2 == 1 {
            odd += f;
        } else {
            even += f;
        }
    }
    Ok(spacing / 3.0 * (samples[0] + 4.0 * odd + 2.0 * even + samples[m - 1]))
}

/// ∂L/∂z at every node and at every interval midpoint.
fn l_z_samples(p: &HerglotzProblem, traj: &Trajectory) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = (0..traj.len())
        .map(|k| p.l_z_at(traj.times()[k], traj.x(k), traj.v(k), traj.z(k)))
        .collect::<Result<Vec<_>>>()?;
    let mids = (0..traj.len() - 1)
        .map(|k| {
            let (tm, xm, vm, zm) = traj.midpoint(p, k)?;
            p.l_z_at(tm, &xm, &vm, zm)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((nodes, mids))
}

/// ∫ ∂L/∂z over each mesh interval (Simpson with the Hermite midpoint).
pub fn l_z_interval_integrals(p: &HerglotzProblem, traj: &Trajectory) -> Result<Vec<f64>> {
    p.check_trajectory(traj)?;
    if p.is_classical() {
        return Ok(vec![0.0; traj.len() - 1]);
    }
    let (nodes, mids) = l_z_samples(p, traj)?;
    let t = traj.times();
    (0..traj.len() - 1)
        .map(|k| simpson(&[nodes[k], mids[k], nodes[k + 1]], 0.5 * (t[k + 1] - t[k])))
        .collect()
}

fn fill_psi_x(p: &HerglotzProblem, traj: &Trajectory, psi_z: Vec<f64>) -> Result<Multipliers> {
    let n = p.dim();
    let mut psi_x = Vec::with_capacity(traj.len() * n);
    for (k, &pz) in psi_z.iter().enumerate() {
        let jet = p.jet_env(&traj.env(k))?;
        psi_x.extend(jet.l_v.iter().map(|lv| -pz * lv));
    }
    Multipliers::new(n, psi_x, psi_z)
}

/// Multipliers along a trajectory.
///
/// ψ_z solves `ψ_z' = −ψ_z ∂L/∂z` backward from `ψ_z(b) = 1`, one RK4 step
/// per mesh interval with the Hermite midpoint state supplying the
/// half-step stages. ψ_x then follows from the optimality condition
/// `ψ_x = −ψ_z ∂L/∂ẋ`.
pub fn compute_psi_z(p: &HerglotzProblem, traj: &Trajectory) -> Result<Multipliers> {
    p.check_trajectory(traj)?;
    let m = traj.len();
    let mut psi_z = vec![1.0; m];
    if !p.is_classical() {
        let (nodes, mids) = l_z_samples(p, traj)?;
        let t = traj.times();
        for k in (0..m - 1).rev() {
            let (t_hi, t_lo) = (t[k + 1], t[k]);
            let h = t_lo - t_hi;
            let (g_hi, g_mid, g_lo) = (nodes[k + 1], mids[k], nodes[k]);
            let mut field = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
                let g = if (s - t_hi).abs() < 0.25 * h.abs() {
                    g_hi
                } else if (s - t_lo).abs() < 0.25 * h.abs() {
                    g_lo
                } else {
                    g_mid
                };
                Ok(vec![-y[0] * g])
            };
            psi_z[k] = rk4_step(&mut field, t_hi, &[psi_z[k + 1]], h)?[0];
        }
    }
    fill_psi_x(p, traj, psi_z)
}

/// ψ_z(t_k) = exp(∫_{t_k}^b ∂L/∂z), the integral by interval-wise Simpson.
/// Cross-check for [`compute_psi_z`].
pub fn psi_z_by_quadrature(p: &HerglotzProblem, traj: &Trajectory) -> Result<Multipliers> {
    let pieces = l_z_interval_integrals(p, traj)?;
    let mut psi_z = vec![1.0; traj.len()];
    let mut tail = 0.0;
    for k in (0..pieces.len()).rev() {
        tail += pieces[k];
        psi_z[k] = tail.exp();
    }
    fill_psi_x(p, traj, psi_z)
}

/// λ(t_k) = exp(−∫_a^{t_k} ∂L/∂z) by forward quadrature.
pub fn lambda_forward(p: &HerglotzProblem, traj: &Trajectory) -> Result<Vec<f64>> {
    let pieces = l_z_interval_integrals(p, traj)?;
    let mut lambda = Vec::with_capacity(traj.len());
    lambda.push(1.0);
    let mut head = 0.0;
    for piece in pieces {
        head += piece;
        lambda.push((-head).exp());
    }
    Ok(lambda)
}

/// ∫_a^b ∂L/∂z along the trajectory.
pub fn l_z_total_integral(p: &HerglotzProblem, traj: &Trajectory) -> Result<f64> {
    Ok(l_z_interval_integrals(p, traj)?.iter().sum())
}
