//! Herglotz problem definition, its optimal-control view, and the sampled
//! trajectory model.
//!
//! A [`HerglotzProblem`] asks for a state path `x` on `[a, b]` starting at
//! `alpha` whose functional value `z(b)` is extremal, where `z` obeys
//! `z' = L(t, x, x', z)` from `z(a) = gamma`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Var};
use crate::integrate::simpson;
use crate::report::ResidualReport;

/// Symbolic partial derivatives of the Lagrangian, built once per problem.
#[derive(Debug, Clone)]
pub(crate) struct Partials {
    pub l: Expr,
    pub dt: Expr,
    pub dz: Expr,
    pub dx: Vec<Expr>,
    pub dv: Vec<Expr>,
    /// `dv_dv[i][j]` = ∂²L/∂ẋ_i∂ẋ_j
    pub dv_dv: Vec<Vec<Expr>>,
    /// `dt_dv[i]` = ∂²L/∂t∂ẋ_i
    pub dt_dv: Vec<Expr>,
    /// `dx_dv[i][j]` = ∂²L/∂x_j∂ẋ_i
    pub dx_dv: Vec<Vec<Expr>>,
    /// `dz_dv[i]` = ∂²L/∂z∂ẋ_i
    pub dz_dv: Vec<Expr>,
}

impl Partials {
    fn new(l: &Expr, n: usize) -> Self {
        let dv: Vec<Expr> = (1..=n).map(|i| l.diff(Var::Dx(i))).collect();
        Partials {
            l: l.clone(),
            dt: l.diff(Var::T),
            dz: l.diff(Var::Z),
            dx: (1..=n).map(|i| l.diff(Var::X(i))).collect(),
            dv_dv: dv
                .iter()
                .map(|d| (1..=n).map(|j| d.diff(Var::Dx(j))).collect())
                .collect(),
            dt_dv: dv.iter().map(|d| d.diff(Var::T)).collect(),
            dx_dv: dv
                .iter()
                .map(|d| (1..=n).map(|j| d.diff(Var::X(j))).collect())
                .collect(),
            dz_dv: dv.iter().map(|d| d.diff(Var::Z)).collect(),
            dv,
        }
    }
}

/// Lagrangian and first partials at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub l: f64,
    pub l_t: f64,
    pub l_z: f64,
    pub l_x: Vec<f64>,
    pub l_v: Vec<f64>,
}

/// Second partials involving the velocity, at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityJet {
    pub l_vv: Vec<Vec<f64>>,
    pub l_tv: Vec<f64>,
    /// `l_xv[i][j]` = ∂²L/∂x_j∂ẋ_i
    pub l_xv: Vec<Vec<f64>>,
    pub l_zv: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HerglotzProblem {
    n: usize,
    a: f64,
    b: f64,
    alpha: Vec<f64>,
    gamma: f64,
    partials: Partials,
}

impl HerglotzProblem {
    pub fn new(n: usize, a: f64, b: f64, lagrangian: Expr, alpha: Vec<f64>, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProblem("state dimension must be positive".into()));
        }
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidProblem(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        if alpha.len() != n {
            return Err(Error::InvalidProblem(format!(
                "alpha has {} entries, expected {n}",
                alpha.len()
            )));
        }
        if !gamma.is_finite() || alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("initial data must be finite".into()));
        }
        for var in lagrangian.free_vars() {
            let ok = match var {
                Var::T | Var::Z => true,
                Var::S => false,
                Var::X(i) | Var::Dx(i) => i <= n,
            };
            if !ok {
                return Err(Error::InvalidProblem(format!(
                    "lagrangian references `{var}`, outside the alphabet for n = {n}"
                )));
            }
        }
        Ok(HerglotzProblem {
            n,
            a,
            b,
            alpha,
            gamma,
            partials: Partials::new(&lagrangian, n),
        })
    }

    /// Parses the Lagrangian from text and validates.
    pub fn from_source(n: usize, a: f64, b: f64, lagrangian: &str, alpha: Vec<f64>, gamma: f64) -> Result<Self> {
        let l = crate::expr::parse(lagrangian).map_err(|source| Error::Parse {
            context: "lagrangian".into(),
            source,
        })?;
        Self::new(n, a, b, l, alpha, gamma)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.partials.l
    }

    /// True iff `z` occurs in the Lagrangian tree. The test is structural,
    /// so `z - z` counts as z-dependent.
    pub fn is_classical(&self) -> bool {
        !self.partials.l.depends_on(Var::Z)
    }

    /// True iff `t` does not occur in the Lagrangian tree.
    pub fn is_autonomous(&self) -> bool {
        !self.partials.l.depends_on(Var::T)
    }

    pub fn oc_form(&self) -> OcForm<'_> {
        OcForm { problem: self }
    }

    pub fn lagrangian_at(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Result<f64> {
        Ok(self.partials.l.eval(&Env::point(t, x, v, z))?)
    }

    pub fn jet(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Result<Jet> {
        let env = Env::point(t, x, v, z);
        self.jet_env(&env)
    }

    pub(crate) fn jet_env(&self, env: &Env) -> Result<Jet> {
        let p = &self.partials;
        Ok(Jet {
            l: p.l.eval(env)?,
            l_t: p.dt.eval(env)?,
            l_z: p.dz.eval(env)?,
            l_x: eval_all(&p.dx, env)?,
            l_v: eval_all(&p.dv, env)?,
        })
    }

    pub fn velocity_jet(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Result<VelocityJet> {
        let env = Env::point(t, x, v, z);
        self.velocity_jet_env(&env)
    }

    pub(crate) fn velocity_jet_env(&self, env: &Env) -> Result<VelocityJet> {
        let p = &self.partials;
        Ok(VelocityJet {
            l_vv: p.dv_dv.iter().map(|row| eval_all(row, env)).collect::<Result<_>>()?,
            l_tv: eval_all(&p.dt_dv, env)?,
            l_xv: p.dx_dv.iter().map(|row| eval_all(row, env)).collect::<Result<_>>()?,
            l_zv: eval_all(&p.dz_dv, env)?,
        })
    }

    /// Evaluates ∂L/∂z at a point.
    pub fn l_z_at(&self, t: f64, x: &[f64], v: &[f64], z: f64) -> Result<f64> {
        Ok(self.partials.dz.eval(&Env::point(t, x, v, z))?)
    }

    /// Checks that the trajectory lives on this problem's interval and dimension.
    pub fn check_trajectory(&self, traj: &Trajectory) -> Result<()> {
        if traj.dim() != self.n {
            return Err(Error::InvalidMesh(format!(
                "trajectory dimension {} does not match problem dimension {}",
                traj.dim(),
                self.n
            )));
        }
        let t = traj.times();
        if t[0] != self.a || t[t.len() - 1] != self.b {
            return Err(Error::InvalidMesh(format!(
                "mesh spans [{}, {}], problem interval is [{}, {}]",
                t[0],
                t[t.len() - 1],
                self.a,
                self.b
            )));
        }
        Ok(())
    }
}

pub(crate) fn eval_all(exprs: &[Expr], env: &Env) -> Result<Vec<f64>> {
    exprs.iter().map(|e| e.eval(env).map_err(Error::from)).collect()
}

/// Optimal-control view of a Herglotz problem: state `(x, z)`, control
/// `u = ẋ` ranging over all of ℝⁿ, dynamics `ẋ = u`, `ż = L(t, x, u, z)`,
/// payoff `φ(x, z) = z`, no running cost.
///
/// The Hamiltonian is `H = ψ_x·u + ψ_z L`.
#[derive(Debug, Clone, Copy)]
pub struct OcForm<'a> {
    problem: &'a HerglotzProblem,
}

impl OcForm<'_> {
    pub fn state_dim(&self) -> usize {
        self.problem.n + 1
    }

    pub fn control_dim(&self) -> usize {
        self.problem.n
    }

    pub fn running_cost(&self) -> f64 {
        0.0
    }

    pub fn payoff(&self, _x: &[f64], z: f64) -> f64 {
        z
    }

    /// Gradient of the payoff with respect to `(x, z)`.
    pub fn payoff_gradient(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.problem.n];
        g.push(1.0);
        g
    }

    /// `g(t, (x, z), u) = (u, L(t, x, u, z))`.
    pub fn dynamics(&self, t: f64, x: &[f64], z: f64, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = u.to_vec();
        out.push(self.problem.lagrangian_at(t, x, u, z)?);
        Ok(out)
    }

    /// Symbolic ∂g/∂z, one entry per state component.
    pub fn dynamics_dz(&self) -> Vec<Expr> {
        let mut out = vec![Expr::constant(0.0); self.problem.n];
        out.push(self.problem.partials.dz.clone());
        out
    }

    pub fn hamiltonian(&self, t: f64, x: &[f64], u: &[f64], z: f64, psi_x: &[f64], psi_z: f64) -> Result<f64> {
        let l = self.problem.lagrangian_at(t, x, u, z)?;
        Ok(dot(psi_x, u) + psi_z * l)
    }

    /// ∂H/∂u = ψ_x + ψ_z ∂L/∂u.
    pub fn dh_du(&self, jet: &Jet, psi_x: &[f64], psi_z: f64) -> Vec<f64> {
        psi_x.iter().zip(&jet.l_v).map(|(p, lv)| p + psi_z * lv).collect()
    }

    /// ∂H/∂x = ψ_z ∂L/∂x.
    pub fn dh_dx(&self, jet: &Jet, psi_z: f64) -> Vec<f64> {
        jet.l_x.iter().map(|lx| psi_z * lx).collect()
    }

    /// ∂H/∂z = ψ_z ∂L/∂z.
    pub fn dh_dz(&self, jet: &Jet, psi_z: f64) -> f64 {
        psi_z * jet.l_z
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sampled admissible-pair candidate on a strictly increasing mesh.
///
/// `x` and `v` are stored row-major, `n` values per sample. Breakpoints are
/// sample indices where `v` may jump; the stored `v` there is one-sided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    n: usize,
    t: Vec<f64>,
    x: Vec<f64>,
    v: Vec<f64>,
    z: Vec<f64>,
    breakpoints: Vec<usize>,
}

impl Trajectory {
    pub fn new(n: usize, t: Vec<f64>, x: Vec<f64>, v: Vec<f64>, z: Vec<f64>, breakpoints: Vec<usize>) -> Result<Self> {
        let m = t.len();
        if n == 0 {
            return Err(Error::InvalidMesh("dimension must be positive".into()));
        }
        if m < 2 {
            return Err(Error::InvalidMesh("need at least two samples".into()));
        }
        if x.len() != m * n || v.len() != m * n || z.len() != m {
            return Err(Error::InvalidMesh("sample arrays do not match the mesh length".into()));
        }
        if t.iter().chain(&x).chain(&v).chain(&z).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("non-finite sample".into()));
        }
        if let Some(k) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMesh(format!(
                "mesh not strictly increasing at index {}",
                k + 1
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMesh("breakpoints must be sorted and distinct".into()));
        }
        if breakpoints.iter().any(|&k| k == 0 || k >= m - 1) {
            return Err(Error::InvalidMesh("breakpoints must be interior sample indices".into()));
        }
        Ok(Trajectory {
            n,
            t,
            x,
            v,
            z,
            breakpoints,
        })
    }

    /// Samples closed-form functions on the uniform `steps`-interval mesh
    /// of `[a, b]`.
    pub fn from_fn<F>(n: usize, a: f64, b: f64, steps: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> (Vec<f64>, Vec<f64>, f64),
    {
        let t = crate::integrate::uniform_mesh(a, b, steps);
        let mut x = Vec::with_capacity(t.len() * n);
        let mut v = Vec::with_capacity(t.len() * n);
        let mut z = Vec::with_capacity(t.len());
        for &tk in &t {
            let (xk, vk, zk) = f(tk);
            x.extend(xk);
            v.extend(vk);
            z.push(zk);
        }
        Self::new(n, t, x, v, z, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn x(&self, k: usize) -> &[f64] {
        &self.x[k * self.n..(k + 1) * self.n]
    }

    pub fn v(&self, k: usize) -> &[f64] {
        &self.v[k * self.n..(k + 1) * self.n]
    }

    pub fn z(&self, k: usize) -> f64 {
        self.z[k]
    }

    pub fn z_samples(&self) -> &[f64] {
        &self.z
    }

    /// One state or velocity component across the mesh (0-based `i`).
    pub fn x_component(&self, i: usize) -> Vec<f64> {
        self.x.iter().skip(i).step_by(self.n).copied().collect()
    }

    pub fn v_component(&self, i: usize) -> Vec<f64> {
        self.v.iter().skip(i).step_by(self.n).copied().collect()
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    pub fn env(&self, k: usize) -> Env {
        Env::point(self.t[k], self.x(k), self.v(k), self.z[k])
    }

    /// Samples within one mesh interval of a breakpoint.
    pub fn skip_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for &bp in &self.breakpoints {
            let hi = (bp + 1).min(self.len() - 1);
            mask[bp.saturating_sub(1)..=hi].fill(true);
        }
        mask
    }

    /// Intervals `[t_k, t_{k+1}]` touching a breakpoint.
    pub fn interval_skip_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len() - 1];
        for &bp in &self.breakpoints {
            mask[bp - 1] = true;
            mask[bp] = true;
        }
        mask
    }

    /// Cubic Hermite state at the midpoint of interval `k`, using `x`/`v`
    /// for the state and `z`/`L` for the functional. All three values are
    /// fourth-order accurate.
    pub fn midpoint(&self, p: &HerglotzProblem, k: usize) -> Result<(f64, Vec<f64>, Vec<f64>, f64)> {
        let h = self.t[k + 1] - self.t[k];
        let (x0, x1) = (self.x(k), self.x(k + 1));
        let (v0, v1) = (self.v(k), self.v(k + 1));
        let xm: Vec<f64> = (0..self.n)
            .map(|i| 0.5 * (x0[i] + x1[i]) + h / 8.0 * (v0[i] - v1[i]))
            .collect();
        let vm: Vec<f64> = (0..self.n)
            .map(|i| 1.5 * (x1[i] - x0[i]) / h - 0.25 * (v0[i] + v1[i]))
            .collect();
        let l0 = p.lagrangian_at(self.t[k], x0, v0, self.z[k])?;
        let l1 = p.lagrangian_at(self.t[k + 1], x1, v1, self.z[k + 1])?;
        let zm = 0.5 * (self.z[k] + self.z[k + 1]) + h / 8.0 * (l0 - l1);
        Ok((0.5 * (self.t[k] + self.t[k + 1]), xm, vm, zm))
    }
}

/// Multiplier samples on a trajectory's mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Multipliers {
    n: usize,
    psi_x: Vec<f64>,
    psi_z: Vec<f64>,
}

impl Multipliers {
    pub fn new(n: usize, psi_x: Vec<f64>, psi_z: Vec<f64>) -> Result<Self> {
        if psi_x.len() != n * psi_z.len() {
            return Err(Error::InvalidMesh("psi_x length does not match psi_z".into()));
        }
        Ok(Multipliers { n, psi_x, psi_z })
    }

    pub fn len(&self) -> usize {
        self.psi_z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi_z.is_empty()
    }

    pub fn psi_x(&self, k: usize) -> &[f64] {
        &self.psi_x[k * self.n..(k + 1) * self.n]
    }

    pub fn psi_x_component(&self, i: usize) -> Vec<f64> {
        self.psi_x.iter().skip(i).step_by(self.n).copied().collect()
    }

    pub fn psi_z(&self) -> &[f64] {
        &self.psi_z
    }
}

/// Default admissibility tolerance `1e-8·(1 + |γ| + max|z|)`.
pub fn admissibility_tolerance(p: &HerglotzProblem, traj: &Trajectory) -> f64 {
    let zmax = traj.z_samples().iter().fold(0.0f64, |m, z| m.max(z.abs()));
    1e-8 * (1.0 + p.gamma().abs() + zmax)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// Per-interval defect `(z_{k+1} − z_k − ∫L)/h_k`, reported at `t_k`.
    pub dynamics: ResidualReport,
    pub x0_defect: f64,
    pub z0_defect: f64,
    /// Sum of the interval integrals of `L` over non-skipped intervals.
    pub integral: f64,
    pub tolerance: f64,
    pub admissible: bool,
}

impl AdmissibilityReport {
    pub fn max_abs(&self) -> f64 {
        self.dynamics.max_abs.max(self.x0_defect).max(self.z0_defect)
    }
}

/// Defect of the z-dynamics over each mesh interval plus the initial-value
/// defects.
///
/// Each interval integral of `L` is Simpson's rule on the left node, the
/// Hermite midpoint and the right node. The defect is divided by the
/// interval length, so it is commensurate with `ż − L`.
pub fn admissibility_residual(p: &HerglotzProblem, traj: &Trajectory) -> Result<AdmissibilityReport> {
    p.check_trajectory(traj)?;
    let t = traj.times();
    let skip = traj.interval_skip_mask();
    let mut defects = Vec::with_capacity(t.len() - 1);
    let mut integral = 0.0;
    for k in 0..t.len() - 1 {
        if skip[k] {
            defects.push(0.0);
            continue;
        }
        let h = t[k + 1] - t[k];
        let (tm, xm, vm, zm) = traj.midpoint(p, k)?;
        let l0 = p.lagrangian_at(t[k], traj.x(k), traj.v(k), traj.z(k))?;
        let lm = p.lagrangian_at(tm, &xm, &vm, zm)?;
        let l1 = p.lagrangian_at(t[k + 1], traj.x(k + 1), traj.v(k + 1), traj.z(k + 1))?;
        let piece = simpson(&[l0, lm, l1], 0.5 * h)?;
        integral += piece;
        defects.push((traj.z(k + 1) - traj.z(k) - piece) / h);
    }
    let dynamics = ResidualReport::scalar("admissibility", &t[..t.len() - 1], &defects, &skip);
    let x0_defect = traj
        .x(0)
        .iter()
        .zip(p.alpha())
        .fold(0.0f64, |m, (x, a)| m.max((x - a).abs()));
    let z0_defect = (traj.z(0) - p.gamma()).abs();
    let tolerance = admissibility_tolerance(p, traj);
    let admissible = dynamics.max_abs <= tolerance && x0_defect <= tolerance && z0_defect <= tolerance;
    Ok(AdmissibilityReport {
        dynamics,
        x0_defect,
        z0_defect,
        integral,
        tolerance,
        admissible,
    })
}
