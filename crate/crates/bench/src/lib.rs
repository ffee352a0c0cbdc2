//! Problems shared by the benchmarks.

use herglotz::{HerglotzProblem, Trajectory};

/// `L = ẋ²/2 − x²/2 − 0.1 z` on `[0, 1]`, `x(0) = 1`.
pub fn damped_oscillator() -> HerglotzProblem {
    HerglotzProblem::from_source(1, 0.0, 1.0, "dx1^2/2 - x1^2/2 - 0.1*z", vec![1.0], 0.0).expect("valid problem")
}

/// A two-degree-of-freedom problem with velocity-functional coupling.
pub fn coupled() -> HerglotzProblem {
    HerglotzProblem::from_source(
        2,
        0.0,
        1.0,
        "dx1^2/2 + dx2^2/2 + x1*x2 - 0.2*z + 0.1*z*dx1",
        vec![1.0, 0.5],
        0.3,
    )
    .expect("valid problem")
}

/// Exact extremal of `L = ẋ²/2 − x` with `x(0) = 1`, `ẋ(1) = 0`.
pub fn parabola(steps: usize) -> (HerglotzProblem, Trajectory) {
    let p = HerglotzProblem::from_source(1, 0.0, 1.0, "dx1^2/2 - x1", vec![1.0], 0.0).expect("valid problem");
    let traj = Trajectory::from_fn(1, 0.0, 1.0, steps, |t| {
        (
            vec![1.0 + t - t * t / 2.0],
            vec![1.0 - t],
            -t / 2.0 - t * t + t.powi(3) / 3.0,
        )
    })
    .expect("valid trajectory");
    (p, traj)
}
