//! Steady-state initialization and implicit-midpoint stepping of a DAE
//! `F(x, ż, t) = 0` whose first `n_differential` unknowns are the states `z`.
//!
//! A midpoint step solves for `[z_{n+1}; y_{n+½}]` with
//! `F([(z_n + z_{n+1})/2; y_{n+½}], (z_{n+1} - z_n)/dt, t_n + dt/2) = 0`,
//! so the algebraic rows hold at the midpoint. The algebraic unknowns at
//! `t_{n+1}` are then recovered from the algebraic rows with `z_{n+1}` fixed.

use super::solver::{newton_solve, NewtonStats, Pattern, SolverConfig};
use super::DaeSystem;
use crate::error::{Error, Result};

/// Solves `F(x, 0, t) = 0` from `x0`.
pub fn steady_state<S: DaeSystem + ?Sized>(
    sys: &S,
    x0: Vec<f64>,
    t: f64,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, NewtonStats)> {
    let zdot = vec![0.0; sys.n_differential()];
    let pattern = sys.sparsity();
    newton_solve(
        |x: &[f64], out: &mut [f64]| sys.residual(x, &zdot, t, out),
        x0,
        &sys.row_scales(),
        pattern.as_ref(),
        cfg,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Consistent unknowns at `t_{n+1}`.
    pub x: Vec<f64>,
    /// `[(z_n + z_{n+1})/2; y_{n+½}]`, the point where the rows were enforced.
    pub midpoint: Vec<f64>,
    pub newton: NewtonStats,
    /// False when the algebraic recovery at `t_{n+1}` failed and the
    /// algebraic unknowns were extrapolated from the midpoint instead.
    pub projected: bool,
}

fn step_pattern<S: DaeSystem + ?Sized>(sys: &S) -> Option<Pattern> {
    sys.sparsity().map(|p| p.with_diagonal(0..sys.n_differential()))
}

/// One implicit-midpoint step from a consistent `x_n`. `dt` may be negative.
pub fn step_midpoint<S: DaeSystem + ?Sized>(
    sys: &S,
    x_n: &[f64],
    t_n: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    let nd = sys.n_differential();
    let algebraic = sys.sparsity().map(|p| p.trailing(nd, nd));
    step_with_pattern(sys, x_n, t_n, dt, cfg, step_pattern(sys).as_ref(), algebraic.as_ref())
}

fn step_with_pattern<S: DaeSystem + ?Sized>(
    sys: &S,
    x_n: &[f64],
    t_n: f64,
    dt: f64,
    cfg: &SolverConfig,
    pattern: Option<&Pattern>,
    algebraic_pattern: Option<&Pattern>,
) -> Result<StepOutcome> {
    let nd = sys.n_differential();
    let n = sys.n_unknowns();
    let t_mid = t_n + 0.5 * dt;
    let scales = sys.row_scales();
    let z_n = &x_n[..nd];

    let midpoint_of = |u: &[f64], mid: &mut [f64], zdot: &mut [f64]| {
        for i in 0..nd {
            mid[i] = 0.5 * (z_n[i] + u[i]);
            zdot[i] = (u[i] - z_n[i]) / dt;
        }
        mid[nd..].copy_from_slice(&u[nd..]);
    };
    let residual = |u: &[f64], out: &mut [f64]| {
        let mut mid = vec![0.0; n];
        let mut zdot = vec![0.0; nd];
        midpoint_of(u, &mut mid, &mut zdot);
        sys.residual(&mid, &zdot, t_mid, out)
    };
    let (u, newton) = newton_solve(residual, x_n.to_vec(), &scales, pattern, cfg)?;

    let mut midpoint = vec![0.0; n];
    let mut zdot = vec![0.0; nd];
    midpoint_of(&u, &mut midpoint, &mut zdot);

    // Algebraic recovery at t_{n+1}, predicted by linear extrapolation.
    let mut x = u.clone();
    for i in nd..n {
        x[i] = 2.0 * u[i] - x_n[i];
    }
    let projected = match project_with_pattern(sys, &x, t_n + dt, cfg, algebraic_pattern) {
        Ok(y) => {
            x[nd..].copy_from_slice(&y);
            true
        }
        Err(_) => false,
    };
    Ok(StepOutcome {
        x,
        midpoint,
        newton,
        projected,
    })
}

/// Solves the algebraic rows for the algebraic unknowns at time `t`, with
/// the differential states of `x` held fixed. Returns the algebraic block.
pub fn project_algebraic<S: DaeSystem + ?Sized>(sys: &S, x: &[f64], t: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let nd = sys.n_differential();
    let pattern = sys.sparsity().map(|p| p.trailing(nd, nd));
    project_with_pattern(sys, x, t, cfg, pattern.as_ref())
}

fn project_with_pattern<S: DaeSystem + ?Sized>(
    sys: &S,
    x: &[f64],
    t: f64,
    cfg: &SolverConfig,
    pattern: Option<&Pattern>,
) -> Result<Vec<f64>> {
    let nd = sys.n_differential();
    let n = sys.n_unknowns();
    if nd == n {
        return Ok(Vec::new());
    }
    let zdot = vec![0.0; nd];
    let scales = sys.row_scales()[nd..].to_vec();
    let residual = |y: &[f64], out: &mut [f64]| {
        let mut full = x.to_vec();
        full[nd..].copy_from_slice(y);
        let mut r = vec![0.0; n];
        sys.residual(&full, &zdot, t, &mut r)?;
        out.copy_from_slice(&r[nd..]);
        Ok(())
    };
    newton_solve(residual, x[nd..].to_vec(), &scales, pattern, cfg).map(|(y, _)| y)
}

/// Step times `0 = t_0 < … < t_N = t_end`; the last step is shortened when
/// `dt` does not divide `t_end`.
pub fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut t: Vec<f64> = (0..=steps).map(|k| (k as f64 * dt).min(t_end)).collect();
    if let Some(last) = t.last_mut() {
        *last = t_end;
    }
    t
}

/// Everything an observer sees after one accepted step.
#[derive(Debug)]
pub struct StepInfo<'a> {
    pub index: usize,
    pub t_prev: f64,
    pub t: f64,
    pub x_prev: &'a [f64],
    pub x: &'a [f64],
    pub midpoint: &'a [f64],
    pub newton: &'a NewtonStats,
    pub projected: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub steady_iterations: usize,
    pub newton_iterations: Vec<usize>,
    pub max_step_residual: f64,
    /// Steps where the algebraic recovery fell back to extrapolation.
    pub projection_fallbacks: usize,
}

impl RunStats {
    pub fn total_iterations(&self) -> usize {
        self.newton_iterations.iter().sum()
    }

    pub fn max_iterations(&self) -> usize {
        self.newton_iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.newton_iterations.is_empty() {
            0.0
        } else {
            self.total_iterations() as f64 / self.newton_iterations.len() as f64
        }
    }
}

/// Steps from a consistent `x0` at `t = 0` over `cfg.t_end`, calling
/// `observer` after every step.
pub fn integrate<S: DaeSystem + ?Sized>(
    sys: &S,
    x0: Vec<f64>,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&StepInfo<'_>) -> Result<()>,
) -> Result<(Vec<f64>, RunStats)> {
    cfg.validate()?;
    let grid = time_grid(cfg.t_end, cfg.dt);
    let pattern = step_pattern(sys);
    let nd = sys.n_differential();
    let algebraic = sys.sparsity().map(|p| p.trailing(nd, nd));
    let mut stats = RunStats::default();
    let mut x = x0;
    for (k, w) in grid.windows(2).enumerate() {
        let (t_prev, t) = (w[0], w[1]);
        let out =
            step_with_pattern(sys, &x, t_prev, t - t_prev, cfg, pattern.as_ref(), algebraic.as_ref()).map_err(|e| {
                Error::Step {
                    time: t,
                    source: Box::new(e),
                }
            })?;
        stats.steps += 1;
        stats.newton_iterations.push(out.newton.iterations);
        stats.max_step_residual = stats.max_step_residual.max(out.newton.final_residual());
        if !out.projected {
            stats.projection_fallbacks += 1;
        }
        observer(&StepInfo {
            index: k,
            t_prev,
            t,
            x_prev: &x,
            x: &out.x,
            midpoint: &out.midpoint,
            newton: &out.newton,
            projected: out.projected,
        })?;
        x = out.x;
    }
    Ok((x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Harmonic oscillator `q̇ = p`, `ṗ = -q` with an algebraic copy `y = q`.
    struct Oscillator;

    impl DaeSystem for Oscillator {
        fn n_differential(&self) -> usize {
            2
        }
        fn n_unknowns(&self) -> usize {
            3
        }
        fn residual(&self, x: &[f64], zdot: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
            out[0] = zdot[0] - x[1];
            out[1] = zdot[1] + x[0];
            out[2] = x[2] - x[0];
            Ok(())
        }
        fn row_scales(&self) -> Vec<f64> {
            vec![1.0; 3]
        }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(time_grid(86_400.0, 100.0).len(), 865);
        let g = time_grid(250.0, 100.0);
        assert_eq!(g, vec![0.0, 100.0, 200.0, 250.0]);
        assert_eq!(time_grid(0.0, 10.0), vec![0.0]);
    }

    #[test]
    fn midpoint_preserves_quadratic_invariant() {
        let cfg = SolverConfig {
            newton_abs_tol: 1e-13,
            dt: 0.3,
            t_end: 30.0,
            ..SolverConfig::default()
        };
        let energy = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let x0 = vec![1.0, 0.0, 1.0];
        let mut max_drift: f64 = 0.0;
        let (x, stats) = integrate(&Oscillator, x0.clone(), &cfg, |info| {
            max_drift = max_drift.max((energy(info.x) - energy(&x0)).abs());
            assert!((info.x[2] - info.x[0]).abs() < 1e-12);
            assert!((info.midpoint[2] - info.midpoint[0]).abs() < 1e-12);
            Ok(())
        })
        .unwrap();
        assert_eq!(stats.steps, 100);
        assert_eq!(stats.projection_fallbacks, 0);
        assert!(max_drift < 1e-11, "{max_drift}");
        assert!(x[0].is_finite());
    }

    #[test]
    fn stepping_back_returns() {
        let cfg = SolverConfig {
            newton_abs_tol: 1e-13,
            ..SolverConfig::default()
        };
        let x0 = [0.3, -0.7, 0.3];
        let fwd = step_midpoint(&Oscillator, &x0, 0.0, 0.5, &cfg).unwrap();
        let back = step_midpoint(&Oscillator, &fwd.x, 0.5, -0.5, &cfg).unwrap();
        for (a, b) in back.x.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_state_of_oscillator_is_origin() {
        let (x, _) = steady_state(&Oscillator, vec![0.2, 0.1, 0.0], 0.0, &SolverConfig::default()).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-8));
    }
}
