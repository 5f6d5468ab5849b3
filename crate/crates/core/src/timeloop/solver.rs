//! Damped Newton with a finite-difference Jacobian.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, NonConvergence, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stopping threshold on the scaled residual ∞-norm.
    pub newton_abs_tol: f64,
    pub newton_max_iter: usize,
    pub backtrack_factor: f64,
    pub max_halvings: usize,
    /// Relative finite-difference step, `h = fd_step (1 + |x|)`.
    pub fd_step: f64,
    /// Time step in s.
    pub dt: f64,
    /// Horizon in s.
    pub t_end: f64,
    /// Unknown count from which the sparse LU is used.
    pub dense_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_abs_tol: 1e-8,
            newton_max_iter: 50,
            backtrack_factor: 0.5,
            max_halvings: 20,
            fd_step: 1e-7,
            dt: 100.0,
            t_end: 86_400.0,
            dense_limit: 2000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("Newton tolerance", self.newton_abs_tol),
            ("finite-difference step", self.fd_step),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Config(format!(
                "backtracking factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("at least one Newton iteration is required".into()));
        }
        Ok(())
    }
}

/// Structural nonzeros of a Jacobian, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    nrows: usize,
    columns: Vec<Vec<usize>>,
}

impl Pattern {
    pub fn dense(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            columns: vec![(0..nrows).collect(); ncols],
        }
    }

    pub fn from_columns(nrows: usize, mut columns: Vec<Vec<usize>>) -> Self {
        for c in &mut columns {
            c.sort_unstable();
            c.dedup();
        }
        Self { nrows, columns }
    }

    /// Probes `f` around `x` one column at a time and records every row that moves.
    pub fn detect(f: impl Fn(&[f64], &mut [f64]) -> Result<()>, x: &[f64], nrows: usize) -> Result<Self> {
        let mut f0 = vec![0.0; nrows];
        let mut f1 = vec![0.0; nrows];
        f(x, &mut f0)?;
        let mut xp = x.to_vec();
        let mut columns = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let h = 1e-3 * (1.0 + x[j].abs());
            xp[j] = x[j] + h;
            f(&xp, &mut f1)?;
            xp[j] = x[j];
            columns.push((0..nrows).filter(|i| f1[*i] != f0[*i]).collect());
        }
        Ok(Self { nrows, columns })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Adds `(j, j)` for every `j` in `range`.
    pub fn with_diagonal(mut self, range: std::ops::Range<usize>) -> Self {
        for j in range {
            if let Err(pos) = self.columns[j].binary_search(&j) {
                self.columns[j].insert(pos, j);
            }
        }
        self
    }

    /// The trailing block starting at row `r0` and column `c0`, re-indexed from zero.
    pub fn trailing(&self, r0: usize, c0: usize) -> Self {
        Self {
            nrows: self.nrows - r0,
            columns: self.columns[c0..]
                .iter()
                .map(|c| c.iter().filter(|i| **i >= r0).map(|i| i - r0).collect())
                .collect(),
        }
    }

    /// Greedy distance-2 coloring: columns of one group share no row.
    pub fn color_groups(&self) -> Vec<Vec<usize>> {
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); self.nrows];
        for (j, c) in self.columns.iter().enumerate() {
            for &i in c {
                row_cols[i].push(j);
            }
        }
        let mut color = vec![usize::MAX; self.columns.len()];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut forbidden = Vec::new();
        for j in 0..self.columns.len() {
            forbidden.clear();
            for &i in &self.columns[j] {
                for &k in &row_cols[i] {
                    if color[k] != usize::MAX {
                        forbidden.push(color[k]);
                    }
                }
            }
            let c = (0..).find(|c| !forbidden.contains(c)).unwrap();
            color[j] = c;
            if c == groups.len() {
                groups.push(Vec::new());
            }
            groups[c].push(j);
        }
        groups
    }
}

/// Applies the diagonal row scaling `s_i F_i` in place.
pub fn scale_residual(raw: &mut [f64], scales: &[f64]) {
    for (r, s) in raw.iter_mut().zip(scales) {
        *r *= s;
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual_evaluations: usize,
    pub halvings: usize,
}

impl NewtonStats {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

enum Jacobian {
    Dense(DMatrix<f64>),
    Sparse(Vec<Triplet<usize, usize, f64>>),
}

struct Scaled<'a, F> {
    f: F,
    scales: &'a [f64],
    evaluations: usize,
}

impl<F: Fn(&[f64], &mut [f64]) -> Result<()>> Scaled<'_, F> {
    fn eval(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.evaluations += 1;
        (self.f)(x, out)?;
        scale_residual(out, self.scales);
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("residual row {i}")));
        }
        Ok(())
    }
}

fn fd_jacobian<F: Fn(&[f64], &mut [f64]) -> Result<()>>(
    f: &mut Scaled<'_, F>,
    x: &[f64],
    fx: &[f64],
    pattern: Option<&Pattern>,
    groups: &[Vec<usize>],
    cfg: &SolverConfig,
) -> Result<Jacobian> {
    let n = x.len();
    let sparse = n >= cfg.dense_limit;
    let mut dense = if sparse {
        DMatrix::zeros(0, 0)
    } else {
        DMatrix::zeros(n, n)
    };
    let mut triplets = Vec::new();
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut steps = vec![0.0; n];
    for group in groups {
        for &j in group {
            steps[j] = cfg.fd_step * (1.0 + x[j].abs());
            xp[j] = x[j] + steps[j];
        }
        if f.eval(&xp, &mut fp).is_err() {
            // Step back instead, e.g. when the forward probe leaves the physical range.
            for &j in group {
                steps[j] = -steps[j];
                xp[j] = x[j] + steps[j];
            }
            f.eval(&xp, &mut fp)?;
        }
        for &j in group {
            xp[j] = x[j];
            let mut put = |i: usize| {
                let v = (fp[i] - fx[i]) / steps[j];
                if sparse {
                    if v != 0.0 {
                        triplets.push(Triplet::new(i, j, v));
                    }
                } else {
                    dense[(i, j)] = v;
                }
            };
            match pattern {
                Some(p) => p.column(j).iter().for_each(|&i| put(i)),
                None => (0..n).for_each(put),
            }
        }
    }
    Ok(if sparse {
        Jacobian::Sparse(triplets)
    } else {
        Jacobian::Dense(dense)
    })
}

fn solve_linear(jac: Jacobian, rhs: &[f64], iteration: usize) -> Result<Vec<f64>> {
    let n = rhs.len();
    let sol = match jac {
        Jacobian::Dense(m) => m
            .lu()
            .solve(&DVector::from_column_slice(rhs))
            .map(|v| v.as_slice().to_vec()),
        Jacobian::Sparse(triplets) => SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .ok()
            .and_then(|a| a.sp_lu().ok())
            .map(|lu| {
                let mut b = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
                lu.solve_in_place(b.as_mut());
                (0..n).map(|i| b[(i, 0)]).collect()
            }),
    };
    match sol {
        Some(v) if v.iter().all(|x: &f64| x.is_finite()) => Ok(v),
        _ => Err(Error::SingularJacobian { iteration }),
    }
}

/// Solves `F(x) = 0` for a square system given by `f`, with diagonal row
/// scaling `scales`. `pattern`, when given, must cover every structural
/// nonzero of the Jacobian; columns are then probed in colored groups.
pub fn newton_solve(
    f: impl Fn(&[f64], &mut [f64]) -> Result<()>,
    x0: Vec<f64>,
    scales: &[f64],
    pattern: Option<&Pattern>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, NewtonStats)> {
    let n = x0.len();
    if scales.len() != n || pattern.is_some_and(|p| p.ncols() != n || p.nrows() != n) {
        return Err(Error::Config("Newton problem dimensions do not match".into()));
    }
    let groups = match pattern {
        Some(p) => p.color_groups(),
        None => (0..n).map(|j| vec![j]).collect(),
    };
    let mut f = Scaled {
        f,
        scales,
        evaluations: 0,
    };
    let mut stats = NewtonStats::default();
    let mut x = x0;
    let mut fx = vec![0.0; n];
    f.eval(&x, &mut fx)?;
    let mut norm = inf_norm(&fx);
    stats.residual_history.push(norm);
    let mut best = (norm, x.clone());

    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    loop {
        if norm <= cfg.newton_abs_tol {
            stats.residual_evaluations = f.evaluations;
            return Ok((x, stats));
        }
        if stats.iterations == cfg.newton_max_iter {
            break;
        }
        let jac = fd_jacobian(&mut f, &x, &fx, pattern, &groups, cfg)?;
        let rhs: Vec<f64> = fx.iter().map(|v| -v).collect();
        let delta = solve_linear(jac, &rhs, stats.iterations)?;
        stats.iterations += 1;

        let mut alpha = 1.0;
        let mut accepted = false;
        let mut fallback: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for _ in 0..=cfg.max_halvings {
            for i in 0..n {
                trial[i] = x[i] + alpha * delta[i];
            }
            if f.eval(&trial, &mut f_trial).is_ok() {
                let trial_norm = inf_norm(&f_trial);
                if trial_norm <= (1.0 - 1e-4 * alpha) * norm {
                    std::mem::swap(&mut x, &mut trial);
                    std::mem::swap(&mut fx, &mut f_trial);
                    norm = trial_norm;
                    accepted = true;
                    break;
                }
                if fallback.as_ref().is_none_or(|(b, _, _)| trial_norm < *b) {
                    fallback = Some((trial_norm, trial.clone(), f_trial.clone()));
                }
            }
            alpha *= cfg.backtrack_factor;
            stats.halvings += 1;
        }
        if !accepted {
            // No sufficient decrease: take the best finite trial to keep moving.
            match fallback {
                Some((trial_norm, xt, ft)) => {
                    x = xt;
                    fx = ft;
                    norm = trial_norm;
                }
                None => break,
            }
        }
        stats.residual_history.push(norm);
        if norm < best.0 {
            best = (norm, x.clone());
        }
    }

    Err(Error::NonConvergence(Box::new(NonConvergence {
        iterations: stats.iterations,
        best_iterate: best.1,
        best_residual: best.0,
        residual_history: stats.residual_history,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn linear_system_one_iteration() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let b = [1.0, 2.0, 3.0];
        let f = |x: &[f64], out: &mut [f64]| {
            for i in 0..3 {
                out[i] = (0..3).map(|j| a[i][j] * x[j]).sum::<f64>() - b[i];
            }
            Ok(())
        };
        let (x, stats) = newton_solve(f, vec![0.0; 3], &[1.0; 3], None, &cfg()).unwrap();
        assert_eq!(stats.iterations, 1);
        let mut r = [0.0; 3];
        f(&x, &mut r).unwrap();
        assert!(inf_norm(&r) <= 1e-8);
    }

    #[test]
    fn scalar_square_root() {
        // Exact Newton iterates from 3: 13/6, 313/156, ...
        let f = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] * x[0] - 4.0;
            Ok(())
        };
        let (x, stats) = newton_solve(f, vec![3.0], &[1.0], None, &cfg()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9);
        let h = &stats.residual_history;
        assert!((h[1] - (13.0f64 / 6.0).powi(2) + 4.0).abs() < 1e-6);
        // Quadratic tail: r_{k+1} ≲ C r_k².
        let k = h.len() - 1;
        assert!(h[k] <= 10.0 * h[k - 1] * h[k - 1]);
    }

    #[test]
    fn nonconvergence_carries_diagnostics() {
        let f = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] * x[0] + 1.0;
            Ok(())
        };
        let mut c = cfg();
        c.newton_max_iter = 5;
        match newton_solve(f, vec![1.0], &[1.0], None, &c) {
            Err(Error::NonConvergence(nc)) => {
                assert_eq!(nc.iterations, 5);
                assert_eq!(nc.residual_history.len(), 6);
                assert!(nc.best_residual >= 1.0);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn singular_jacobian_is_reported() {
        let f = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] + x[1] - 1.0;
            out[1] = 2.0 * (x[0] + x[1]) - 1.0;
            Ok(())
        };
        assert!(matches!(
            newton_solve(f, vec![0.0; 2], &[1.0; 2], None, &cfg()),
            Err(Error::SingularJacobian { iteration: 0 })
        ));
    }

    fn tridiagonal(n: usize) -> impl Fn(&[f64], &mut [f64]) -> Result<()> {
        move |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = 3.0 * x[i] + 0.1 * x[i].powi(3) - l - r - 1.0;
            }
            Ok(())
        }
    }

    #[test]
    fn colored_and_sparse_paths_agree_with_dense() {
        let n = 40;
        let f = tridiagonal(n);
        let pattern = Pattern::detect(&f, &vec![0.3; n], n).unwrap();
        assert_eq!(pattern.nnz(), 3 * n - 2);
        assert_eq!(pattern.color_groups().len(), 3);
        let (dense, _) = newton_solve(&f, vec![0.0; n], &vec![1.0; n], None, &cfg()).unwrap();
        let (colored, _) = newton_solve(&f, vec![0.0; n], &vec![1.0; n], Some(&pattern), &cfg()).unwrap();
        let mut sparse_cfg = cfg();
        sparse_cfg.dense_limit = 10;
        let (sparse, _) = newton_solve(&f, vec![0.0; n], &vec![1.0; n], Some(&pattern), &sparse_cfg).unwrap();
        for i in 0..n {
            assert!((dense[i] - colored[i]).abs() < 1e-9);
            assert!((dense[i] - sparse[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_is_diagonal() {
        let mut r = vec![80.0, 3.0];
        scale_residual(&mut r, &[1.0 / 8e6, 1.0]);
        assert!((r[0] - 1e-5).abs() < 1e-20);
        let mut twice = vec![80.0, 3.0];
        scale_residual(&mut twice, &[0.5, 2.0]);
        scale_residual(&mut twice, &[0.5, 2.0]);
        let mut once = vec![80.0, 3.0];
        scale_residual(&mut once, &[0.25, 4.0]);
        assert_eq!(twice, once);
    }

    #[test]
    fn pattern_blocks() {
        let p = Pattern::from_columns(3, vec![vec![1], vec![0, 2], vec![]]).with_diagonal(0..3);
        assert_eq!(p.column(0), &[0, 1]);
        assert_eq!(p.column(2), &[2]);
        let t = p.trailing(1, 1);
        assert_eq!(t.column(0), &[0, 1]);
        assert_eq!(t.column(1), &[1]);
    }
}
