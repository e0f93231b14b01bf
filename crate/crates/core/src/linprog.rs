//! A small deterministic LP engine for the transport formulations.
//!
//! Problems have the form `min c.x  s.t.  A x = b,  G x <= h,  x >= 0` with
//! sparse rows. The solver is a two-phase revised simplex that keeps an
//! explicit dense basis inverse (refactorized periodically) and sparse
//! columns. Pricing starts with Dantzig's rule and switches permanently to
//! Bland's rule once a step budget or a run of degenerate pivots is exhausted,
//! so identical input always follows the identical pivot sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("iteration cap of {cap} reached without convergence")]
    IterationCap { cap: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// One sparse linear constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    equalities: Vec<Row>,
    inequalities: Vec<Row>,
}

impl LinearProgram {
    /// A program over `objective.len()` nonnegative variables.
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    pub fn add_eq(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(Row { terms, rhs });
    }

    /// Adds `terms . x <= rhs`.
    pub fn add_le(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(Row { terms, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.equalities.len() + self.inequalities.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn equalities(&self) -> &[Row] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Row] {
        &self.inequalities
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective".into()));
        }
        for row in self.equalities.iter().chain(&self.inequalities) {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed("non-finite right-hand side".into()));
            }
            for &(j, a) in &row.terms {
                if j >= self.objective.len() {
                    return Err(LpError::Malformed(format!(
                        "variable {j} out of range ({} variables)",
                        self.objective.len()
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed("non-finite coefficient".into()));
                }
            }
        }
        Ok(())
    }

    fn rhs_norm(&self) -> f64 {
        self.equalities
            .iter()
            .chain(&self.inequalities)
            .map(|r| r.rhs.abs())
            .fold(0.0, f64::max)
    }

    fn cost_norm(&self) -> f64 {
        self.objective.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Largest violation of any constraint (or of `x >= 0`) at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let dot = |r: &Row| r.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>();
        let eq = self
            .equalities
            .iter()
            .map(|r| (dot(r) - r.rhs).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|r| (dot(r) - r.rhs).max(0.0))
            .fold(0.0, f64::max);
        let neg = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        eq.max(ineq).max(neg)
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Row multipliers, equalities first then inequalities. Only meaningful
    /// when `status` is optimal.
    pub duals: Vec<f64>,
    pub primal_residual: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// `feas_tol = feas_scale * (1 + |b|_inf)`.
    pub feas_scale: f64,
    /// `opt_tol = opt_scale * (1 + |c|_inf)`.
    pub opt_scale: f64,
    /// Dantzig steps allowed before Bland's rule takes over. `None` means
    /// `10 * (vars + constraints)`.
    pub dantzig_budget: Option<usize>,
    /// Consecutive degenerate pivots tolerated under Dantzig's rule.
    pub stall_limit: usize,
    /// Hard cap is `cap_factor * (vars + constraints)` iterations.
    pub cap_factor: usize,
    pub refactor_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_scale: 1e-9,
            opt_scale: 1e-9,
            dantzig_budget: None,
            stall_limit: 200,
            cap_factor: 50,
            refactor_every: 64,
        }
    }
}

impl SolverOptions {
    pub fn feas_tol(&self, p: &LinearProgram) -> f64 {
        self.feas_scale * (1.0 + p.rhs_norm())
    }

    pub fn opt_tol(&self, p: &LinearProgram) -> f64 {
        self.opt_scale * (1.0 + p.cost_norm())
    }
}

const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    opts: &'a SolverOptions,
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
    kinds: Vec<ColKind>,
    b: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    cap: usize,
    dantzig_left: usize,
    bland: bool,
    degenerate_run: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn build(p: &LinearProgram, opts: &'a SolverOptions) -> Self {
        let n = p.num_vars();
        let rows = p.num_constraints();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut kinds = vec![ColKind::Structural; n];
        let mut b = Vec::with_capacity(rows);
        let mut basis = Vec::with_capacity(rows);

        let all_rows = p
            .equalities
            .iter()
            .map(|r| (r, false))
            .chain(p.inequalities.iter().map(|r| (r, true)));
        for (i, (row, is_le)) in all_rows.enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            // Duplicate terms within a row add up.
            let mut terms = row.terms.clone();
            terms.sort_by_key(|t| t.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
            for (j, a) in terms {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            for (j, a) in merged {
                if a != 0.0 {
                    cols[j].push((i, sign * a));
                }
            }
            b.push(sign * row.rhs);
            let mut slack_basic = false;
            if is_le {
                cols.push(vec![(i, sign)]);
                kinds.push(ColKind::Slack);
                if sign > 0.0 {
                    basis.push(cols.len() - 1);
                    slack_basic = true;
                }
            }
            if !slack_basic {
                cols.push(vec![(i, 1.0)]);
                kinds.push(ColKind::Artificial);
                basis.push(cols.len() - 1);
            }
        }

        let mut in_basis = vec![false; cols.len()];
        for &j in &basis {
            in_basis[j] = true;
        }
        let mut binv = vec![0.0; rows * rows];
        for i in 0..rows {
            binv[i * rows + i] = 1.0;
        }
        let size = n + rows;
        let xb = b.clone();
        Self {
            opts,
            rows,
            cols,
            kinds,
            b,
            basis,
            in_basis,
            binv,
            xb,
            iterations: 0,
            cap: opts.cap_factor.saturating_mul(size.max(1)),
            dantzig_left: opts.dantzig_budget.unwrap_or(10 * size),
            bland: false,
            degenerate_run: 0,
            since_refactor: 0,
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.rows;
        let mut y = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, bk) in y.iter_mut().zip(row) {
                    *yk += cb * bk;
                }
            }
        }
        y
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.rows;
        let mut u = vec![0.0; m];
        for &(r, a) in &self.cols[j] {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += self.binv[i * m + r] * a;
            }
        }
        u
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.rows;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[j] {
                a[r * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()))
                .unwrap_or(c);
            if a[piv * m + c].abs() < 1e-12 {
                return Err(LpError::Numerical("singular basis".into()));
            }
            if piv != c {
                for k in 0..m {
                    a.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        // Rows of `inv` are indexed by basis position after the elimination.
        self.binv = inv;
        self.xb = (0..m)
            .map(|i| {
                self.binv[i * m..(i + 1) * m]
                    .iter()
                    .zip(&self.b)
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect();
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, r: usize, j: usize, u: &[f64], theta: f64) {
        let m = self.rows;
        for (i, ui) in u.iter().enumerate() {
            if i != r {
                self.xb[i] -= theta * ui;
                if self.xb[i] < 0.0 && self.xb[i] > -1e-11 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;

        let ur = u[r];
        for k in 0..m {
            self.binv[r * m + k] /= ur;
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for (i, &ui) in u.iter().enumerate() {
            if i != r && ui != 0.0 {
                let row = &mut self.binv[i * m..(i + 1) * m];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= ui * p;
                }
            }
        }
        self.in_basis[self.basis[r]] = false;
        self.basis[r] = j;
        self.in_basis[j] = true;
        self.since_refactor += 1;
    }

    fn run_phase(&mut self, cost: &[f64], phase_two: bool, opt_tol: f64) -> Result<PhaseEnd, LpError> {
        loop {
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let y = self.duals(cost);

            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.in_basis[j] || (phase_two && self.kinds[j] == ColKind::Artificial) {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().map(|&(r, a)| y[r] * a).sum::<f64>();
                if d < -opt_tol {
                    if self.bland {
                        entering = Some((j, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d < best) {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((j, _)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            let u = self.ftran(j);
            let mut leave: Option<(usize, f64)> = None;
            for (i, &ui) in u.iter().enumerate() {
                let stuck = phase_two && self.kinds[self.basis[i]] == ColKind::Artificial;
                let ratio = if stuck && ui.abs() > PIVOT_TOL {
                    0.0
                } else if ui > PIVOT_TOL {
                    self.xb[i].max(0.0) / ui
                } else {
                    continue;
                };
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((r, theta)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };

            self.pivot(r, j, &u, theta);
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LpError::IterationCap { cap: self.cap });
            }
            if !self.bland {
                self.dantzig_left = self.dantzig_left.saturating_sub(1);
                if theta <= 1e-12 {
                    self.degenerate_run += 1;
                } else {
                    self.degenerate_run = 0;
                }
                if self.dantzig_left == 0 || self.degenerate_run > self.opts.stall_limit {
                    self.bland = true;
                }
            }
        }
    }

    /// Pivots zero-level artificials out of the basis where some real column
    /// can replace them; the rest belong to redundant rows.
    fn drive_out_artificials(&mut self) {
        let m = self.rows;
        for r in 0..m {
            if self.kinds[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let candidate = (0..self.cols.len()).find(|&j| {
                !self.in_basis[j]
                    && self.kinds[j] != ColKind::Artificial
                    && self.cols[j]
                        .iter()
                        .map(|&(k, a)| row[k] * a)
                        .sum::<f64>()
                        .abs()
                        > 1e-7
            });
            if let Some(j) = candidate {
                let u = self.ftran(j);
                let theta = self.xb[r] / u[r];
                self.pivot(r, j, &u, theta);
            }
        }
    }
}

/// Solves `p` to optimality (or proves infeasibility / unboundedness).
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(p, &SolverOptions::default())
}

pub fn solve_lp_with(p: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    p.validate()?;
    let n = p.num_vars();
    let feas_tol = opts.feas_tol(p);
    let opt_tol = opts.opt_tol(p);
    let mut s = Simplex::build(p, opts);

    let phase_one_cost: Vec<f64> = s
        .kinds
        .iter()
        .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
        .collect();
    if s.kinds.contains(&ColKind::Artificial) {
        s.run_phase(&phase_one_cost, false, opts.opt_scale * 2.0)?;
        s.refactor()?;
        let infeasibility: f64 = s
            .basis
            .iter()
            .zip(&s.xb)
            .filter(|(j, _)| s.kinds[**j] == ColKind::Artificial)
            .map(|(_, v)| v.abs())
            .sum();
        if infeasibility > feas_tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                x: vec![0.0; n],
                iterations: s.iterations,
                duals: Vec::new(),
                primal_residual: infeasibility,
            });
        }
        s.drive_out_artificials();
        s.refactor()?;
    }

    let mut cost = vec![0.0; s.cols.len()];
    cost[..n].copy_from_slice(&p.objective);
    let end = s.run_phase(&cost, true, opt_tol)?;
    s.refactor()?;

    let mut x = vec![0.0; n];
    for (&j, &v) in s.basis.iter().zip(&s.xb) {
        if j < n {
            x[j] = if v.abs() <= 1e-13 { 0.0 } else { v };
        }
    }
    let residual = p.primal_residual(&x);
    if let PhaseEnd::Unbounded = end {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            x,
            iterations: s.iterations,
            duals: Vec::new(),
            primal_residual: residual,
        });
    }
    if residual > feas_tol {
        return Err(LpError::Numerical(format!(
            "primal residual {residual:e} exceeds {feas_tol:e}"
        )));
    }

    let mut duals = s.duals(&cost);
    let signs = p
        .equalities
        .iter()
        .chain(&p.inequalities)
        .map(|r| if r.rhs < 0.0 { -1.0 } else { 1.0 });
    for (y, sign) in duals.iter_mut().zip(signs) {
        *y *= sign;
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: p.value_at(&x),
        x,
        iterations: s.iterations,
        duals,
        primal_residual: residual,
    })
}

/// Dual objective `b.y` of a row-multiplier vector, together with the largest
/// violation of dual feasibility (`A^T y <= c`, inequality multipliers <= 0).
pub fn dual_value(p: &LinearProgram, duals: &[f64]) -> (f64, f64) {
    let rows: Vec<&Row> = p.equalities.iter().chain(&p.inequalities).collect();
    let value = rows.iter().zip(duals).map(|(r, y)| r.rhs * y).sum();
    let mut reduced = p.objective.clone();
    for (r, y) in rows.iter().zip(duals) {
        for &(j, a) in &r.terms {
            reduced[j] -= a * y;
        }
    }
    let col_violation = reduced.iter().map(|d| (-d).max(0.0)).fold(0.0, f64::max);
    let sign_violation = duals[p.equalities.len()..]
        .iter()
        .map(|y| y.max(0.0))
        .fold(0.0, f64::max);
    (value, col_violation.max(sign_violation))
}

/// Re-optimizes random secondary objectives over the optimal face of `p`
/// (the feasible set cut by `c.x <= v.value + opt_tol`).
///
/// Each returned solution carries the primary objective value in `value`.
pub fn probe_optimal_face(
    p: &LinearProgram,
    v: &LpSolution,
    probes: usize,
    seed: u64,
) -> Result<Vec<LpSolution>, LpError> {
    probe_optimal_face_with(p, v, probes, seed, &SolverOptions::default())
}

pub fn probe_optimal_face_with(
    p: &LinearProgram,
    v: &LpSolution,
    probes: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<LpSolution>, LpError> {
    if !v.is_optimal() {
        return Err(LpError::Malformed(
            "face probing needs an optimal solution".into(),
        ));
    }
    let opt_tol = opts.opt_tol(p);

    // Complementary slackness with the optimal multipliers pins the face
    // exactly: columns with positive reduced cost stay at zero and
    // inequalities with nonzero multipliers stay tight.
    let mut face = p.clone();
    face.objective = Vec::new();
    if v.duals.len() == p.num_constraints() {
        let mut reduced = p.objective.clone();
        for (r, y) in p.equalities.iter().chain(&p.inequalities).zip(&v.duals) {
            for &(j, a) in &r.terms {
                reduced[j] -= a * y;
            }
        }
        let zeroed: Vec<(usize, f64)> = reduced
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > opt_tol)
            .map(|(j, _)| (j, 1.0))
            .collect();
        if !zeroed.is_empty() {
            face.add_eq(zeroed, 0.0);
        }
        let ne = p.equalities.len();
        let (tight, slack): (Vec<_>, Vec<_>) = p
            .inequalities
            .iter()
            .zip(&v.duals[ne..])
            .partition(|(_, y)| **y < -opt_tol);
        face.equalities
            .extend(tight.into_iter().map(|(r, _)| r.clone()));
        face.inequalities = slack.into_iter().map(|(r, _)| r.clone()).collect();
    }
    face.add_le(
        p.objective.iter().copied().enumerate().collect(),
        v.value + opt_tol,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(probes);
    for _ in 0..probes {
        let secondary: Vec<f64> = (0..p.num_vars())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mut q = face.clone();
        q.objective = secondary;
        let mut sol = solve_lp_with(&q, opts)?;
        if sol.is_optimal() {
            sol.value = p.value_at(&sol.x);
            sol.duals.clear();
            sol.primal_residual = p.primal_residual(&sol.x);
        }
        out.push(sol);
    }
    Ok(out)
}

/// Solutions whose `x` differ by more than `tol` in sup-norm, first seen kept.
pub fn distinct_solutions(solutions: &[LpSolution], tol: f64) -> Vec<&LpSolution> {
    let mut kept: Vec<&LpSolution> = Vec::new();
    for s in solutions.iter().filter(|s| s.is_optimal()) {
        let seen = kept.iter().any(|k| {
            k.x.iter()
                .zip(&s.x)
                .all(|(a, b)| (a - b).abs() <= tol)
        });
        if !seen {
            kept.push(s);
        }
    }
    kept
}
