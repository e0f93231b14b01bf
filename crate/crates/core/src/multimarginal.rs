//! N-marginal balanced and partial transport over sparse cost tensors.
//!
//! Every index tuple `(i_1, ..., i_N)` into the marginal supports becomes one
//! LP column, enumerated in lexicographic order (last index fastest) so column
//! numbering, and hence the pivot sequence, never depends on anything but the
//! input. The intended scale is `N <= 4` with a few dozen atoms per marginal;
//! the tuple count is capped by [`SolveOptions::max_tuples`].

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linprog::{solve_lp_with, LinearProgram, LpSolution, LpStatus};
use crate::measure::{sq_dist, DiscreteMeasure, MassParameter};
use crate::options::SolveOptions;
use crate::transport::PlanSupport;

/// `c_j(x_j, y)` for one marginal.
pub type CostFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Costs of the form `c(x_1..x_N) = min_{y in Y} sum_j c_j(x_j, y)` over a
/// finite candidate set `Y`.
#[derive(Clone)]
pub struct GeneralizedCost {
    pub costs: Vec<CostFn>,
    pub candidates: Vec<Vec<f64>>,
}

impl fmt::Debug for GeneralizedCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedCost")
            .field("costs", &self.costs.len())
            .field("candidates", &self.candidates)
            .finish()
    }
}

impl GeneralizedCost {
    pub fn new(costs: Vec<CostFn>, candidates: Vec<Vec<f64>>) -> Self {
        Self { costs, candidates }
    }

    /// `c_j(x, y) = |x - y|^2` for every marginal.
    pub fn quadratic(n: usize, candidates: Vec<Vec<f64>>) -> Self {
        let c: CostFn = Arc::new(|x: &[f64], y: &[f64]| sq_dist(x, y));
        Self {
            costs: vec![c; n],
            candidates,
        }
    }

    /// Sampled check that every `c_j` is nonnegative and vanishes exactly on
    /// the diagonal. Says nothing about points outside `samples`.
    pub fn check_diagonal_condition(&self, samples: &[Vec<f64>]) -> bool {
        self.costs.iter().all(|c| {
            samples.iter().all(|x| {
                samples.iter().all(|y| {
                    let v = c(x, y);
                    if x == y {
                        v == 0.0
                    } else {
                        v > 0.0
                    }
                })
            })
        })
    }
}

#[derive(Debug, Clone)]
pub enum CostSpec {
    /// `sum_{j != k} |x_j - x_k|^2`, both orders of each pair counted.
    PairwiseQuadratic,
    Generalized(GeneralizedCost),
}

impl CostSpec {
    pub fn eval<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<f64> {
        match self {
            CostSpec::PairwiseQuadratic => pairwise_quadratic_cost(points),
            CostSpec::Generalized(g) => generalized_cost(points, g).map(|(c, _)| c),
        }
    }

    /// The minimizing site `y`: the average for the quadratic cost, the best
    /// candidate otherwise.
    pub fn optimal_site<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<Vec<f64>> {
        match self {
            CostSpec::PairwiseQuadratic => average_point(points),
            CostSpec::Generalized(g) => generalized_cost(points, g).map(|(_, y)| y),
        }
    }
}

fn common_dim<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let d = points.first().map_or(0, |p| p.as_ref().len());
    for p in points {
        if p.as_ref().len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.as_ref().len(),
            });
        }
    }
    Ok(d)
}

pub fn pairwise_quadratic_cost<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    common_dim(points)?;
    let mut total = 0.0;
    for (j, a) in points.iter().enumerate() {
        for b in &points[j + 1..] {
            total += sq_dist(a.as_ref(), b.as_ref());
        }
    }
    Ok(2.0 * total)
}

/// Coordinate-wise mean.
pub fn average_point<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    let d = common_dim(points)?;
    if points.is_empty() {
        return Err(Error::OutOfRange("average of no points".into()));
    }
    let n = points.len() as f64;
    let mut y = vec![0.0; d];
    for p in points {
        for (acc, c) in y.iter_mut().zip(p.as_ref()) {
            *acc += c;
        }
    }
    for c in &mut y {
        *c /= n;
    }
    Ok(y)
}

/// Both sides of `sum_{j != k} |x_j - x_k|^2 = 2N sum_j |x_j - A(x)|^2`, plus
/// a comparison of the average against the supplied candidate sites.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `sum_j |x_j - A(x)|^2`.
    pub average_value: f64,
    /// Smallest `sum_j |x_j - y|^2` over the candidates.
    pub best_candidate_value: Option<f64>,
    pub average_is_minimal: bool,
}

pub fn barycentric_identity_check<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    points: &[P],
    candidates: &[Q],
) -> Result<IdentityCheck> {
    let lhs = pairwise_quadratic_cost(points)?;
    let avg = average_point(points)?;
    let spread = |y: &[f64]| -> f64 { points.iter().map(|p| sq_dist(p.as_ref(), y)).sum() };
    let average_value = spread(&avg);
    let rhs = 2.0 * points.len() as f64 * average_value;
    let best_candidate_value = candidates
        .iter()
        .map(|y| spread(y.as_ref()))
        .reduce(f64::min);
    let slack = 1e-12 * (1.0 + average_value);
    Ok(IdentityCheck {
        lhs,
        rhs,
        average_value,
        best_candidate_value,
        average_is_minimal: best_candidate_value.is_none_or(|b| average_value <= b + slack),
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// `min_{y in Y} sum_j c_j(x_j, y)` and its minimizer; ties go to the
/// lexicographically smallest `y`.
pub fn generalized_cost<P: AsRef<[f64]>>(
    points: &[P],
    gc: &GeneralizedCost,
) -> Result<(f64, Vec<f64>)> {
    if gc.candidates.is_empty() {
        return Err(Error::OutOfRange("empty candidate set".into()));
    }
    if gc.costs.len() != points.len() {
        return Err(Error::OutOfRange(format!(
            "{} cost functions for {} points",
            gc.costs.len(),
            points.len()
        )));
    }
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for y in &gc.candidates {
        let v: f64 = gc
            .costs
            .iter()
            .zip(points)
            .map(|(c, x)| c(x.as_ref(), y))
            .sum();
        let better = match best {
            None => true,
            Some((b, by)) => v < b || (v == b && lex_cmp(y, by).is_lt()),
        };
        if better {
            best = Some((v, y));
        }
    }
    let (v, y) = best.expect("nonempty candidates");
    Ok((v, y.clone()))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TensorEntry {
    pub indices: Vec<usize>,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub columns: usize,
    pub rows: usize,
    pub primal_residual: f64,
}

/// A sparse N-marginal plan. Entry indices point into `marginals`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorPlan {
    pub entries: Vec<TensorEntry>,
    pub marginals: Vec<DiscreteMeasure>,
    pub cost: f64,
    pub diagnostics: SolveDiagnostics,
}

impl TensorPlan {
    pub fn empty(marginals: Vec<DiscreteMeasure>) -> Self {
        Self {
            entries: Vec::new(),
            marginals,
            cost: 0.0,
            diagnostics: SolveDiagnostics::default(),
        }
    }

    /// Builds a plan from explicit point tuples. The marginals are the
    /// coordinate projections of the plan itself; repeated tuples merge.
    pub fn from_point_tuples(tuples: &[(Vec<Vec<f64>>, f64)], cost: &CostSpec) -> Result<Self> {
        let arity = tuples
            .first()
            .map(|t| t.0.len())
            .ok_or_else(|| Error::OutOfRange("plan with no entries".into()))?;
        let dim = tuples[0].0[0].len();
        let mut marginals = Vec::with_capacity(arity);
        for j in 0..arity {
            let points = tuples.iter().map(|t| t.0[j].clone()).collect();
            let weights = tuples.iter().map(|t| t.1).collect();
            marginals.push(DiscreteMeasure::new(dim, points, weights)?);
        }
        let mut entries: Vec<TensorEntry> = Vec::with_capacity(tuples.len());
        for (pts, mass) in tuples {
            let indices = pts
                .iter()
                .zip(&marginals)
                .map(|(p, mu)| mu.find_atom(p))
                .collect::<Option<Vec<_>>>();
            // Zero-mass tuples have no atom to land on.
            let Some(indices) = indices else { continue };
            entries.push(TensorEntry { indices, mass: *mass });
        }
        entries.sort_by(|a, b| a.indices.cmp(&b.indices));
        entries.dedup_by(|b, a| {
            if a.indices == b.indices {
                a.mass += b.mass;
                true
            } else {
                false
            }
        });
        let mut plan = Self {
            entries,
            marginals,
            cost: 0.0,
            diagnostics: SolveDiagnostics::default(),
        };
        plan.cost = plan.evaluate_cost(cost)?;
        Ok(plan)
    }

    pub fn arity(&self) -> usize {
        self.marginals.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn entry_points(&self, e: &TensorEntry) -> Vec<&[f64]> {
        e.indices
            .iter()
            .zip(&self.marginals)
            .map(|(&i, mu)| mu.point(i))
            .collect()
    }

    pub fn evaluate_cost(&self, cost: &CostSpec) -> Result<f64> {
        self.entries
            .iter()
            .map(|e| cost.eval(&self.entry_points(e)).map(|c| c * e.mass))
            .sum()
    }

    /// The j-th marginal of the plan (the j-th active submeasure).
    pub fn active_marginal(&self, j: usize) -> Result<DiscreteMeasure> {
        let mu = self
            .marginals
            .get(j)
            .ok_or_else(|| Error::OutOfRange(format!("marginal {j}")))?;
        let mut w = vec![0.0; mu.len()];
        for e in &self.entries {
            w[e.indices[j]] += e.mass;
        }
        DiscreteMeasure::new(mu.dim(), mu.points().to_vec(), w)
    }

    /// Per-atom active weight of marginal `j`, aligned with its atoms
    /// (zeros kept).
    pub fn marginal_weights(&self, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.marginals[j].len()];
        for e in &self.entries {
            w[e.indices[j]] += e.mass;
        }
        w
    }

    /// Entries as explicit point tuples.
    pub fn point_tuples(&self) -> Vec<(Vec<Vec<f64>>, f64)> {
        self.entries
            .iter()
            .map(|e| {
                (
                    self.entry_points(e).into_iter().map(<[f64]>::to_vec).collect(),
                    e.mass,
                )
            })
            .collect()
    }
}

impl PlanSupport for TensorPlan {
    fn arity(&self) -> usize {
        self.marginals.len()
    }

    fn support_tuples(&self) -> Vec<(Vec<usize>, f64)> {
        self.entries
            .iter()
            .map(|e| (e.indices.clone(), e.mass))
            .collect()
    }
}

/// A multi-marginal LP together with the tuple behind each column.
#[derive(Debug, Clone)]
pub struct MmProblem {
    pub lp: LinearProgram,
    pub marginals: Vec<DiscreteMeasure>,
    /// Column `c` is the tuple `tuples[c * N .. (c + 1) * N]`.
    tuples: Vec<usize>,
    costs: Vec<f64>,
}

impl MmProblem {
    pub fn num_columns(&self) -> usize {
        self.costs.len()
    }

    /// Turns an LP solution vector into a plan.
    pub fn plan_from(&self, sol: &LpSolution, entry_tol: f64) -> TensorPlan {
        let n = self.marginals.len();
        let mut entries = Vec::new();
        let mut cost = 0.0;
        for (c, &x) in sol.x.iter().enumerate() {
            if x > entry_tol {
                entries.push(TensorEntry {
                    indices: self.tuples[c * n..(c + 1) * n].to_vec(),
                    mass: x,
                });
                cost += x * self.costs[c];
            }
        }
        TensorPlan {
            entries,
            marginals: self.marginals.clone(),
            cost,
            diagnostics: SolveDiagnostics {
                iterations: sol.iterations,
                columns: self.costs.len(),
                rows: self.lp.num_constraints(),
                primal_residual: sol.primal_residual,
            },
        }
    }
}

enum Budget {
    Balanced,
    Partial(f64),
}

fn tuple_count(rhos: &[DiscreteMeasure]) -> u128 {
    rhos.iter().map(|r| r.len() as u128).product()
}

fn build_problem(
    rhos: &[DiscreteMeasure],
    cost: &CostSpec,
    budget: Budget,
    opts: &SolveOptions,
) -> Result<MmProblem> {
    let n = rhos.len();
    let count = tuple_count(rhos);
    if count > opts.max_tuples as u128 {
        return Err(Error::TensorTooLarge {
            tuples: count,
            cap: opts.max_tuples,
        });
    }
    let count = count as usize;
    let sizes: Vec<usize> = rhos.iter().map(DiscreteMeasure::len).collect();

    let mut tuples = Vec::with_capacity(count * n);
    let mut costs = Vec::with_capacity(count);
    let mut idx = vec![0usize; n];
    let mut pts: Vec<&[f64]> = Vec::with_capacity(n);
    for _ in 0..count {
        pts.clear();
        pts.extend(idx.iter().zip(rhos).map(|(&i, r)| r.point(i)));
        costs.push(cost.eval(&pts)?);
        tuples.extend_from_slice(&idx);
        for j in (0..n).rev() {
            idx[j] += 1;
            if idx[j] < sizes[j] {
                break;
            }
            idx[j] = 0;
        }
    }

    // Row terms gathered per (marginal, atom).
    let mut rows: Vec<Vec<Vec<(usize, f64)>>> =
        sizes.iter().map(|&s| vec![Vec::new(); s]).collect();
    for c in 0..count {
        for j in 0..n {
            rows[j][tuples[c * n + j]].push((c, 1.0));
        }
    }

    let mut lp = LinearProgram::new(costs.clone());
    match budget {
        Budget::Balanced => {
            let target = rhos[0].total_mass();
            for (j, rho) in rhos.iter().enumerate() {
                let scale = target / rho.total_mass();
                for (a, terms) in std::mem::take(&mut rows[j]).into_iter().enumerate() {
                    lp.add_eq(terms, rho.weight(a) * scale);
                }
            }
        }
        Budget::Partial(m) => {
            for (j, rho) in rhos.iter().enumerate() {
                for (a, terms) in std::mem::take(&mut rows[j]).into_iter().enumerate() {
                    lp.add_le(terms, rho.weight(a));
                }
            }
            lp.add_eq((0..count).map(|c| (c, 1.0)).collect(), m);
        }
    }
    Ok(MmProblem {
        lp,
        marginals: rhos.to_vec(),
        tuples,
        costs,
    })
}

fn check_family(rhos: &[DiscreteMeasure]) -> Result<()> {
    let first = rhos
        .first()
        .ok_or_else(|| Error::OutOfRange("need at least one marginal".into()))?;
    for r in rhos {
        if r.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: r.dim(),
            });
        }
    }
    Ok(())
}

fn check_cost_arity(cost: &CostSpec, n: usize) -> Result<()> {
    if let CostSpec::Generalized(g) = cost {
        if g.costs.len() != n {
            return Err(Error::OutOfRange(format!(
                "{} cost functions for {n} marginals",
                g.costs.len()
            )));
        }
        if g.candidates.is_empty() {
            return Err(Error::OutOfRange("empty candidate set".into()));
        }
    }
    Ok(())
}

/// The balanced multi-marginal LP (marginal equalities).
pub fn mm_problem(
    rhos: &[DiscreteMeasure],
    cost: &CostSpec,
    opts: &SolveOptions,
) -> Result<MmProblem> {
    check_family(rhos)?;
    check_cost_arity(cost, rhos.len())?;
    let m0 = rhos[0].total_mass();
    for r in rhos {
        if !opts.masses_match(m0, r.total_mass()) {
            return Err(Error::MassMismatch {
                left: m0,
                right: r.total_mass(),
            });
        }
    }
    build_problem(rhos, cost, Budget::Balanced, opts)
}

/// The partial multi-marginal LP (marginal inequalities plus `sum = m`).
pub fn mm_partial_problem(
    rhos: &[DiscreteMeasure],
    m: MassParameter,
    cost: &CostSpec,
    opts: &SolveOptions,
) -> Result<MmProblem> {
    check_family(rhos)?;
    check_cost_arity(cost, rhos.len())?;
    let masses: Vec<f64> = rhos.iter().map(DiscreteMeasure::total_mass).collect();
    m.check_against(&masses)?;
    build_problem(rhos, cost, Budget::Partial(m.value()), opts)
}

fn solve_problem(problem: &MmProblem, opts: &SolveOptions, context: &str) -> Result<TensorPlan> {
    let sol = solve_lp_with(&problem.lp, &opts.lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(problem.plan_from(&sol, opts.entry_tol)),
        status => Err(Error::LpStatus {
            status: status.as_str(),
            context: context.to_string(),
        }),
    }
}

/// Balanced multi-marginal transport.
pub fn solve_mm(rhos: &[DiscreteMeasure], cost: &CostSpec) -> Result<TensorPlan> {
    solve_mm_with(rhos, cost, &SolveOptions::default())
}

pub fn solve_mm_with(
    rhos: &[DiscreteMeasure],
    cost: &CostSpec,
    opts: &SolveOptions,
) -> Result<TensorPlan> {
    if rhos.iter().any(DiscreteMeasure::is_empty) {
        check_family(rhos)?;
        if rhos.iter().all(|r| opts.is_zero_mass(r.total_mass())) {
            return Ok(TensorPlan::empty(rhos.to_vec()));
        }
    }
    let problem = mm_problem(rhos, cost, opts)?;
    solve_problem(&problem, opts, "multi-marginal transport")
}

/// Multi-marginal partial transport of exactly `m` units.
pub fn solve_mm_partial(
    rhos: &[DiscreteMeasure],
    m: MassParameter,
    cost: &CostSpec,
) -> Result<TensorPlan> {
    solve_mm_partial_with(rhos, m, cost, &SolveOptions::default())
}

pub fn solve_mm_partial_with(
    rhos: &[DiscreteMeasure],
    m: MassParameter,
    cost: &CostSpec,
    opts: &SolveOptions,
) -> Result<TensorPlan> {
    check_family(rhos)?;
    let masses: Vec<f64> = rhos.iter().map(DiscreteMeasure::total_mass).collect();
    m.check_against(&masses)?;
    if opts.is_zero_mass(m.value()) {
        return Ok(TensorPlan::empty(rhos.to_vec()));
    }
    let problem = mm_partial_problem(rhos, m, cost, opts)?;
    solve_problem(&problem, opts, "multi-marginal partial transport")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_cost_examples() {
        assert_eq!(pairwise_quadratic_cost(&[[0.0], [1.0]]).unwrap(), 2.0);
        assert_eq!(pairwise_quadratic_cost(&[[-3.0], [0.0], [3.0]]).unwrap(), 108.0);
        assert_eq!(pairwise_quadratic_cost(&[[2.0, 1.0]; 4]).unwrap(), 0.0);
        assert!(pairwise_quadratic_cost(&[vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn average_examples() {
        assert_eq!(average_point(&[[-3.0], [0.0], [3.0]]).unwrap(), vec![0.0]);
        assert_eq!(average_point(&[[1.5, 2.0]; 3]).unwrap(), vec![1.5, 2.0]);
        assert_eq!(average_point(&[[0.0, 2.0], [1.0, 4.0]]).unwrap(), vec![0.5, 3.0]);
    }

    #[test]
    fn identity_on_the_dirac_triple() {
        let c = barycentric_identity_check(&[[-3.0], [0.0], [3.0]], &[[1.0], [-0.5]]).unwrap();
        assert_eq!(c.lhs, 108.0);
        assert_eq!(c.rhs, 108.0);
        assert!(c.average_is_minimal);
    }

    #[test]
    fn generalized_cost_quadratic_matches_identity() {
        let pts = [[-3.0], [0.5], [3.5]];
        let avg = average_point(&pts).unwrap();
        let gc = GeneralizedCost::quadratic(3, vec![vec![-1.0], avg.clone(), vec![2.0]]);
        let (c, y) = generalized_cost(&pts, &gc).unwrap();
        assert_eq!(y, avg);
        let lhs = pairwise_quadratic_cost(&pts).unwrap();
        assert!((lhs - 6.0 * c).abs() < 1e-12 * lhs);
    }

    #[test]
    fn generalized_cost_edge_cases() {
        let gc = GeneralizedCost::quadratic(2, vec![vec![1.0], vec![0.0]]);
        let (c, y) = generalized_cost(&[[1.0], [1.0]], &gc).unwrap();
        assert_eq!((c, y), (0.0, vec![1.0]));

        let single = GeneralizedCost::quadratic(2, vec![vec![2.0]]);
        assert_eq!(generalized_cost(&[[0.0], [1.0]], &single).unwrap().0, 5.0);

        // Equidistant candidates: the lexicographically smaller one wins.
        let tie = GeneralizedCost::quadratic(2, vec![vec![1.0], vec![-1.0]]);
        assert_eq!(generalized_cost(&[[0.0], [0.0]], &tie).unwrap().1, vec![-1.0]);

        let none = GeneralizedCost::quadratic(2, vec![]);
        assert!(generalized_cost(&[[0.0], [0.0]], &none).is_err());
    }

    #[test]
    fn diagonal_condition_sampling() {
        let gc = GeneralizedCost::quadratic(2, vec![vec![0.0]]);
        assert!(gc.check_diagonal_condition(&[vec![0.0], vec![1.0], vec![2.5]]));
        let flat: CostFn = Arc::new(|_: &[f64], _: &[f64]| 0.0);
        let bad = GeneralizedCost::new(vec![flat], vec![vec![0.0]]);
        assert!(!bad.check_diagonal_condition(&[vec![0.0], vec![1.0]]));
    }

    #[test]
    fn identical_diracs_give_the_diagonal() {
        let d = DiscreteMeasure::from_1d(&[(0.7, 1.0)]).unwrap();
        let plan = solve_mm(&[d.clone(), d.clone(), d], &CostSpec::PairwiseQuadratic).unwrap();
        assert_eq!(plan.entries, vec![TensorEntry { indices: vec![0, 0, 0], mass: 1.0 }]);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn tensor_cap_is_enforced() {
        let d = DiscreteMeasure::unit_diracs_1d(&[0.0, 1.0, 2.0]).unwrap();
        let opts = SolveOptions::default().with_max_tuples(26);
        let err = solve_mm_with(&[d.clone(), d.clone(), d], &CostSpec::PairwiseQuadratic, &opts)
            .unwrap_err();
        assert!(matches!(err, Error::TensorTooLarge { tuples: 27, cap: 26 }));
    }

    #[test]
    fn balanced_mass_mismatch() {
        let a = DiscreteMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let b = DiscreteMeasure::from_1d(&[(0.0, 2.0)]).unwrap();
        assert!(matches!(
            solve_mm(&[a, b], &CostSpec::PairwiseQuadratic),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn partial_zero_mass_is_empty() {
        let a = DiscreteMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let plan = solve_mm_partial(
            &[a.clone(), a],
            MassParameter::new(0.0).unwrap(),
            &CostSpec::PairwiseQuadratic,
        )
        .unwrap();
        assert!(plan.entries.is_empty());
    }

    #[test]
    fn from_point_tuples_merges_and_projects() {
        let tuples = vec![
            (vec![vec![0.0], vec![1.0]], 0.5),
            (vec![vec![0.0], vec![1.0]], 0.25),
            (vec![vec![2.0], vec![2.0]], 1.0),
        ];
        let plan = TensorPlan::from_point_tuples(&tuples, &CostSpec::PairwiseQuadratic).unwrap();
        assert_eq!(plan.entries.len(), 2);
        assert_eq!(plan.marginals[0], DiscreteMeasure::from_1d(&[(0.0, 0.75), (2.0, 1.0)]).unwrap());
        assert!((plan.cost - 0.75 * 2.0).abs() < 1e-15);
    }
}
