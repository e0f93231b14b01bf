//! Two-marginal balanced and partial transport with squared Euclidean cost.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linprog::{solve_lp_with, LinearProgram, LpSolution, LpStatus};
use crate::measure::{sq_dist, DiscreteMeasure, MassParameter};
use crate::options::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CouplingEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// A transport plan between two discrete measures, stored as index pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub entries: Vec<CouplingEntry>,
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
}

impl Coupling {
    pub fn empty(source: DiscreteMeasure, target: DiscreteMeasure) -> Self {
        Self {
            entries: Vec::new(),
            source,
            target,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    /// `sum mass * |x_i - y_j|^2`.
    pub fn cost(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.mass * sq_dist(self.source.point(e.source), self.target.point(e.target)))
            .sum()
    }

    /// First marginal, supported on the source atoms.
    pub fn left_marginal(&self) -> Result<DiscreteMeasure> {
        let mut w = vec![0.0; self.source.len()];
        for e in &self.entries {
            w[e.source] += e.mass;
        }
        DiscreteMeasure::new(self.source.dim(), self.source.points().to_vec(), w)
    }

    pub fn right_marginal(&self) -> Result<DiscreteMeasure> {
        let mut w = vec![0.0; self.target.len()];
        for e in &self.entries {
            w[e.target] += e.mass;
        }
        DiscreteMeasure::new(self.target.dim(), self.target.points().to_vec(), w)
    }
}

/// Optimal partial plan together with its value and active submeasures.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPlanReport {
    pub plan: Coupling,
    pub cost: f64,
    pub active_left: DiscreteMeasure,
    pub active_right: DiscreteMeasure,
    pub m: MassParameter,
    pub iterations: usize,
}

fn require_optimal(sol: &LpSolution, context: &str) -> Result<()> {
    match sol.status {
        LpStatus::Optimal => Ok(()),
        status => Err(Error::LpStatus {
            status: status.as_str(),
            context: context.to_string(),
        }),
    }
}

/// Balanced optimal transport: the plan and `W_2^2(mu, nu)`.
pub fn solve_ot(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(Coupling, f64)> {
    solve_ot_with(mu, nu, &SolveOptions::default())
}

pub fn solve_ot_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &SolveOptions,
) -> Result<(Coupling, f64)> {
    if mu.dim() != nu.dim() && !mu.is_empty() && !nu.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if !opts.masses_match(a, b) {
        return Err(Error::MassMismatch { left: a, right: b });
    }
    if mu.is_empty() || nu.is_empty() {
        return Ok((Coupling::empty(mu.clone(), nu.clone()), 0.0));
    }

    let (n, k) = (mu.len(), nu.len());
    let mut cost = Vec::with_capacity(n * k);
    for x in mu.points() {
        for y in nu.points() {
            cost.push(sq_dist(x, y));
        }
    }
    let mut lp = LinearProgram::new(cost);
    for i in 0..n {
        lp.add_eq((0..k).map(|j| (i * k + j, 1.0)).collect(), mu.weight(i));
    }
    // Absorb the admissible float mismatch so the equality system is consistent.
    let scale = a / b;
    for j in 0..k {
        lp.add_eq((0..n).map(|i| (i * k + j, 1.0)).collect(), nu.weight(j) * scale);
    }
    let sol = solve_lp_with(&lp, &opts.lp)?;
    require_optimal(&sol, "balanced transport")?;

    let entries = (0..n * k)
        .filter(|&c| sol.x[c] > opts.entry_tol)
        .map(|c| CouplingEntry {
            source: c / k,
            target: c % k,
            mass: sol.x[c],
        })
        .collect();
    let plan = Coupling {
        entries,
        source: mu.clone(),
        target: nu.clone(),
    };
    let value = plan.cost();
    Ok((plan, value))
}

/// Optimal partial transport of exactly `m` units between submeasures of
/// `mu` and `nu`.
///
/// The problem is made balanced by a dummy source atom of weight `|nu| - m`
/// and a dummy target atom of weight `|mu| - m`, both reachable at zero cost
/// from every real atom. No dummy-to-dummy column exists, which forces the
/// real-to-real part of the plan to carry exactly `m`.
pub fn solve_partial_ot(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    m: MassParameter,
) -> Result<PartialPlanReport> {
    solve_partial_ot_with(mu, nu, m, &SolveOptions::default())
}

pub fn solve_partial_ot_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    m: MassParameter,
    opts: &SolveOptions,
) -> Result<PartialPlanReport> {
    let (a, b) = (mu.total_mass(), nu.total_mass());
    m.check_against(&[a, b])?;
    if mu.dim() != nu.dim() && !mu.is_empty() && !nu.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let mv = m.value();
    if opts.is_zero_mass(mv) {
        return Ok(PartialPlanReport {
            plan: Coupling::empty(mu.clone(), nu.clone()),
            cost: 0.0,
            active_left: DiscreteMeasure::empty(mu.dim()),
            active_right: DiscreteMeasure::empty(nu.dim()),
            m,
            iterations: 0,
        });
    }

    let (n, k) = (mu.len(), nu.len());
    let real = n * k;
    let to_dummy = real; // x_i -> y_hat, n columns
    let from_dummy = real + n; // x_hat -> y_j, k columns
    let mut cost = Vec::with_capacity(real + n + k);
    for x in mu.points() {
        for y in nu.points() {
            cost.push(sq_dist(x, y));
        }
    }
    cost.resize(real + n + k, 0.0);

    let mut lp = LinearProgram::new(cost);
    for i in 0..n {
        let mut terms: Vec<(usize, f64)> = (0..k).map(|j| (i * k + j, 1.0)).collect();
        terms.push((to_dummy + i, 1.0));
        lp.add_eq(terms, mu.weight(i));
    }
    lp.add_eq(
        (0..k).map(|j| (from_dummy + j, 1.0)).collect(),
        (b - mv).max(0.0),
    );
    for j in 0..k {
        let mut terms: Vec<(usize, f64)> = (0..n).map(|i| (i * k + j, 1.0)).collect();
        terms.push((from_dummy + j, 1.0));
        lp.add_eq(terms, nu.weight(j));
    }
    lp.add_eq(
        (0..n).map(|i| (to_dummy + i, 1.0)).collect(),
        (a - mv).max(0.0),
    );

    let sol = solve_lp_with(&lp, &opts.lp)?;
    require_optimal(&sol, "partial transport")?;

    let entries: Vec<CouplingEntry> = (0..real)
        .filter(|&c| sol.x[c] > opts.entry_tol)
        .map(|c| CouplingEntry {
            source: c / k,
            target: c % k,
            mass: sol.x[c],
        })
        .collect();
    let plan = Coupling {
        entries,
        source: mu.clone(),
        target: nu.clone(),
    };
    let cost = plan.cost();
    let active_left = plan.left_marginal()?;
    let active_right = plan.right_marginal()?;
    Ok(PartialPlanReport {
        plan,
        cost,
        active_left,
        active_right,
        m,
        iterations: sol.iterations,
    })
}

/// One piece of a monotone 1D assignment: `mass` units from `source` to
/// `target`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MapPiece {
    pub source: f64,
    pub target: f64,
    pub mass: f64,
}

/// The increasing (quantile) coupling between two 1D measures of equal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMap {
    pub pieces: Vec<MapPiece>,
}

impl MonotoneMap {
    pub fn cost(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.mass * (p.source - p.target).powi(2))
            .sum()
    }

    /// Mass-weighted mean target of each source atom, in increasing order.
    pub fn barycentric_projection(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64, f64)> = Vec::new();
        for p in &self.pieces {
            match out.last_mut() {
                Some(last) if last.0 == p.source => {
                    last.1 += p.mass * p.target;
                    last.2 += p.mass;
                }
                _ => out.push((p.source, p.mass * p.target, p.mass)),
            }
        }
        out.into_iter().map(|(x, s, w)| (x, s / w)).collect()
    }
}

/// North-west-corner rule on sorted atoms.
pub fn extract_monotone_map_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<MonotoneMap> {
    for d in [mu.dim(), nu.dim()] {
        if d != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: d,
            });
        }
    }
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if !SolveOptions::default().masses_match(a, b) {
        return Err(Error::MassMismatch { left: a, right: b });
    }
    // Canonical 1D measures are already sorted.
    let mut pieces = Vec::with_capacity(mu.len() + nu.len());
    let (mut i, mut j) = (0, 0);
    let mut left_i = mu.weights().first().copied().unwrap_or(0.0);
    let mut left_j = nu.weights().first().copied().unwrap_or(0.0);
    while i < mu.len() && j < nu.len() {
        let q = left_i.min(left_j);
        if q > 0.0 {
            pieces.push(MapPiece {
                source: mu.point(i)[0],
                target: nu.point(j)[0],
                mass: q,
            });
        }
        left_i -= q;
        left_j -= q;
        if left_i <= left_j {
            i += 1;
            left_i = mu.weights().get(i).copied().unwrap_or(0.0);
        } else {
            j += 1;
            left_j = nu.weights().get(j).copied().unwrap_or(0.0);
        }
    }
    Ok(MonotoneMap { pieces })
}

/// Plans whose support can be listed as index tuples into their marginals.
pub trait PlanSupport {
    fn arity(&self) -> usize;
    fn support_tuples(&self) -> Vec<(Vec<usize>, f64)>;
}

impl PlanSupport for Coupling {
    fn arity(&self) -> usize {
        2
    }

    fn support_tuples(&self) -> Vec<(Vec<usize>, f64)> {
        self.entries
            .iter()
            .map(|e| (vec![e.source, e.target], e.mass))
            .collect()
    }
}

/// Whether each atom of marginal `over` is paired with a single tuple.
pub fn plan_is_graphical<P: PlanSupport>(plan: &P, over: usize, tol: f64) -> Result<bool> {
    if over >= plan.arity() {
        return Err(Error::OutOfRange(format!(
            "marginal {over} of a {}-marginal plan",
            plan.arity()
        )));
    }
    let mut seen: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (tuple, mass) in plan.support_tuples() {
        if mass <= tol {
            continue;
        }
        match seen.get(&tuple[over]) {
            Some(existing) if *existing != tuple => return Ok(false),
            Some(_) => {}
            None => {
                seen.insert(tuple[over], tuple);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::is_submeasure;

    fn m(v: f64) -> MassParameter {
        MassParameter::new(v).unwrap()
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 0.5), (1.0, 0.25), (4.0, 0.25)]).unwrap();
        let (plan, cost) = solve_ot(&mu, &mu).unwrap();
        assert!(cost.abs() < 1e-12);
        assert!(plan.entries.iter().all(|e| e.source == e.target));
    }

    #[test]
    fn single_pair_cost() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(3.0, 1.0)]).unwrap();
        assert!((solve_ot(&mu, &nu).unwrap().1 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn mass_mismatch_rejected() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(3.0, 2.0)]).unwrap();
        assert!(matches!(solve_ot(&mu, &nu), Err(Error::MassMismatch { .. })));
        assert!(matches!(
            extract_monotone_map_1d(&mu, &nu),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn partial_with_full_mass_reduces_to_balanced() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 0.4), (1.0, 0.6)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(0.5, 0.7), (3.0, 0.3)]).unwrap();
        let full = solve_partial_ot(&mu, &nu, m(1.0)).unwrap();
        let (_, cost) = solve_ot(&mu, &nu).unwrap();
        assert!((full.cost - cost).abs() < 1e-12);
    }

    #[test]
    fn partial_half_unit() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(1.0, 1.0)]).unwrap();
        let r = solve_partial_ot(&mu, &nu, m(0.5)).unwrap();
        assert!((r.cost - 0.5).abs() < 1e-12);
        assert!((r.plan.total_mass() - 0.5).abs() < 1e-12);
        assert!(is_submeasure(&r.active_left, &mu, 1e-12));
        assert!(is_submeasure(&r.active_right, &nu, 1e-12));
    }

    #[test]
    fn partial_prefers_closest_pairs() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 1.0), (10.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(9.0, 1.0), (20.0, 1.0)]).unwrap();
        let r = solve_partial_ot(&mu, &nu, m(1.0)).unwrap();
        assert!((r.cost - 1.0).abs() < 1e-12);
        assert_eq!(r.active_left, DiscreteMeasure::from_1d(&[(10.0, 1.0)]).unwrap());
    }

    #[test]
    fn partial_zero_mass_skips_the_solver() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let r = solve_partial_ot(&mu, &mu, m(0.0)).unwrap();
        assert!(r.plan.entries.is_empty());
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn partial_mass_out_of_range() {
        let mu = DiscreteMeasure::from_1d(&[(0.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(1.0, 2.0)]).unwrap();
        assert!(matches!(
            solve_partial_ot(&mu, &nu, m(1.5)),
            Err(Error::MassOutOfRange { .. })
        ));
    }

    #[test]
    fn monotone_map_examples() {
        let mu = DiscreteMeasure::unit_diracs_1d(&[0.0, 1.0]).unwrap();
        let nu = DiscreteMeasure::unit_diracs_1d(&[2.0, 3.0]).unwrap();
        let map = extract_monotone_map_1d(&mu, &nu).unwrap();
        assert_eq!(
            map.pieces,
            vec![
                MapPiece { source: 0.0, target: 2.0, mass: 1.0 },
                MapPiece { source: 1.0, target: 3.0, mass: 1.0 },
            ]
        );
        assert_eq!(map.cost(), 8.0);

        let same = extract_monotone_map_1d(&mu, &mu).unwrap();
        assert!(same.pieces.iter().all(|p| p.source == p.target));
    }

    #[test]
    fn monotone_map_rejects_higher_dimensions() {
        let mu = DiscreteMeasure::new(2, vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        assert!(matches!(
            extract_monotone_map_1d(&mu, &mu),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn graphical_queries() {
        let mu = DiscreteMeasure::unit_diracs_1d(&[0.0, 1.0]).unwrap();
        let single = Coupling {
            entries: vec![CouplingEntry { source: 0, target: 1, mass: 1.0 }],
            source: mu.clone(),
            target: mu.clone(),
        };
        assert!(plan_is_graphical(&single, 0, 0.0).unwrap());
        let split = Coupling {
            entries: vec![
                CouplingEntry { source: 0, target: 0, mass: 0.5 },
                CouplingEntry { source: 0, target: 1, mass: 0.5 },
            ],
            source: mu.clone(),
            target: mu.clone(),
        };
        assert!(!plan_is_graphical(&split, 0, 0.0).unwrap());
        assert!(plan_is_graphical(&split, 1, 0.0).unwrap());
        assert!(plan_is_graphical(&split, 2, 0.0).is_err());
    }
}
