//! Partial barycenters, solved through the multi-marginal partial problem.
//!
//! For quadratic cost an optimal multi-marginal partial plan `sigma` yields an
//! optimal partial barycenter `A_# sigma` (with `A` the average map), and the
//! values agree up to the factor `2N`:
//! `C(sigma) = 2N * sum_j T_m(rho_j, A_# sigma)`. Going the other way, gluing
//! the `N` optimal partial plans along a barycenter rebuilds an optimal
//! multi-marginal plan.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, MassParameter, Measure};
use crate::multimarginal::{
    average_point, solve_mm_partial_with, CostSpec, TensorEntry, TensorPlan,
};
use crate::options::SolveOptions;
use crate::transport::{solve_partial_ot_with, PartialPlanReport};

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterReport {
    pub barycenter: DiscreteMeasure,
    /// `F_m(nu) = sum_j T_m(rho_j, nu)`.
    pub objective: f64,
    pub source_plan: TensorPlan,
    pub per_marginal_costs: Vec<f64>,
}

impl BarycenterReport {
    /// `|C(sigma) - 2N F_m(nu)|`.
    pub fn identity_residual(&self) -> f64 {
        let n = self.per_marginal_costs.len() as f64;
        (self.source_plan.cost - 2.0 * n * self.objective).abs()
    }
}

/// The `N` optimal partial plans from each `rho_j` onto `nu`.
pub fn partial_plans_onto(
    nu: &DiscreteMeasure,
    rhos: &[DiscreteMeasure],
    m: MassParameter,
    opts: &SolveOptions,
) -> Result<Vec<PartialPlanReport>> {
    let mass = nu.total_mass();
    if !opts.masses_match(mass, m.value()) {
        return Err(Error::MassMismatch {
            left: mass,
            right: m.value(),
        });
    }
    rhos.iter()
        .map(|rho| solve_partial_ot_with(rho, nu, m, opts))
        .collect()
}

/// `F_m(nu, rho_1..rho_N) = sum_j T_m(rho_j, nu)`, summed in marginal order.
pub fn eval_objective(nu: &DiscreteMeasure, rhos: &[DiscreteMeasure], m: MassParameter) -> Result<f64> {
    eval_objective_with(nu, rhos, m, &SolveOptions::default())
}

pub fn eval_objective_with(
    nu: &DiscreteMeasure,
    rhos: &[DiscreteMeasure],
    m: MassParameter,
    opts: &SolveOptions,
) -> Result<f64> {
    Ok(partial_plans_onto(nu, rhos, m, opts)?
        .iter()
        .map(|r| r.cost)
        .sum())
}

/// `A_# sigma`.
pub fn average_pushforward(plan: &TensorPlan) -> Result<DiscreteMeasure> {
    let dim = plan.marginals.first().map_or(1, DiscreteMeasure::dim);
    let mut points = Vec::with_capacity(plan.entries.len());
    let mut weights = Vec::with_capacity(plan.entries.len());
    for e in &plan.entries {
        points.push(average_point(&plan.entry_points(e))?);
        weights.push(e.mass);
    }
    DiscreteMeasure::new(dim, points, weights)
}

pub fn solve_partial_barycenter(rhos: &[DiscreteMeasure], m: MassParameter) -> Result<BarycenterReport> {
    solve_partial_barycenter_with(rhos, m, &SolveOptions::default())
}

pub fn solve_partial_barycenter_with(
    rhos: &[DiscreteMeasure],
    m: MassParameter,
    opts: &SolveOptions,
) -> Result<BarycenterReport> {
    let source_plan = solve_mm_partial_with(rhos, m, &CostSpec::PairwiseQuadratic, opts)?;
    let dim = rhos.first().map_or(1, DiscreteMeasure::dim);
    if source_plan.entries.is_empty() {
        return Ok(BarycenterReport {
            barycenter: DiscreteMeasure::empty(dim),
            objective: 0.0,
            source_plan,
            per_marginal_costs: vec![0.0; rhos.len()],
        });
    }
    let barycenter = average_pushforward(&source_plan)?;
    // Evaluate F at the pushed-forward measure's exact mass so float drift in
    // the plan total does not trip the mass precondition.
    let m_nu = MassParameter::new(barycenter.total_mass())?;
    let per_marginal_costs: Vec<f64> = partial_plans_onto(&barycenter, rhos, m_nu, opts)?
        .iter()
        .map(|r| r.cost)
        .collect();
    Ok(BarycenterReport {
        barycenter,
        objective: per_marginal_costs.iter().sum(),
        source_plan,
        per_marginal_costs,
    })
}

/// Glues the `N` optimal partial plans `rho_j -> nu` along the atoms of `nu`.
///
/// Each atom of `nu` must be served by a single atom of every `rho_j`;
/// otherwise [`Error::NonGraphical`] names the first offending atom.
pub fn reconstruct_mm_plan(
    nu: &DiscreteMeasure,
    rhos: &[DiscreteMeasure],
    m: MassParameter,
) -> Result<TensorPlan> {
    reconstruct_mm_plan_with(nu, rhos, m, &SolveOptions::default())
}

pub fn reconstruct_mm_plan_with(
    nu: &DiscreteMeasure,
    rhos: &[DiscreteMeasure],
    m: MassParameter,
    opts: &SolveOptions,
) -> Result<TensorPlan> {
    let plans = partial_plans_onto(nu, rhos, m, opts)?;
    let ignore = 1e-10 * (1.0 + m.value());

    // sources[a][j] = atom of rho_j feeding atom a of nu
    let mut sources: Vec<Vec<Option<usize>>> = vec![vec![None; rhos.len()]; nu.len()];
    for (j, report) in plans.iter().enumerate() {
        for e in report.plan.entries.iter().filter(|e| e.mass > ignore) {
            match sources[e.target][j] {
                Some(i) if i != e.source => {
                    return Err(Error::NonGraphical {
                        marginal: j,
                        atom: e.target,
                        point: nu.point(e.target).to_vec(),
                    })
                }
                _ => sources[e.target][j] = Some(e.source),
            }
        }
    }

    let mut glued: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (a, row) in sources.into_iter().enumerate() {
        // Atoms of nu that no plan reaches carry only round-off mass.
        let Some(indices) = row.into_iter().collect::<Option<Vec<usize>>>() else {
            continue;
        };
        *glued.entry(indices).or_insert(0.0) += nu.weight(a);
    }
    let mut plan = TensorPlan::empty(rhos.to_vec());
    plan.entries = glued
        .into_iter()
        .map(|(indices, mass)| TensorEntry { indices, mass })
        .collect();
    plan.cost = plan.evaluate_cost(&CostSpec::PairwiseQuadratic)?;
    Ok(plan)
}

/// `|min_j rho_j|`: at or above this mass the continuum barycenter is unique.
/// Below it any common submeasure of mass `m` is an optimal diagonal plan.
pub fn uniqueness_threshold<M: Measure>(rhos: &[M]) -> Result<f64> {
    Ok(M::pointwise_min(rhos)?.total_mass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::PiecewiseConstantDensity;

    fn m(v: f64) -> MassParameter {
        MassParameter::new(v).unwrap()
    }

    fn example42() -> Vec<DiscreteMeasure> {
        vec![
            DiscreteMeasure::unit_diracs_1d(&[-5.0, -3.0]).unwrap(),
            DiscreteMeasure::unit_diracs_1d(&[-1.0, 0.0, 1.0]).unwrap(),
            DiscreteMeasure::unit_diracs_1d(&[3.0, 5.0]).unwrap(),
        ]
    }

    #[test]
    fn objective_at_the_dirac_barycenter() {
        let nu = DiscreteMeasure::unit_diracs_1d(&[0.0]).unwrap();
        let f = eval_objective(&nu, &example42(), m(1.0)).unwrap();
        assert!((f - 18.0).abs() < 1e-9);
    }

    #[test]
    fn objective_vanishes_below_every_marginal() {
        let rho = DiscreteMeasure::from_1d(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(1.0, 1.5)]).unwrap();
        let f = eval_objective(&nu, &[rho.clone(), rho], m(1.5)).unwrap();
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn objective_with_one_marginal_is_partial_transport() {
        let rho = DiscreteMeasure::from_1d(&[(0.0, 1.0), (4.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(1.0, 1.0)]).unwrap();
        let f = eval_objective(&nu, std::slice::from_ref(&rho), m(1.0)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_mass_mismatch() {
        let nu = DiscreteMeasure::unit_diracs_1d(&[0.0]).unwrap();
        assert!(matches!(
            eval_objective(&nu, &example42(), m(2.0)),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn reconstruct_from_dirac_barycenter() {
        let nu = DiscreteMeasure::unit_diracs_1d(&[0.0]).unwrap();
        let plan = reconstruct_mm_plan(&nu, &example42(), m(1.0)).unwrap();
        assert_eq!(plan.entries.len(), 1);
        let pts: Vec<f64> = plan.entry_points(&plan.entries[0]).iter().map(|p| p[0]).collect();
        assert_eq!(pts, vec![-3.0, 0.0, 3.0]);
        assert!((plan.cost - 108.0).abs() < 1e-9);
    }

    #[test]
    fn reconstruct_reports_split_atoms() {
        // nu sits halfway between two atoms of rho; its unit of mass must be
        // split across both.
        let rho = DiscreteMeasure::from_1d(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(1.0, 1.0)]).unwrap();
        let err = reconstruct_mm_plan(&nu, &[rho.clone(), rho], m(1.0)).unwrap_err();
        assert!(matches!(err, Error::NonGraphical { atom: 0, .. }));
    }

    #[test]
    fn reconstruct_diagonal() {
        let rho = DiscreteMeasure::from_1d(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        let nu = DiscreteMeasure::from_1d(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let plan = reconstruct_mm_plan(&nu, &[rho.clone(), rho.clone(), rho], m(1.0)).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert!(plan.entries.iter().all(|e| e.indices.iter().all(|&i| i == e.indices[0])));
    }

    #[test]
    fn threshold_examples() {
        let a = DiscreteMeasure::unit_diracs_1d(&[0.0]).unwrap();
        let b = DiscreteMeasure::unit_diracs_1d(&[1.0]).unwrap();
        assert_eq!(uniqueness_threshold(&[a.clone(), b]).unwrap(), 0.0);
        let c = DiscreteMeasure::from_1d(&[(0.0, 2.0), (3.0, 0.5)]).unwrap();
        assert_eq!(uniqueness_threshold(&[c.clone(), c.clone(), c]).unwrap(), 2.5);

        let d1 = PiecewiseConstantDensity::uniform(0.0, 2.0, 1.0).unwrap();
        let d2 = PiecewiseConstantDensity::uniform(1.0, 3.0, 0.5).unwrap();
        assert!((uniqueness_threshold(&[d1, d2]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_budget_gives_empty_barycenter() {
        let r = solve_partial_barycenter(&example42(), m(0.0)).unwrap();
        assert!(r.barycenter.is_empty());
        assert_eq!(r.objective, 0.0);
    }
}
