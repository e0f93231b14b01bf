//! Discrete multi-marginal optimal partial transport and partial barycenters
//! for quadratic cost, with closed-form 1D fixtures and executable checks.

pub mod analytic1d;
pub mod barycenter;
pub mod error;
pub mod io;
pub mod linprog;
pub mod measure;
pub mod multimarginal;
pub mod options;
pub mod transport;
pub mod verify;

pub use analytic1d::{Example42Instance, Prop41Instance};
pub use barycenter::{
    eval_objective, reconstruct_mm_plan, solve_partial_barycenter, uniqueness_threshold,
    BarycenterReport,
};
pub use error::{Error, Result};
pub use linprog::{LinearProgram, LpSolution, LpStatus, SolverOptions};
pub use measure::{DiscreteMeasure, Histogram, Interval, MassParameter, Measure, PiecewiseConstantDensity};
pub use multimarginal::{CostSpec, GeneralizedCost, TensorEntry, TensorPlan};
pub use options::SolveOptions;
pub use transport::{solve_ot, solve_partial_ot, Coupling, PartialPlanReport};
pub use verify::CheckReport;
