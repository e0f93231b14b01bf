use crate::linprog::SolverOptions;

/// Default cap on the number of tensor tuples (LP columns) in one solve.
pub const DEFAULT_MAX_TUPLES: usize = 200_000;

/// Knobs shared by the transport, multi-marginal and barycenter solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub lp: SolverOptions,
    pub max_tuples: usize,
    /// Relative slack for "equal mass" preconditions.
    pub mass_tol: f64,
    /// Plan entries at or below this mass are dropped.
    pub entry_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            lp: SolverOptions::default(),
            max_tuples: DEFAULT_MAX_TUPLES,
            mass_tol: 1e-9,
            entry_tol: 1e-13,
        }
    }
}

impl SolveOptions {
    pub fn with_max_tuples(mut self, cap: usize) -> Self {
        self.max_tuples = cap;
        self
    }

    pub(crate) fn masses_match(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.mass_tol * (1.0 + a.abs().max(b.abs()))
    }

    pub(crate) fn is_zero_mass(&self, m: f64) -> bool {
        m <= self.mass_tol
    }
}
