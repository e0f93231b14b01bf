//! Closed-form 1D instances used as ground truth.
//!
//! [`Prop41Instance`] is the three-marginal family on the line whose partial
//! barycenters move non-monotonically in `m`; [`Example42Instance`] is the
//! Dirac instance whose active supports are not nested.

use crate::error::{Error, Result};
use crate::measure::{discretize, DiscreteMeasure, Histogram, Interval, PiecewiseConstantDensity};
use crate::multimarginal::{CostSpec, TensorPlan};

/// Marginals `rho_1 = 1 on [0, 1]`, `rho_2 = 1/eps on [2, 2 + eps/2]` then
/// `1 on [2 + eps/2, 3]`, and `rho_3 = rho3_density on [1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Prop41Instance {
    pub epsilon: f64,
    pub rho3_density: f64,
}

/// Interval on which `nu^m` strictly exceeds `nu^mbar`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NonmonotoneWitness {
    pub interval: Interval,
    pub density_small: f64,
    pub density_large: f64,
    /// Integral of `(nu^m - nu^mbar)_+` over the interval.
    pub excess: f64,
}

impl Prop41Instance {
    /// Uses `rho3_density = 2/(eps+1) + 0.1`.
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_rho3_density(epsilon, 2.0 / (epsilon + 1.0) + 0.1)
    }

    pub fn with_rho3_density(epsilon: f64, rho3_density: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::OutOfRange(format!("epsilon {epsilon} not in (0, 1)")));
        }
        if rho3_density <= 2.0 / (epsilon + 1.0) || !rho3_density.is_finite() {
            return Err(Error::OutOfRange(format!(
                "rho3 density {rho3_density} must exceed 2/(eps+1)"
            )));
        }
        Ok(Self {
            epsilon,
            rho3_density,
        })
    }

    pub fn marginals(&self) -> [PiecewiseConstantDensity; 3] {
        let e = self.epsilon;
        [
            PiecewiseConstantDensity::uniform(0.0, 1.0, 1.0).expect("valid"),
            PiecewiseConstantDensity::new(vec![2.0, 2.0 + e / 2.0, 3.0], vec![1.0 / e, 1.0])
                .expect("valid"),
            PiecewiseConstantDensity::uniform(1.0, 2.0, self.rho3_density).expect("valid"),
        ]
    }

    pub fn discretized(&self, cells_per_unit: u32) -> Result<Vec<DiscreteMeasure>> {
        self.marginals()
            .iter()
            .map(|f| discretize(f, cells_per_unit))
            .collect()
    }

    fn check_m(m: f64) -> Result<()> {
        if !(m > 0.5 && m < 1.0) {
            return Err(Error::MassOutOfRange { m, lo: 0.5, hi: 1.0 });
        }
        Ok(())
    }

    /// Supports of the first two active submeasures: `[1-m, 1]` and
    /// `[2, 3/2 + eps/2 + m]`.
    pub fn active_intervals(&self, m: f64) -> Result<(Interval, Interval)> {
        Self::check_m(m)?;
        Ok((
            Interval::new(1.0 - m, 1.0),
            Interval::new(2.0, 1.5 + self.epsilon / 2.0 + m),
        ))
    }

    /// The increasing map between the first two active submeasures.
    pub fn map(&self, m: f64, x: f64) -> Result<f64> {
        Self::check_m(m)?;
        let e = self.epsilon;
        if x < 1.0 - m - 1e-12 || x > 1.0 + 1e-12 {
            return Err(Error::OutOfRange(format!("{x} outside [{}, 1]", 1.0 - m)));
        }
        Ok(if x <= 1.5 - m {
            e * x + 2.0 - e * (1.0 - m)
        } else {
            x + (1.0 + e) / 2.0 + m
        })
    }

    /// Position where the barycenter density drops from `2/(eps+1)` to 1.
    pub fn jump_location(&self, m: f64) -> f64 {
        (7.0 + self.epsilon) / 4.0 - m / 2.0
    }

    /// `nu^m`: `2/(eps+1)` on `[(3-m)/2, (7+eps)/4 - m/2]`, then 1 up to
    /// `(5+eps)/4 + m/2`.
    pub fn barycenter_density(&self, m: f64) -> Result<PiecewiseConstantDensity> {
        Self::check_m(m)?;
        let e = self.epsilon;
        PiecewiseConstantDensity::new(
            vec![(3.0 - m) / 2.0, self.jump_location(m), (5.0 + e) / 4.0 + m / 2.0],
            vec![2.0 / (e + 1.0), 1.0],
        )
    }

    pub fn nonmonotone_witness(&self, m: f64, mbar: f64) -> Result<NonmonotoneWitness> {
        Self::check_m(m)?;
        Self::check_m(mbar)?;
        if m >= mbar {
            return Err(Error::OutOfRange(format!("need m < mbar, got {m} >= {mbar}")));
        }
        let high = 2.0 / (self.epsilon + 1.0);
        Ok(NonmonotoneWitness {
            interval: Interval::new(self.jump_location(mbar), self.jump_location(m)),
            density_small: high,
            density_large: 1.0,
            excess: (high - 1.0) * (mbar - m) / 2.0,
        })
    }
}

/// Least-squares location of a down-step from `left` to `right` in a
/// histogram's densities. Candidate locations are the interior bin edges of
/// the occupied range; the two outermost occupied bins are ignored because
/// they straddle the support ends.
pub fn fit_step_location(hist: &Histogram, left: f64, right: f64) -> Option<f64> {
    let dens = hist.densities();
    let first = dens.iter().position(|&d| d > 0.0)?;
    let last = dens.iter().rposition(|&d| d > 0.0)?;
    if last < first + 3 {
        return None;
    }
    let inner = &dens[first + 1..last];
    let mut best: Option<(f64, usize)> = None;
    for split in 0..=inner.len() {
        let err: f64 = inner[..split].iter().map(|d| (d - left).powi(2)).sum::<f64>()
            + inner[split..].iter().map(|d| (d - right).powi(2)).sum::<f64>();
        if best.is_none_or(|(b, _)| err < b) {
            best = Some((err, split));
        }
    }
    let (_, split) = best?;
    Some(hist.origin + (first + 1 + split) as f64 * hist.width)
}

/// `rho_1 = d(-5) + d(-3)`, `rho_2 = d(-1) + d(0) + d(1)`, `rho_3 = d(3) + d(5)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Example42Instance;

impl Example42Instance {
    pub fn marginals(&self) -> Vec<DiscreteMeasure> {
        [&[-5.0, -3.0][..], &[-1.0, 0.0, 1.0], &[3.0, 5.0]]
            .iter()
            .map(|xs| DiscreteMeasure::unit_diracs_1d(xs).expect("valid"))
            .collect()
    }

    /// The known optimizers: `d(-3,0,3)` at `m = 1` and
    /// `d(-5,-1,3) + d(-3,1,5)` at `m = 2`.
    pub fn expected_plan(&self, m: u32) -> Result<TensorPlan> {
        let tuples: Vec<[f64; 3]> = match m {
            1 => vec![[-3.0, 0.0, 3.0]],
            2 => vec![[-5.0, -1.0, 3.0], [-3.0, 1.0, 5.0]],
            _ => {
                return Err(Error::OutOfRange(format!(
                    "no closed-form optimizer for m = {m}"
                )))
            }
        };
        let rhos = self.marginals();
        let entries = tuples
            .iter()
            .map(|t| {
                let indices = t
                    .iter()
                    .zip(&rhos)
                    .map(|(x, r)| r.find_atom(&[*x]).expect("fixture atom"))
                    .collect();
                crate::multimarginal::TensorEntry { indices, mass: 1.0 }
            })
            .collect();
        let mut plan = TensorPlan::empty(rhos);
        plan.entries = entries;
        plan.cost = plan.evaluate_cost(&CostSpec::PairwiseQuadratic)?;
        Ok(plan)
    }
}
