//! Workloads shared by the benchmarks.

use partial_ot::analytic1d::Prop41Instance;
use partial_ot::measure::DiscreteMeasure;
use partial_ot::verify::random_measure_1d;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two unit-mass random 1D measures with `n` atoms each.
pub fn random_pair(n: usize, seed: u64) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = random_measure_1d(&mut rng, n, Some(1.0));
    let nu = random_measure_1d(&mut rng, n, Some(1.0));
    (mu, nu)
}

/// `n` random 1D marginals with `atoms` atoms each.
pub fn random_family(n: usize, atoms: usize, seed: u64) -> Vec<DiscreteMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_measure_1d(&mut rng, atoms, None)).collect()
}

pub fn prop41_marginals(eps: f64, resolution: u32) -> Vec<DiscreteMeasure> {
    Prop41Instance::new(eps)
        .and_then(|inst| inst.discretized(resolution))
        .expect("valid parameters")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_have_the_requested_shape() {
        let (mu, nu) = random_pair(6, 1);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12 && (nu.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(random_family(3, 4, 2).len(), 3);
        assert_eq!(prop41_marginals(0.5, 10)[1].len(), 11);
    }
}
