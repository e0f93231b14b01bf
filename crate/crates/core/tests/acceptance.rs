//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use partial_ot::analytic1d::{fit_step_location, Example42Instance, Prop41Instance};
use partial_ot::barycenter::solve_partial_barycenter;
use partial_ot::measure::{DiscreteMeasure, Histogram, MassParameter};
use partial_ot::multimarginal::{solve_mm_partial, CostSpec, TensorPlan};
use partial_ot::transport::solve_ot;
use partial_ot::verify::{
    check_convexity, check_mass_filling, check_naive_extension_fails,
    check_subthreshold_nonuniqueness, random_convexity_instance, random_measure_1d,
    random_partial_instance,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    passed: bool,
    summary: String,
    elapsed: Duration,
}

fn m(v: f64) -> MassParameter {
    MassParameter::new(v).unwrap()
}

fn pairwise(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, a) in xs.iter().enumerate() {
        for (k, b) in xs.iter().enumerate() {
            if j != k {
                s += (a - b) * (a - b);
            }
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Vertex enumeration for the Dirac example
// ---------------------------------------------------------------------------

struct Vertex {
    cost: f64,
    /// Mass per tuple, tuples listed as point coordinates.
    plan: Vec<([f64; 3], f64)>,
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// All basic feasible solutions of the partial three-marginal LP on the
/// Dirac example, in slack form.
fn dirac_vertices(mass: f64) -> Vec<Vertex> {
    let sets: [&[f64]; 3] = [&[-5.0, -3.0], &[-1.0, 0.0, 1.0], &[3.0, 5.0]];
    let mut tuples = Vec::new();
    for &a in sets[0] {
        for &b in sets[1] {
            for &c in sets[2] {
                tuples.push([a, b, c]);
            }
        }
    }
    let atoms: Vec<(usize, f64)> = sets
        .iter()
        .enumerate()
        .flat_map(|(j, s)| s.iter().map(move |&x| (j, x)))
        .collect();
    let nt = tuples.len();
    let ncols = nt + atoms.len();
    let nrows = atoms.len() + 1;
    // Column-major constraint matrix.
    let mut cols = vec![vec![0.0; nrows]; ncols];
    for (t, tup) in tuples.iter().enumerate() {
        for (r, &(j, x)) in atoms.iter().enumerate() {
            if tup[j] == x {
                cols[t][r] = 1.0;
            }
        }
        cols[t][nrows - 1] = 1.0;
    }
    for r in 0..atoms.len() {
        cols[nt + r][r] = 1.0;
    }
    let mut rhs = vec![1.0; nrows];
    rhs[nrows - 1] = mass;

    let mut out = Vec::new();
    combinations(ncols, nrows, &mut |basis| {
        let a: Vec<Vec<f64>> = (0..nrows)
            .map(|r| basis.iter().map(|&c| cols[c][r]).collect())
            .collect();
        let Some(x) = solve_dense(a, rhs.clone()) else { return };
        if x.iter().any(|&v| v < -1e-12) {
            return;
        }
        let mut plan = Vec::new();
        let mut cost = 0.0;
        for (&c, &v) in basis.iter().zip(&x) {
            if c < nt && v > 1e-12 {
                plan.push((tuples[c], v));
                cost += v * pairwise(&tuples[c]);
            }
        }
        plan.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Degenerate bases repeat the same point.
        if !out.iter().any(|v: &Vertex| same_plan(&v.plan, &plan, 1e-9)) {
            out.push(Vertex { cost, plan });
        }
    });
    out
}

fn plan_as_tuples(plan: &TensorPlan) -> Vec<([f64; 3], f64)> {
    let mut v: Vec<([f64; 3], f64)> = plan
        .entries
        .iter()
        .map(|e| {
            let p = plan.entry_points(e);
            ([p[0][0], p[1][0], p[2][0]], e.mass)
        })
        .collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    v
}

fn same_plan(a: &[([f64; 3], f64)], b: &[([f64; 3], f64)], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= tol)
}

fn dirac_criterion(id: u32, mass: f64, expected_cost: f64, budget: Duration) -> (Outcome, TensorPlan) {
    let rhos = Example42Instance.marginals();
    let start = Instant::now();
    let plan = solve_mm_partial(&rhos, m(mass), &CostSpec::PairwiseQuadratic).unwrap();
    let elapsed = start.elapsed();

    let vertices = dirac_vertices(mass);
    let best = vertices.iter().map(|v| v.cost).fold(f64::INFINITY, f64::min);
    let optimal: Vec<&Vertex> = vertices.iter().filter(|v| v.cost <= best + 1e-9).collect();
    let got = plan_as_tuples(&plan);
    let expected = plan_as_tuples(&Example42Instance.expected_plan(mass as u32).unwrap());

    let passed = (best - expected_cost).abs() <= 1e-8
        && (plan.cost - expected_cost).abs() <= 1e-8
        && optimal.len() == 1
        && same_plan(&optimal[0].plan, &expected, 1e-8)
        && same_plan(&got, &expected, 1e-8)
        && elapsed < budget;
    (
        Outcome {
            id,
            passed,
            summary: format!(
                "m={mass}: cost {:.9} (enumerated optimum {best:.9} over {} vertices, {} optimal), support {:?}",
                plan.cost,
                vertices.len(),
                optimal.len(),
                got.iter().map(|t| t.0).collect::<Vec<_>>()
            ),
            elapsed,
        },
        plan,
    )
}

fn criteria_1_2() -> Vec<Outcome> {
    let (c1, p1) = dirac_criterion(1, 1.0, 108.0, Duration::from_millis(100));
    let (mut c2, p2) = dirac_criterion(2, 2.0, 384.0, Duration::from_secs(1));
    let s1 = p1.active_marginal(1).unwrap();
    let s2 = p2.active_marginal(1).unwrap();
    let support = |s: &DiscreteMeasure| s.points().iter().map(|p| p[0]).collect::<Vec<_>>();
    let nested = support(&s1).iter().all(|x| support(&s2).contains(x));
    let exact = support(&s1) == vec![0.0] && support(&s2) == vec![-1.0, 1.0];
    c2.passed &= exact && !nested;
    c2.summary += &format!(
        "; second active support {:?} -> {:?}",
        support(&s1),
        support(&s2)
    );
    vec![c1, c2]
}

// ---------------------------------------------------------------------------
// Continuum family: reproduction, witness, mass filling
// ---------------------------------------------------------------------------

fn criteria_3_4_7() -> Vec<Outcome> {
    let inst = Prop41Instance::new(0.5).unwrap();
    let rhos = inst.discretized(10).unwrap();
    let h = 0.1;
    let high = 2.0 / (inst.epsilon + 1.0);

    let mut c3_ok = true;
    let mut c3_lines = Vec::new();
    let mut c7_ok = true;
    let mut c7_lines = Vec::new();
    let mut witness_mass = Vec::new();
    let mut c3_time = Duration::ZERO;
    for mv in [0.6, 0.75, 0.9] {
        let start = Instant::now();
        let report = solve_partial_barycenter(&rhos, m(mv)).unwrap();
        let elapsed = start.elapsed();
        c3_time += elapsed;

        let exact = inst.barycenter_density(mv).unwrap();
        let hist = Histogram::of(&report.barycenter, 1.0, h).unwrap();
        let l1 = hist.l1_distance(&exact);
        let jump = fit_step_location(&hist, high, 1.0);
        let target = inst.jump_location(mv);
        let jump_ok = jump.is_some_and(|s| (s - target).abs() <= 2.0 * h + 1e-12);
        c3_ok &= l1 <= 0.15 && jump_ok && elapsed < Duration::from_secs(60);
        c3_lines.push(format!(
            "m={mv}: L1 {l1:.4}, jump {:.3} vs {target:.3}, {:.2?}",
            jump.unwrap_or(f64::NAN),
            elapsed
        ));

        witness_mass.push(report.barycenter.mass_in(1.425, 1.575));

        let fill = check_mass_filling(&report.source_plan, &rhos, 2.0 * h);
        c7_ok &= fill.passed;
        c7_lines.push(format!(
            "m={mv}: {} coordinates, max dev {:.4}, {} violations, {} boundary atoms skipped",
            fill.details["checked_coordinates"],
            fill.details["max_deviation"].as_f64().unwrap_or(f64::NAN),
            fill.details["violation_count"],
            fill.details["boundary_atoms_skipped"]
        ));
    }

    let need = 0.5 * (high - 1.0) * 0.15;
    let gap = witness_mass[0] - witness_mass[2];
    vec![
        Outcome {
            id: 3,
            passed: c3_ok,
            summary: c3_lines.join("; "),
            elapsed: c3_time,
        },
        Outcome {
            id: 4,
            passed: gap >= need,
            summary: format!(
                "mass on [1.425, 1.575]: {:.4} (m=0.6) vs {:.4} (m=0.9), gap {gap:.4} >= {need:.4}",
                witness_mass[0], witness_mass[2]
            ),
            elapsed: c3_time,
        },
        Outcome {
            id: 7,
            passed: c7_ok,
            summary: c7_lines.join("; "),
            elapsed: Duration::ZERO,
        },
    ]
}

// ---------------------------------------------------------------------------
// Equivalence identity
// ---------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut instances: Vec<(Vec<DiscreteMeasure>, MassParameter)> = vec![
        (Example42Instance.marginals(), m(1.0)),
        (Example42Instance.marginals(), m(2.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        instances.push(random_partial_instance(&mut rng, 3, 6));
    }
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (rhos, mv) in &instances {
        let r = solve_partial_barycenter(rhos, *mv).unwrap();
        let c = r.source_plan.cost;
        // Independent recomputation of C from the plan's tuples.
        let c_direct: f64 = r
            .source_plan
            .entries
            .iter()
            .map(|e| {
                let xs: Vec<f64> = r.source_plan.entry_points(e).iter().map(|p| p[0]).collect();
                e.mass * pairwise(&xs)
            })
            .sum();
        let rel = r.identity_residual() / (1.0 + c);
        worst = worst.max(rel);
        ok &= rel <= 1e-6 && (c - c_direct).abs() <= 1e-9 * (1.0 + c);
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 5,
        passed: ok && elapsed < Duration::from_secs(30),
        summary: format!(
            "{} instances, worst |C - 2N F| / (1 + C) = {worst:.2e}",
            instances.len()
        ),
        elapsed,
    }
}

// ---------------------------------------------------------------------------
// Convexity along linear interpolation
// ---------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_slack = f64::INFINITY;
    let mut endpoint: f64 = 0.0;
    for _ in 0..100 {
        let (mu, nu0, nu1, mv) = random_convexity_instance(&mut rng, 8);
        let r = check_convexity(&mu, &nu0, &nu1, mv, &grid, 1e-7).unwrap();
        min_slack = min_slack.min(r.details["min_slack"].as_f64().unwrap());
        endpoint = endpoint.max(r.details["endpoint_error"].as_f64().unwrap());
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 6,
        passed: min_slack >= -1e-7 && endpoint <= 1e-9 && elapsed < Duration::from_secs(60),
        summary: format!("100 instances, min slack {min_slack:.3e}, endpoint error {endpoint:.1e}"),
        elapsed,
    }
}

// ---------------------------------------------------------------------------
// Naive extension, sub-threshold non-uniqueness, 1D oracle
// ---------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let inst = Prop41Instance::new(0.5).unwrap();
    let start = Instant::now();
    let r = check_naive_extension_fails(&inst, m(0.75), 8, 1e-6).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        id: 8,
        passed: r.passed && elapsed < Duration::from_secs(120),
        summary: format!(
            "graphical over third marginal: {}, C(extended) {:.6} vs balanced optimum {:.6}, gap {:.3e}",
            r.details["graphical_over_third"],
            r.details["extended_cost"].as_f64().unwrap(),
            r.details["balanced_cost"].as_f64().unwrap(),
            r.details["gap"].as_f64().unwrap()
        ),
        elapsed,
    }
}

fn criterion_9() -> Outcome {
    let rho = DiscreteMeasure::unit_diracs_1d(&[0.0, 1.0]).unwrap();
    let rhos = vec![rho.clone(), rho.clone(), rho];
    let start = Instant::now();
    let r = check_subthreshold_nonuniqueness(&rhos, m(1.0), 8, 9, 1e-9).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        id: 9,
        passed: r.passed
            && r.details["optimal_cost"].as_f64().unwrap().abs() <= 1e-9
            && r.details["distinct_plans"].as_u64().unwrap() >= 2
            && elapsed < Duration::from_secs(1),
        summary: format!(
            "optimal cost {:.1e}, {} distinct plans from 8 probes",
            r.details["optimal_cost"].as_f64().unwrap(),
            r.details["distinct_plans"]
        ),
        elapsed,
    }
}

/// Quantile coupling of two sorted 1D measures of equal mass.
fn monotone_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let a: Vec<(f64, f64)> = mu.atoms().map(|(p, w)| (p[0], w)).collect();
    let b: Vec<(f64, f64)> = nu.atoms().map(|(p, w)| (p[0], w)).collect();
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut cost = 0.0;
    while i < a.len() && j < b.len() {
        let q = ra.min(rb);
        cost += q * (a[i].0 - b[j].0).powi(2);
        ra -= q;
        rb -= q;
        if ra <= 1e-15 {
            i += 1;
            ra = a.get(i).map_or(0.0, |x| x.1);
        }
        if rb <= 1e-15 {
            j += 1;
            rb = b.get(j).map_or(0.0, |x| x.1);
        }
    }
    cost
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let mu = random_measure_1d(&mut rng, 2 + k % 7, Some(1.0));
        let nu = random_measure_1d(&mut rng, 1 + (3 * k) % 8, Some(1.0));
        let (_, lp) = solve_ot(&mu, &nu).unwrap();
        worst = worst.max((lp - monotone_cost(&mu, &nu)).abs());
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 10,
        passed: worst <= 1e-8 && elapsed < Duration::from_secs(10),
        summary: format!("50 instances, worst |LP - monotone| = {worst:.2e}"),
        elapsed,
    }
}

fn main() {
    let mut outcomes = criteria_1_2();
    outcomes.extend(criteria_3_4_7());
    outcomes.push(criterion_5());
    outcomes.push(criterion_6());
    outcomes.push(criterion_8());
    outcomes.push(criterion_9());
    outcomes.push(criterion_10());
    outcomes.sort_by_key(|o| o.id);

    let mut failed = 0;
    for o in &outcomes {
        println!(
            "criterion {:>2}: {} [{:.2?}] {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.elapsed,
            o.summary
        );
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
