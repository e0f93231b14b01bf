mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use partial_ot::analytic1d::{Example42Instance, Prop41Instance};
use partial_ot::barycenter::{reconstruct_mm_plan_with, solve_partial_barycenter_with};
use partial_ot::io::{density_to_json, discrete_to_json, parse_measure};
use partial_ot::measure::{DiscreteMeasure, Histogram, MassParameter};
use partial_ot::multimarginal::{solve_mm_partial_with, solve_mm_with, CostSpec, TensorPlan};
use partial_ot::options::SolveOptions;
use partial_ot::transport::{solve_ot_with, solve_partial_ot_with};
use partial_ot::verify::{self, CheckReport, CHECK_NAMES};
use partial_ot::Error;
use serde_json::json;

use output::{Artifacts, Formats};

const MAX_TENSOR_ENV: &str = "PARTIAL_OT_MAX_TENSOR";

#[derive(Parser)]
#[command(name = "partial-ot", version, about = "Multi-marginal partial transport and partial barycenters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one transport, multi-marginal or barycenter problem.
    Solve(SolveArgs),
    /// Solve partial barycenters over a grid of masses.
    Sweep(SweepArgs),
    /// Run executable checks and write a JSON-lines report.
    Verify(VerifyArgs),
    /// Export the compiled-in fixtures in the JSON measure schema.
    Fixtures(Common),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fixture {
    Example42,
    Prop41,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Ot,
    #[value(name = "partial_ot")]
    PartialOt,
    Mm,
    #[value(name = "mm_partial")]
    MmPartial,
    Barycenter,
}

#[derive(Args, Clone)]
struct Common {
    /// Measure files (JSON); these override `--fixtures`.
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    fixtures: Option<Fixture>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Cells per unit length used to discretize densities.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    resolution: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv,json", value_parser = Formats::parse)]
    format: Formats,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    problem: Problem,
    #[arg(long)]
    m: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Mass grid `start:stop:step`, both ends included.
    #[arg(long = "m-grid")]
    m_grid: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(CHECK_NAMES))]
    check: Option<String>,
    #[arg(long, conflicts_with = "check")]
    all: bool,
    #[arg(long)]
    m: Option<f64>,
}

enum Failure {
    Input(String),
    Solver(String),
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Lp(_) | Error::LpStatus { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Solver(format!("{e:#}"))
    }
}

type CliResult<T> = Result<T, Failure>;

fn solve_options() -> CliResult<SolveOptions> {
    let mut opts = SolveOptions::default();
    if let Ok(raw) = std::env::var(MAX_TENSOR_ENV) {
        let cap = raw
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::Input(format!("{MAX_TENSOR_ENV}={raw:?} is not a count")))?;
        opts = opts.with_max_tuples(cap);
    }
    Ok(opts)
}

fn mass(m: f64) -> CliResult<MassParameter> {
    Ok(MassParameter::new(m)?)
}

fn load_measures(c: &Common, default: Option<Fixture>) -> CliResult<Vec<DiscreteMeasure>> {
    if !c.inputs.is_empty() {
        return c
            .inputs
            .iter()
            .map(|path| {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                let parsed = parse_measure(&text)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                Ok(parsed.into_discrete(c.resolution)?)
            })
            .collect();
    }
    match c.fixtures.or(default) {
        Some(Fixture::Example42) => Ok(Example42Instance.marginals()),
        Some(Fixture::Prop41) => Ok(Prop41Instance::new(c.eps)?.discretized(c.resolution)?),
        None => Err(Failure::Input(
            "no measures given: pass JSON files or --fixtures".into(),
        )),
    }
}

fn finish(c: &Common, artifacts: &Artifacts) -> CliResult<()> {
    if let Some(dir) = &c.out {
        for path in artifacts.write_all(dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn need_m(m: Option<f64>) -> CliResult<MassParameter> {
    mass(m.ok_or_else(|| Failure::Input("this problem needs --m".into()))?)
}

fn need_count(rhos: &[DiscreteMeasure], n: usize) -> CliResult<()> {
    if rhos.len() != n {
        return Err(Failure::Input(format!("expected {n} measures, got {}", rhos.len())));
    }
    Ok(())
}

fn histogram_panel(title: &str, measures: &[(String, &DiscreteMeasure)], width: f64) -> CliResult<svg::Panel> {
    let mut series = Vec::new();
    for (label, mu) in measures {
        if mu.is_empty() || mu.dim() != 1 {
            continue;
        }
        let h = Histogram::of(mu, (mu.point(0)[0] / width).floor() * width, width)?;
        series.push(svg::Series {
            label: label.clone(),
            points: svg::step_points(h.edges(), &h.densities()),
        });
    }
    Ok(svg::Panel {
        title: title.into(),
        series,
    })
}

fn add_plan_artifacts(a: &mut Artifacts, f: Formats, plan: &TensorPlan) -> CliResult<()> {
    if f.csv {
        a.add("plan.csv", output::tensor_plan_csv(plan)?);
        for j in 0..plan.arity() {
            a.add(format!("active_{}.csv", j + 1), output::measure_csv(&plan.active_marginal(j)?)?);
        }
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    let c = &args.common;
    let opts = solve_options()?;
    let rhos = load_measures(c, None)?;
    let width = 1.0 / f64::from(c.resolution);
    let mut a = Artifacts::default();
    let mut plotted: Vec<(String, DiscreteMeasure)> = Vec::new();
    let report = match args.problem {
        Problem::Ot => {
            need_count(&rhos, 2)?;
            let (plan, cost) = solve_ot_with(&rhos[0], &rhos[1], &opts)?;
            if c.format.csv {
                a.add("plan.csv", output::coupling_csv(&plan)?);
            }
            json!({"problem": "ot", "cost": cost, "entries": plan.entries.len()})
        }
        Problem::PartialOt => {
            need_count(&rhos, 2)?;
            let m = need_m(args.m)?;
            let r = solve_partial_ot_with(&rhos[0], &rhos[1], m, &opts)?;
            if c.format.csv {
                a.add("plan.csv", output::coupling_csv(&r.plan)?);
                a.add("active_1.csv", output::measure_csv(&r.active_left)?);
                a.add("active_2.csv", output::measure_csv(&r.active_right)?);
            }
            plotted.push(("active 1".into(), r.active_left.clone()));
            plotted.push(("active 2".into(), r.active_right.clone()));
            json!({
                "problem": "partial_ot",
                "m": m.value(),
                "cost": r.cost,
                "entries": r.plan.entries.len(),
                "iterations": r.iterations,
            })
        }
        Problem::Mm | Problem::MmPartial => {
            let (plan, m) = if args.problem == Problem::Mm {
                (solve_mm_with(&rhos, &CostSpec::PairwiseQuadratic, &opts)?, None)
            } else {
                let m = need_m(args.m)?;
                (
                    solve_mm_partial_with(&rhos, m, &CostSpec::PairwiseQuadratic, &opts)?,
                    Some(m.value()),
                )
            };
            add_plan_artifacts(&mut a, c.format, &plan)?;
            for j in 0..plan.arity() {
                plotted.push((format!("active {}", j + 1), plan.active_marginal(j)?));
            }
            let d = plan.diagnostics;
            json!({
                "problem": if m.is_some() { "mm_partial" } else { "mm" },
                "m": m,
                "cost": plan.cost,
                "entries": plan.entries.len(),
                "columns": d.columns,
                "rows": d.rows,
                "iterations": d.iterations,
                "primal_residual": d.primal_residual,
            })
        }
        Problem::Barycenter => {
            let m = need_m(args.m)?;
            let r = solve_partial_barycenter_with(&rhos, m, &opts)?;
            add_plan_artifacts(&mut a, c.format, &r.source_plan)?;
            if c.format.csv {
                a.add("barycenter.csv", output::measure_csv(&r.barycenter)?);
            }
            let reconstruction = if r.barycenter.is_empty() {
                json!({"status": "empty"})
            } else {
                match reconstruct_mm_plan_with(&r.barycenter, &rhos, mass(r.barycenter.total_mass())?, &opts) {
                    Ok(plan) => json!({"status": "ok", "cost": plan.cost}),
                    Err(Error::NonGraphical { marginal, atom, point }) => json!({
                        "status": "non-graphical",
                        "marginal": marginal + 1,
                        "atom": atom,
                        "point": point,
                        "note": "the average map sent distinct tuples to one atom; this is a discretization artifact",
                    }),
                    Err(e) => return Err(e.into()),
                }
            };
            plotted.push(("barycenter".into(), r.barycenter.clone()));
            let atoms: Vec<_> = r.barycenter.atoms().map(|(p, w)| json!({"x": p, "w": w})).collect();
            json!({
                "problem": "barycenter",
                "m": m.value(),
                "mm_cost": r.source_plan.cost,
                "objective": r.objective,
                "per_marginal_costs": r.per_marginal_costs,
                "identity_residual": r.identity_residual(),
                "barycenter": atoms,
                "reconstruction": reconstruction,
            })
        }
    };
    if c.format.json {
        a.add("report.json", output::pretty_json(&report)?);
    }
    if c.format.svg {
        let mut shown: Vec<(String, &DiscreteMeasure)> =
            rhos.iter().enumerate().map(|(j, r)| (format!("rho {}", j + 1), r)).collect();
        let inputs = histogram_panel("inputs", &shown, width)?;
        shown = plotted.iter().map(|(l, m)| (l.clone(), m)).collect();
        let result = histogram_panel("result", &shown, width)?;
        a.add("solve.svg", svg::render(&[inputs, result]));
    }
    println!("{}", serde_json::to_string(&report).map_err(anyhow::Error::from)?);
    finish(c, &a)
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::Input(format!("--m-grid {text:?}: expected start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let (lo, hi, step) = (v[0], v[1], v[2]);
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && lo <= hi) {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let c = &args.common;
    let opts = solve_options()?;
    let grid = parse_grid(&args.m_grid)?;
    let rhos = load_measures(c, Some(Fixture::Prop41))?;
    let cap = rhos.iter().map(DiscreteMeasure::total_mass).fold(f64::INFINITY, f64::min);
    if let Some(&bad) = grid.iter().find(|&&m| m < 0.0 || m > cap + 1e-9 * (1.0 + cap)) {
        return Err(Failure::Input(format!("m = {bad} outside [0, {cap}]")));
    }
    let analytic = match (c.inputs.is_empty(), c.fixtures.unwrap_or(Fixture::Prop41)) {
        (true, Fixture::Prop41) => Some(Prop41Instance::new(c.eps)?),
        _ => None,
    };
    let width = 1.0 / f64::from(c.resolution);
    let lo = rhos
        .iter()
        .flat_map(|r| r.points().iter().map(|p| p[0]))
        .fold(f64::INFINITY, f64::min);
    let origin = (lo / width).floor() * width;
    let tol = c.tol.unwrap_or(1e-9);

    let mut hists = Vec::with_capacity(grid.len());
    let mut curve = Vec::with_capacity(grid.len());
    let mut bary = Vec::with_capacity(grid.len());
    for &m in &grid {
        let r = solve_partial_barycenter_with(&rhos, mass(m)?, &opts)?;
        hists.push((m, Histogram::of(&r.barycenter, origin, width)?));
        curve.push(vec![m, r.source_plan.cost, r.objective]);
        bary.push(r.barycenter);
    }

    let mut violations = Vec::new();
    for i in 0..grid.len() {
        for k in i + 1..grid.len() {
            let (hi, hk) = (&hists[i].1, &hists[k].1);
            let excess: f64 = (0..hi.masses.len())
                .map(|b| (hi.masses[b] - hk.masses.get(b).copied().unwrap_or(0.0)).max(0.0))
                .sum();
            let analytic_witness = analytic
                .as_ref()
                .and_then(|inst| inst.nonmonotone_witness(grid[i], grid[k]).ok());
            let integral = analytic_witness.map_or(excess, |w| w.excess);
            if integral > tol {
                violations.push(json!({
                    "m": grid[i],
                    "m_bar": grid[k],
                    "witness_integral": integral,
                    "histogram_excess": excess,
                    "analytic": analytic_witness,
                }));
            }
        }
    }
    let nondecreasing = curve.windows(2).all(|w| w[0][1] <= w[1][1] + tol * (1.0 + w[1][1].abs()));
    let summary = json!({
        "grid": grid,
        "violations": violations,
        "value_curve_nondecreasing": nondecreasing,
    });

    let mut a = Artifacts::default();
    if c.format.csv {
        a.add("histograms.csv", output::histograms_csv(&hists)?);
        a.add("value_curve.csv", output::table_csv(&["m", "mm_cost", "objective"], curve.clone())?);
    }
    if c.format.json {
        a.add("violations.json", output::pretty_json(&summary)?);
    }
    if c.format.svg {
        let computed = svg::Panel {
            title: "computed barycenters".into(),
            series: hists
                .iter()
                .map(|(m, h)| svg::Series {
                    label: format!("m = {m}"),
                    points: svg::step_points(h.edges(), &h.densities()),
                })
                .collect(),
        };
        let mut panels = vec![computed];
        if let Some(inst) = &analytic {
            let series = grid
                .iter()
                .filter_map(|&m| inst.barycenter_density(m).ok().map(|d| (m, d)))
                .map(|(m, d)| {
                    let b = d.breaks();
                    svg::Series {
                        label: format!("m = {m}"),
                        points: svg::step_points(b.windows(2).map(|w| (w[0], w[1])), d.values()),
                    }
                })
                .collect();
            panels.push(svg::Panel {
                title: "closed form".into(),
                series,
            });
        }
        panels.push(svg::Panel {
            title: "optimal value".into(),
            series: vec![svg::Series {
                label: "C(m)".into(),
                points: curve.iter().map(|r| (r[0], r[1])).collect(),
            }],
        });
        a.add("sweep.svg", svg::render(&panels));
    }
    println!("{}", serde_json::to_string(&summary).map_err(anyhow::Error::from)?);
    finish(c, &a)
}

fn custom_check(name: &str, args: &VerifyArgs, opts: &SolveOptions) -> CliResult<Vec<CheckReport>> {
    let c = &args.common;
    let given = !c.inputs.is_empty() || c.fixtures.is_some() || args.m.is_some();
    let report = match name {
        "equivalence" if given => {
            let rhos = load_measures(c, None)?;
            verify::check_equivalence_with(&rhos, need_m(args.m)?, c.tol.unwrap_or(1e-6), opts)?
        }
        "subthreshold-nonuniqueness" if given => {
            let rhos = load_measures(c, None)?;
            verify::check_subthreshold_nonuniqueness_with(
                &rhos,
                need_m(args.m)?,
                8,
                c.seed,
                c.tol.unwrap_or(1e-9),
                opts,
            )?
        }
        "convexity" if given => {
            let rhos = load_measures(c, None)?;
            need_count(&rhos, 3)?;
            let m = mass(args.m.unwrap_or_else(|| rhos[1].total_mass()))?;
            verify::check_convexity_with(
                &rhos[0],
                &rhos[1],
                &rhos[2],
                m,
                &[0.0, 0.25, 0.5, 0.75, 1.0],
                c.tol.unwrap_or(1e-7),
                opts,
            )?
        }
        "mass-filling" => {
            let rhos = load_measures(c, Some(Fixture::Prop41))?;
            let m = mass(args.m.unwrap_or(0.75))?;
            let plan = solve_mm_partial_with(&rhos, m, &CostSpec::PairwiseQuadratic, opts)?;
            let tol = c.tol.unwrap_or(2.0 / f64::from(c.resolution));
            verify::check_mass_filling(&plan, &rhos, tol)
        }
        "naive-extension" => {
            let inst = Prop41Instance::new(c.eps)?;
            let m = mass(args.m.unwrap_or(0.75))?;
            verify::check_naive_extension_fails_with(&inst, m, c.resolution, c.tol.unwrap_or(1e-6), opts)?
        }
        _ => return Ok(verify::run_check(name, c.seed)?),
    };
    Ok(vec![report])
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let c = &args.common;
    let opts = solve_options()?;
    let reports: Vec<CheckReport> = match (&args.check, args.all) {
        (Some(name), _) => custom_check(name, args, &opts)?,
        (None, true) => {
            let mut all = Vec::new();
            for name in CHECK_NAMES {
                all.extend(verify::run_check(name, c.seed)?);
            }
            all
        }
        (None, false) => return Err(Failure::Input("pass --check NAME or --all".into())),
    };

    let mut lines = String::new();
    for r in &reports {
        lines.push_str(&r.to_json_line());
        lines.push('\n');
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{:<28} {:>6} {:>10}", "check", "result", "tolerance");
    for r in &reports {
        println!(
            "{:<28} {:>6} {:>10.1e}{}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.tolerance,
            if r.informative { "  (informative)" } else { "" }
        );
    }
    println!("{passed} of {} checks passed", reports.len());

    let mut a = Artifacts::default();
    a.add("verify.jsonl", lines);
    finish(c, &a)?;
    if passed == reports.len() {
        Ok(())
    } else {
        Err(Failure::ChecksFailed)
    }
}

fn cmd_fixtures(c: &Common) -> CliResult<()> {
    let mut a = Artifacts::default();
    match c.fixtures {
        Some(Fixture::Example42) | None => {
            for (j, rho) in Example42Instance.marginals().iter().enumerate() {
                a.add(format!("example42_rho{}.json", j + 1), output::pretty_json(&discrete_to_json(rho))?);
            }
        }
        Some(Fixture::Prop41) => {
            for (j, rho) in Prop41Instance::new(c.eps)?.marginals().iter().enumerate() {
                a.add(format!("prop41_rho{}.json", j + 1), output::pretty_json(&density_to_json(rho))?);
            }
        }
    }
    if c.out.is_none() {
        for name in a.names() {
            println!("{name}");
        }
    }
    finish(c, &a)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Fixtures(c) => cmd_fixtures(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ChecksFailed) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(3)
        }
    }
}
