//! Configuration-driven experiment runner behind the `varorder` binary.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alpha::RegimeKind;
use crate::config::{Experiment, ExperimentConfig, Format};
use crate::error::{Error, Result};
use crate::output::{num, write_csv, Meta};
use crate::pde::{compare_mc_pde, mild_residual, solve_fde, write_field_dump, McOptions};
use crate::rng::RandomStream;
use crate::sim::{simulate_coupled, simulate_time_changed, write_path_dump, SimConfig};
use crate::stats::{
    fit_growth_exponent, run_ensemble, run_growth_ensemble, verify_regime, EnsembleSummary, GrowthQuantity,
    Verdict,
};
use crate::validation::run_validation;

#[derive(Parser, Debug)]
#[command(name = "varorder", version, about = "Variable-order time-changed Brownian motion laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate paths and write X(t), L(t), g(t), h(t) and age on a grid.
    Simulate(RunArgs),
    /// Ensemble occupation fractions and hit probabilities of a target set.
    Occupation(RunArgs),
    /// Log-log growth exponents of occupation and clock components.
    Growth(RunArgs),
    /// Classify the regime of the field and check it by simulation.
    Regime(RunArgs),
    /// Solve the fractional equation and report the mild residual.
    Pde(RunArgs),
    /// Run the built-in oracle suite.
    Validate(RunArgs),
    /// Compare Monte Carlo and solver values of E[u(X(T))].
    Compare(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to VARORDER_THREADS, then all cores).
    #[arg(long, env = "VARORDER_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Result of an experiment, mapped to the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 2,
            Self::Inconclusive => 3,
        }
    }
}

impl From<Verdict> for Outcome {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Consistent => Self::Pass,
            Verdict::Inconsistent => Self::Fail,
            Verdict::Inconclusive => Self::Inconclusive,
        }
    }
}

/// Parses arguments, runs the experiment and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (experiment, args) = match cli.command {
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Occupation(a) => (Experiment::Occupation, a),
        Command::Growth(a) => (Experiment::Growth, a),
        Command::Regime(a) => (Experiment::Regime, a),
        Command::Pde(a) => (Experiment::Pde, a),
        Command::Validate(a) => (Experiment::Validate, a),
        Command::Compare(a) => (Experiment::Compare, a),
    };
    match execute(experiment, &args) {
        Ok(o) => o.code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(e) = cfg.experiment {
        if e != experiment {
            return Err(Error::Config(format!(
                "experiment: config declares \"{e}\" but subcommand is \"{experiment}\""
            )));
        }
    }
    cfg.experiment = Some(experiment);
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output.dir = o.display().to_string();
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    pool.install(|| run_experiment(&cfg))
}

/// Runs a parsed configuration, writing artifacts under `output.dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let experiment = cfg
        .experiment
        .ok_or_else(|| Error::Config("experiment: not set".into()))?;
    let ctx = Ctx {
        cfg,
        dir: PathBuf::from(&cfg.output.dir),
        meta: Meta::new(experiment.name(), &cfg.hash(), cfg.seed),
    };
    std::fs::create_dir_all(&ctx.dir)?;
    match experiment {
        Experiment::Simulate => simulate(&ctx),
        Experiment::Occupation => occupation(&ctx),
        Experiment::Growth => growth(&ctx),
        Experiment::Regime => regime(&ctx),
        Experiment::Pde => pde(&ctx),
        Experiment::Validate => validate(&ctx),
        Experiment::Compare => compare(&ctx),
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    meta: Meta,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn wants(&self, f: Format) -> bool {
        self.cfg.output.formats.contains(&f)
    }
}

fn simulate(ctx: &Ctx) -> Result<Outcome> {
    let (field, _) = ctx.cfg.field()?;
    let sim = ctx.cfg.sim()?;
    let grid = sim.checkpoints()?;
    let target = sim.target(&field)?;
    let cfg = sim.sim_config(*grid.last().unwrap());
    let mut rows = Vec::new();
    let mut complete = 0;
    for p in 0..sim.n_paths {
        let mut stream = RandomStream::new(ctx.cfg.seed, p as u64);
        let path = simulate_time_changed(&field, &cfg, &grid, std::slice::from_ref(&target), &mut stream)?;
        complete += (path.status == crate::sim::PathStatus::Complete) as usize;
        let s = &path.sample;
        for j in 0..s.len() {
            rows.push(vec![
                p.to_string(),
                num(s.external_times[j]),
                num(s.positions[j]),
                num(s.l_values[j]),
                num(s.g_values[j]),
                num(s.h_values[j]),
                num(s.age[j]),
                num(path.occupation[0][j]),
                (path.hits[0][j] as u8).to_string(),
            ]);
        }
    }
    write_csv(
        &ctx.path("paths.csv"),
        &ctx.meta.clone().with("target", target.to_string()),
        &["path", "t", "x", "l", "g", "h", "age", "occupation", "in_target"],
        &rows,
    )?;
    if ctx.wants(Format::Bin) {
        let mut stream = RandomStream::new(ctx.cfg.seed, 0);
        let path = simulate_coupled(&field, &cfg, None, &[], &mut stream)?;
        write_path_dump(&path, &field, BufWriter::new(File::create(ctx.path("path_0.bin"))?))?;
    }
    println!("simulate: {complete}/{} paths complete, grid of {} times", sim.n_paths, grid.len());
    Ok(Outcome::Pass)
}

fn summary_rows(s: &EnsembleSummary) -> Vec<Vec<String>> {
    (0..s.t_grid.len())
        .map(|j| {
            let (lo, hi) = s.occ_ci(j);
            let (hlo, hhi) = s.hit_ci(j);
            vec![
                num(s.t_grid[j]),
                num(s.occ_mean[j]),
                num(lo),
                num(hi),
                num(s.hit_prob[j]),
                num(hlo),
                num(hhi),
            ]
        })
        .collect()
}

const SUMMARY_HEADER: [&str; 7] = ["t", "occ_mean", "occ_lo", "occ_hi", "hit_prob", "hit_lo", "hit_hi"];

fn occupation(ctx: &Ctx) -> Result<Outcome> {
    let (field, _) = ctx.cfg.field()?;
    let sim = ctx.cfg.sim()?;
    let grid = sim.checkpoints()?;
    let target = sim.target(&field)?;
    let cfg = sim.sim_config(*grid.last().unwrap());
    let s = run_ensemble(&field, &cfg, &grid, sim.n_paths, &target, ctx.cfg.seed)?;
    let meta = ctx
        .meta
        .clone()
        .with("target", target.to_string())
        .with("n_paths", s.n_paths.to_string())
        .with("n_incomplete", s.n_incomplete.to_string());
    write_csv(&ctx.path("occupation.csv"), &meta, &SUMMARY_HEADER, &summary_rows(&s))?;
    let last = s.t_grid.len() - 1;
    println!(
        "occupation of {target} at t={}: {:.4} +- {:.4}; hit probability {:.4}",
        s.t_grid[last], s.occ_mean[last], s.occ_ci_halfwidth[last], s.hit_prob[last]
    );
    Ok(Outcome::Pass)
}

fn growth(ctx: &Ctx) -> Result<Outcome> {
    let (field, _) = ctx.cfg.field()?;
    let sim = ctx.cfg.sim()?;
    let grid = sim.internal_grid()?;
    let split = sim.target(&field)?;
    let cfg = SimConfig::new(sim.dt, f64::INFINITY)
        .with_x0(sim.x0)
        .with_max_steps(sim.max_steps)
        .with_internal_horizon(*grid.last().unwrap());
    let traces = run_growth_ensemble(&field, &cfg, &split, &grid, sim.n_paths, ctx.cfg.seed)?;
    let quantities = [
        GrowthQuantity::Occupation,
        GrowthQuantity::Sigma1OfH,
        GrowthQuantity::Sigma2OfRest,
        GrowthQuantity::Sigma,
    ];
    let mut fit_rows = Vec::new();
    let mut fits = Vec::new();
    for q in quantities {
        let f = fit_growth_exponent(&traces, q)?;
        println!("{:>15}: slope {:.4} +- {:.4} (median {:.4}, {} paths)", f.quantity, f.slope, f.slope_stderr, f.median_slope, f.n_paths_used);
        fit_rows.push(vec![
            f.quantity.clone(),
            num(f.slope),
            num(f.slope_stderr),
            num(f.median_slope),
            f.n_paths_used.to_string(),
        ]);
        fits.push(f);
    }
    let meta = ctx.meta.clone().with("split_set", split.to_string());
    write_csv(&ctx.path("growth_fits.csv"), &meta, &["quantity", "slope", "stderr", "median_slope", "n_paths"], &fit_rows)?;
    let series: Vec<Vec<String>> = (0..grid.len())
        .map(|j| {
            let mut r = vec![num(grid[j])];
            r.extend(fits.iter().map(|f| num(f.log_q[j])));
            r
        })
        .collect();
    write_csv(
        &ctx.path("growth_series.csv"),
        &meta,
        &["t", "mean_log_H", "mean_log_sigma1_of_H", "mean_log_sigma2_of_rest", "mean_log_sigma"],
        &series,
    )?;
    Ok(Outcome::Pass)
}

fn regime(ctx: &Ctx) -> Result<Outcome> {
    let (field, spec) = ctx.cfg.field()?;
    let sim = ctx.cfg.sim()?;
    let structure = spec.structure(&field)?;
    let prediction = crate::alpha::classify_regime(&structure);
    let header = [
        "kind",
        "condition_lhs",
        "condition_rhs",
        "occ_final",
        "hit_final",
        "trend",
        "verdict",
    ];
    if prediction.kind == RegimeKind::Critical {
        let row = vec![
            format!("{:?}", prediction.kind),
            num(prediction.condition_lhs),
            num(prediction.condition_rhs),
            String::new(),
            String::new(),
            String::new(),
            "Inconclusive".into(),
        ];
        write_csv(&ctx.path("regime.csv"), &ctx.meta, &header, &[row])?;
        println!("regime: critical case, no prediction to verify");
        return Ok(Outcome::Inconclusive);
    }
    let opts = sim.regime_options(ctx.cfg.seed)?;
    let cfg = sim.sim_config(*opts.checkpoints.last().unwrap());
    let r = verify_regime(&field, &structure, &cfg, sim.n_paths, &opts)?;
    let meta = ctx.meta.clone().with("measured_set", r.measured_set.to_string());
    let row = vec![
        format!("{:?}", r.prediction.kind),
        num(r.prediction.condition_lhs),
        num(r.prediction.condition_rhs),
        num(r.occ_final),
        num(r.hit_final),
        r.trend.to_string(),
        format!("{:?}", r.verdict),
    ];
    write_csv(&ctx.path("regime.csv"), &meta, &header, &[row])?;
    write_csv(&ctx.path("regime_series.csv"), &meta, &SUMMARY_HEADER, &summary_rows(&r.summary))?;
    println!(
        "regime: {:?} ({} vs {}); occupation {:.4}, hit {:.4}, trend {} -> {:?}",
        r.prediction.kind, r.prediction.condition_lhs, r.prediction.condition_rhs, r.occ_final, r.hit_final, r.trend, r.verdict
    );
    Ok(r.verdict.into())
}

fn pde(ctx: &Ctx) -> Result<Outcome> {
    let (field, _) = ctx.cfg.field()?;
    let p = ctx.cfg.pde()?;
    let grid = p.grid()?;
    let u = p.initial.sample(&grid);
    let sol = solve_fde(&field, &grid, &u, p.t_final, p.dt)?;
    let residual = mild_residual(&sol, &field);
    let nodes = grid.nodes();
    let mut rows = Vec::new();
    for (n, row) in sol.q.iter().enumerate() {
        if n % ctx.cfg.output.stride != 0 && n + 1 != sol.q.len() {
            continue;
        }
        for (x, q) in nodes.iter().zip(row) {
            rows.push(vec![num(sol.t_grid[n]), num(*x), num(*q)]);
        }
    }
    let meta = ctx.meta.clone().with("mild_residual", num(residual));
    write_csv(&ctx.path("solution.csv"), &meta, &["t", "x", "q"], &rows)?;
    if ctx.wants(Format::Bin) {
        write_field_dump(&sol, BufWriter::new(File::create(ctx.path("solution.bin"))?))?;
    }
    println!(
        "pde: {} steps of dt={}, max |q| {:.6}, edge amplitude {:.3e}, mild residual {:.3e}",
        sol.q.len() - 1,
        sol.dt,
        sol.max_norm(),
        sol.edge_amplitude(2),
        residual
    );
    Ok(Outcome::Pass)
}

fn validate(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.cfg.sim.as_ref().map_or(200_000, |s| s.n_paths.max(1000));
    let checks = run_validation(ctx.cfg.seed, n)?;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()])
        .collect();
    write_csv(&ctx.path("validate.csv"), &ctx.meta, &["check", "passed", "detail"], &rows)?;
    for c in &checks {
        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.passed) {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn compare(ctx: &Ctx) -> Result<Outcome> {
    let (field, _) = ctx.cfg.field()?;
    let p = ctx.cfg.pde()?;
    let grid = p.grid()?;
    let mut times = p.times.clone();
    if !times.contains(&p.t_final) {
        times.push(p.t_final);
    }
    let start_points = if p.start_points.is_empty() {
        vec![0.0]
    } else {
        p.start_points.clone()
    };
    let opts = McOptions {
        sim_dt: p.mc_dt.unwrap_or(p.dt),
        n_paths: p.mc_paths,
        base_seed: ctx.cfg.seed,
        start_points,
    };
    let mut rows = Vec::new();
    let mut all = true;
    for &t in &times {
        let r = compare_mc_pde(&field, &grid, &p.initial, t, p.dt, &opts, p.tolerance)?;
        all &= r.all_within;
        for pt in &r.points {
            rows.push(vec![
                num(t),
                num(pt.x),
                num(pt.mc_mean),
                num(pt.mc_stderr),
                num(pt.pde),
                pt.within.to_string(),
            ]);
            println!(
                "T={t} x={}: mc {:.5} +- {:.5}, pde {:.5} {}",
                pt.x,
                pt.mc_mean,
                pt.mc_stderr,
                pt.pde,
                if pt.within { "ok" } else { "MISMATCH" }
            );
        }
    }
    write_csv(&ctx.path("compare.csv"), &ctx.meta, &["t", "x", "mc_mean", "mc_stderr", "pde", "within"], &rows)?;
    Ok(if all { Outcome::Pass } else { Outcome::Fail })
}

/// Convenience for callers that already hold a config file path.
pub fn run_config_file(path: &Path) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(path)?;
    run_experiment(&cfg)
}
