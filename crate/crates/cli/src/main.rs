use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use deepte::controller::ControllerConfig;
use deepte::delay::DelayFunction;
use deepte::net::{PathSet, Topology, DEFAULT_PATHS_PER_DEMAND};
use deepte::sim::{
    decision_rc, read_steps_csv, run_simulation, summarize_steps, summary_table,
    write_stats_csv, write_steps_csv, write_summary_csv, ExperimentConfig, Method,
    MetricsReport, OptCache, Scenario, SummaryRow,
};
use deepte::topologies;
use deepte::traffic::{
    fit_within_intervals, generate_components, scale_series, DemandSeries, ForegroundRule,
    GenParams, ScaleOptions,
};

#[derive(Parser)]
#[command(name = "deepte", version, about = "Traffic-engineering simulation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and scale a synthetic demand series.
    GenTraffic(GenTrafficArgs),
    /// List the candidate paths of every demand.
    Paths(PathsArgs),
    /// Simulate one routing method on one series.
    Run(RunArgs),
    /// Simulate several methods on several series and summarize.
    Compare(CompareArgs),
    /// Summarize per-step CSVs written by `run` or `compare`.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    /// Diurnal sinusoid.
    Sinusoid,
    /// Constant within each control interval.
    PiecewiseConstant,
    /// Linear within each control interval.
    PiecewiseLinear,
}

#[derive(Args)]
struct GenTrafficArgs {
    /// Topology file, or the name of a bundled topology.
    #[arg(long)]
    topo: String,
    #[arg(long, default_value_t = 3)]
    days: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    elephants: usize,
    /// Standard deviation of the multiplicative noise.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Mean link utilization under OPT after scaling.
    #[arg(long, default_value_t = 0.35)]
    utilization: f64,
    #[arg(long, value_enum, default_value_t = Shape::Sinusoid)]
    shape: Shape,
    #[arg(long, default_value_t = 5)]
    sample_min: u32,
    /// Interval length used by the piecewise shapes.
    #[arg(long, default_value_t = 30)]
    control_min: u32,
    #[arg(long, default_value_t = DEFAULT_PATHS_PER_DEMAND)]
    paths: usize,
}

#[derive(Args)]
struct PathsArgs {
    #[arg(long)]
    topo: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PATHS_PER_DEMAND)]
    paths: usize,
}

#[derive(Args, Clone)]
struct SimArgs {
    #[arg(long)]
    topo: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000.0)]
    alpha1: f64,
    #[arg(long, default_value_t = ControllerConfig::default().alpha2)]
    alpha2: f64,
    #[arg(long, default_value_t = 2)]
    horizon_h: usize,
    #[arg(long, default_value_t = 3)]
    past_l: usize,
    #[arg(long, default_value_t = ControllerConfig::default().n_phi)]
    n_phi: usize,
    #[arg(long, default_value_t = 30)]
    control_min: u32,
    #[arg(long, default_value_t = 5)]
    sample_min: u32,
    /// Leading days used for training.
    #[arg(long, default_value_t = 2)]
    train_days: usize,
    #[arg(long, default_value_t = 1)]
    eval_days: usize,
    /// Evaluate this many control intervals instead of whole days.
    #[arg(long)]
    eval_intervals: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_PATHS_PER_DEMAND)]
    paths: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Series files; repeat the flag or separate with commas.
    #[arg(long, required = true, value_delimiter = ',')]
    series: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "deepte,const,tg30,opt")]
    methods: Vec<Method>,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory searched recursively for per-step CSVs.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 6)]
    samples_per_interval: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenTraffic(a) => gen_traffic(a),
        Command::Paths(a) => paths(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Report(a) => report(a),
    }
}

/// A bundled topology by name, else a topology file. Returns it with its name.
fn load_topology(spec: &str) -> Result<(Topology, String)> {
    if topologies::NAMES.contains(&spec) {
        return Ok((topologies::builtin(spec)?, spec.to_string()));
    }
    let path = Path::new(spec);
    let topo = Topology::load(path).with_context(|| format!("loading topology {spec}"))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((topo, name))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn samples_per_interval(control_min: u32, sample_min: u32) -> Result<usize> {
    if sample_min == 0 || control_min % sample_min != 0 {
        bail!("control interval ({control_min} min) must be a multiple of the sample interval ({sample_min} min)");
    }
    Ok((control_min / sample_min) as usize)
}

fn gen_traffic(a: GenTrafficArgs) -> Result<()> {
    let (topo, name) = load_topology(&a.topo)?;
    let n = samples_per_interval(a.control_min, a.sample_min)?;
    let params = GenParams {
        days: a.days,
        sample_interval: f64::from(a.sample_min) * 60.0,
        elephant_count: a.elephants,
        noise_level: a.noise,
        seed: a.seed,
        utilization_target: a.utilization,
        foreground: ForegroundRule::for_topology(&name),
        ..GenParams::default()
    };
    let comp = generate_components(&topo, &params)?;
    let clean = match a.shape {
        Shape::Sinusoid => comp.clean.clone(),
        Shape::PiecewiseConstant => fit_within_intervals(&comp.clean, n, 0)?,
        Shape::PiecewiseLinear => fit_within_intervals(&comp.clean, n, 1)?,
    };
    let raw = DemandSeries::new(
        comp.demands.clone(),
        comp.combine(&clean),
        params.sample_interval,
        comp.elephants.clone(),
        params.seed,
    )?;
    let pathset = PathSet::build(&topo, a.paths)?;
    let opts = ScaleOptions {
        target_mean: a.utilization,
        ..ScaleOptions::default()
    };
    let scaled = scale_series(&raw, &topo, &pathset, &DelayFunction::default(), &opts)?;
    create_dir(&a.out)?;
    let path = a.out.join("series.csv");
    scaled.series.save(&path)?;
    eprintln!(
        "wrote {} ({} steps, gamma {:.6}, OPT utilization mean {:.3} max {:.3})",
        path.display(),
        scaled.series.steps(),
        scaled.gamma,
        scaled.mean_utilization,
        scaled.max_utilization
    );
    Ok(())
}

fn paths(a: PathsArgs) -> Result<()> {
    let (topo, _) = load_topology(&a.topo)?;
    let ps = PathSet::build(&topo, a.paths)?;
    create_dir(&a.out)?;
    let path = a.out.join("paths.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(["demand", "src", "dst", "path", "hops", "nodes"])?;
    for d in 0..ps.demand_count() {
        let dem = ps.demand(d);
        for (k, p) in ps.paths(d).iter().enumerate() {
            let nodes: Vec<String> = p.nodes.iter().map(|v| v.to_string()).collect();
            w.write_record([
                d.to_string(),
                dem.src.to_string(),
                dem.dst.to_string(),
                k.to_string(),
                p.hops().to_string(),
                nodes.join(" "),
            ])?;
        }
    }
    w.flush()?;
    eprintln!("wrote {} ({} paths)", path.display(), ps.path_count());
    Ok(())
}

/// Series label: the file stem, or the parent directory for `series.csv`.
fn series_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match stem.as_deref() {
        Some("series") | None => path
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into()),
        Some(s) => s.to_string(),
    }
}

impl SimArgs {
    fn scenario(&self, series: &Path) -> Result<Scenario> {
        let (topo, _) = load_topology(&self.topo)?;
        let series = DemandSeries::load(series)
            .with_context(|| format!("loading series {}", series.display()))?;
        Ok(Scenario::new(topo, series, self.paths)?)
    }

    fn experiment(&self, method: Method, sc: &Scenario) -> Result<ExperimentConfig> {
        let n = samples_per_interval(self.control_min, self.sample_min)?;
        let sample = f64::from(self.sample_min) * 60.0;
        if (sc.series().sample_interval() - sample).abs() > 1e-9 {
            bail!(
                "series is sampled every {} s but --sample-min asks for {sample} s",
                sc.series().sample_interval()
            );
        }
        let controller = ControllerConfig {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            past: self.past_l,
            horizon: self.horizon_h,
            samples_per_interval: n,
            n_phi: self.n_phi,
            ..ControllerConfig::default()
        };
        let mut cfg = ExperimentConfig::daily(
            method,
            controller,
            sample,
            self.train_days,
            self.eval_days,
            self.seed,
        )?;
        if let Some(k) = self.eval_intervals {
            cfg.eval_intervals = k;
        }
        cfg.validate(sc.series())?;
        Ok(cfg)
    }
}

fn write_run(dir: &Path, report: &MetricsReport) -> Result<()> {
    write_steps_csv(create_file(&dir.join(format!("{}.csv", report.method)))?, &report.steps)?;
    if report.method == Method::DeepTe {
        let path = dir.join("decisions.csv");
        let mut w = csv::Writer::from_writer(create_file(&path)?);
        w.write_record(["interval", "status", "fallback", "objective", "pe_rank", "pe_required", "iterations"])?;
        for d in &report.decisions {
            w.write_record([
                d.interval.to_string(),
                d.status.to_string(),
                u8::from(d.fallback).to_string(),
                d.objective.map(|o| o.to_string()).unwrap_or_default(),
                d.pe_rank.to_string(),
                d.pe_required.to_string(),
                d.iterations.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn log_run(label: &str, r: &MetricsReport) {
    eprintln!(
        "{label} {}: mean PR {:.4}, mean RC {:.4}, {} fallbacks, {:.1} s",
        r.method,
        r.mean_pr(),
        r.mean_rc(),
        r.fallback_count(),
        r.wall_clock
    );
}

fn run(a: RunArgs) -> Result<()> {
    let sc = a.sim.scenario(&a.series)?;
    let cfg = a.sim.experiment(a.method, &sc)?;
    let report = run_simulation(&sc, &cfg, &mut OptCache::new())?;
    let label = series_label(&a.series);
    log_run(&label, &report);
    create_dir(&a.sim.out)?;
    write_run(&a.sim.out, &report)?;
    write_summary_csv(create_file(&a.sim.out.join("summary.csv"))?, &[report.summary(&label)])?;
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let mut labels: Vec<String> = a.series.iter().map(|p| series_label(p)).collect();
    let mut sorted = labels.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != labels.len() {
        // Fall back to positional labels when names collide.
        labels = (0..labels.len()).map(|i| format!("s{i}")).collect();
    }
    let mut rows = Vec::new();
    for (path, label) in a.series.iter().zip(&labels) {
        let sc = a.sim.scenario(path)?;
        let dir = a.sim.out.join(label);
        create_dir(&dir)?;
        let mut cache = OptCache::new();
        for &method in &a.methods {
            let cfg = a.sim.experiment(method, &sc)?;
            let report = run_simulation(&sc, &cfg, &mut cache)?;
            log_run(label, &report);
            write_run(&dir, &report)?;
            rows.push(report.summary(label));
        }
    }
    write_tables(&a.sim.out, rows)
}

fn write_tables(out: &Path, rows: Vec<SummaryRow>) -> Result<()> {
    let table = summary_table(rows);
    write_summary_csv(create_file(&out.join("summary.csv"))?, &table.rows)?;
    write_stats_csv(create_file(&out.join("quartiles.csv"))?, &table.stats)?;
    Ok(())
}

/// Per-step CSVs under `dir`, in sorted order. Files whose header is not the
/// per-step header are skipped.
fn step_files(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            step_files(&p, found)?;
        } else if p.extension().is_some_and(|e| e == "csv") {
            let head = fs::read_to_string(&p)?;
            if head.starts_with("step,time_s,method,") {
                found.push(p);
            }
        }
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let mut files = Vec::new();
    step_files(&a.input, &mut files)?;
    if files.is_empty() {
        bail!("no per-step CSVs under {}", a.input.display());
    }
    let mut rows = Vec::new();
    let mut decision = Vec::new();
    for f in &files {
        let steps = read_steps_csv(File::open(f)?)
            .with_context(|| format!("reading {}", f.display()))?;
        let label = f
            .parent()
            .filter(|p| *p != a.input)
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into());
        let row = summarize_steps(&label, &steps)?;
        decision.push(decision_rc(&steps, a.samples_per_interval));
        rows.push(row);
    }
    create_dir(&a.out)?;
    let path = a.out.join("report.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(["series", "method", "mean_pr", "mean_rc", "median_pr", "fallback_frac", "decision_rc"])?;
    for (r, d) in rows.iter().zip(&decision) {
        w.write_record([
            r.series.clone(),
            r.method.to_string(),
            r.mean_pr.to_string(),
            r.mean_rc.to_string(),
            r.median_pr.to_string(),
            r.fallback_frac.to_string(),
            d.to_string(),
        ])?;
    }
    w.flush()?;
    write_tables(&a.out, rows)
}
