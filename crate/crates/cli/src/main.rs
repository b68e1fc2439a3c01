mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use isoperiod::experiments::{run_recipe, ExperimentRecipe, RecipeRegistry, ReportDocument};
use isoperiod::integrate::{self, StepperConfig};
use isoperiod::period::{detect_period, detect_period_lv, PeriodEstimate};
use isoperiod::phase::fmt17;
use isoperiod::semiclassical::{
    confining_half_width, discretize_1d, eig_richardson, eig_tridiagonal, plot_script, window, Grid1D,
};
use isoperiod::systems::{lv_embed, LotkaVolterra, Potential1D, SystemRegistry, SystemSpec};
use isoperiod::PhasePoint;

const EXIT_ERROR: u8 = 1;
const EXIT_VERDICT: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Periods of closed Hamiltonian flows and semiclassical difference spectra.
///
/// Any subcommand accepts `--config FILE.json` holding flag names as keys;
/// flags given on the command line override it. ISOPERIOD_THREADS caps the
/// number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "isoperiod", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write `t,q..,p..,H` rows.
    Integrate(IntegrateArgs),
    /// Detect the minimal period of one orbit.
    Period(PeriodArgs),
    /// Period survey over sampled points of one energy surface.
    Survey(SurveyArgs),
    /// Finite-difference eigenvalues of `-c hbar^2 d^2/dx^2 + V`.
    Spectrum(SpectrumArgs),
    /// Difference-spectrum classification over an hbar schedule.
    Diffspec(DiffspecArgs),
    /// Run a builtin or file recipe and write its report.
    Recipe(RecipeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Directory for output files; without it the primary output goes to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Format of the primary output [default: csv]. Report commands print
    /// only their summary line to stdout unless a format is given.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// Builtin system name (ho, kepler, lv, potential, aniso, or full kind),
    /// an inline JSON system spec, or a path to one.
    #[arg(long, default_value = "ho")]
    system: String,
    /// Mass [default: system default, 1].
    #[arg(long)]
    m: Option<f64>,
    /// Spring constant [default: system default, 1].
    #[arg(long)]
    k: Option<f64>,
    /// Degrees of freedom [default: system default, 1].
    #[arg(long)]
    dof: Option<usize>,
    /// Extra system parameter `KEY=VALUE`, VALUE parsed as JSON when possible.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct StepArgs {
    /// Step size.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Integrator: verlet, implicit-midpoint, implicit-midpoint-4
    /// [default: verlet if separable, else implicit-midpoint].
    #[arg(long)]
    method: Option<String>,
}

#[derive(Debug, Args)]
struct StartArgs {
    /// Initial positions, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Vec<f64>,
    /// Initial momenta, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Vec<f64>,
    /// Initial LV populations (replaces --q/--p for lotka-volterra).
    #[arg(long, value_delimiter = ',')]
    x0: Vec<f64>,
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    start: StartArgs,
    #[command(flatten)]
    step: StepArgs,
    /// Final time.
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct PeriodArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    start: StartArgs,
    #[command(flatten)]
    step: StepArgs,
    /// Search horizon [default: 50 reference periods, else 1000].
    #[arg(long)]
    horizon: Option<f64>,
    /// Return tolerance [default: 1e-6 (|y0| + 1)].
    #[arg(long)]
    return_tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SurveyArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Energy of the surface.
    #[arg(long, default_value_t = 1.0)]
    energy: f64,
    /// Number of sampled points.
    #[arg(long, default_value_t = 64)]
    count: usize,
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative spread below which periods count as equal.
    #[arg(long, default_value_t = 1e-6)]
    tol_rel: f64,
    #[command(flatten)]
    step: StepArgs,
    /// Search horizon [default: 50 reference periods, else 1000].
    #[arg(long)]
    horizon: Option<f64>,
    /// Return tolerance [default: 1e-6 (|y0| + 1)].
    #[arg(long)]
    return_tol: Option<f64>,
    /// Exit with code 2 unless the verdict is SAME-PERIOD.
    #[arg(long)]
    expect_same: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Potential polynomial in x, e.g. `x^4` or `0.5*x^2`.
    #[arg(long, default_value = "x^2")]
    potential: String,
    /// Kinetic coefficient in `c p^2 + V`.
    #[arg(long, default_value_t = 1.0)]
    kinetic: f64,
    #[arg(long, default_value_t = 0.05)]
    hbar: f64,
    /// Window centre.
    #[arg(long, default_value_t = 1.0)]
    energy: f64,
    /// Window constant: eigenvalues within c hbar^(1-delta) of the energy.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Interior grid points.
    #[arg(long, default_value_t = 4000)]
    grid_n: usize,
    /// Box half-width [default: from the confinement margin].
    #[arg(long)]
    half_width: Option<f64>,
    /// Extrapolate eigenvalues from the grid and the grid of half the spacing.
    #[arg(long)]
    richardson: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Lattice,
    Dense,
    Inconclusive,
}

impl Expect {
    fn verdict(self) -> &'static str {
        match self {
            Self::Lattice => "LATTICE",
            Self::Dense => "DENSE",
            Self::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Args)]
struct DiffspecArgs {
    /// One-dimensional potential (exclusive with --separable) [default: x^2].
    #[arg(long, conflicts_with = "separable")]
    potential: Option<String>,
    /// Separable two-dimensional potential `Vx:Vy`, e.g. `x^2:2y^2`.
    #[arg(long)]
    separable: Option<String>,
    /// Strictly decreasing hbar schedule, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.02")]
    hbars: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    energy: f64,
    /// Window constant: eigenvalues within c hbar^(1-delta) of the energy.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Interior grid points per axis.
    #[arg(long, default_value_t = 4000)]
    grid_n: usize,
    /// Box half-width [default: from the confinement margin].
    #[arg(long)]
    half_width: Option<f64>,
    /// Histogram bin width.
    #[arg(long, default_value_t = 0.1)]
    bin_width: f64,
    /// Histogram range [0, RANGE).
    #[arg(long, default_value_t = 10.0)]
    range: f64,
    /// Drift allowed for a persistent cluster point [default: bin width].
    #[arg(long)]
    persist_tol: Option<f64>,
    /// Use the plain 3-point eigenvalues instead of extrapolating from the
    /// grid and the grid of half the spacing.
    #[arg(long)]
    no_richardson: bool,
    /// Required verdict; a different verdict exits with code 2.
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    /// Also write a matplotlib script for the histograms.
    #[arg(long)]
    emit_plot: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct RecipeArgs {
    /// Builtin recipe name.
    #[arg(required_unless_present_any = ["file", "list"])]
    name: Option<String>,
    /// Recipe JSON file instead of a builtin.
    #[arg(long, conflicts_with = "name")]
    file: Option<PathBuf>,
    /// List builtin recipes and exit.
    #[arg(long)]
    list: bool,
    /// Override the recipe seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Required verdict; a different verdict exits with code 2.
    #[arg(long)]
    expect: Option<String>,
    /// Also write a matplotlib script for diffspec histograms.
    #[arg(long)]
    emit_plot: bool,
    #[command(flatten)]
    out: OutputArgs,
}

/// Primary result of a subcommand.
struct Outcome {
    /// Stem for files in `--out-dir`.
    stem: String,
    csv: String,
    json: String,
    /// One-line human summary.
    summary: String,
    /// Report-backed outputs write `<stem>.report.json` and `<stem>.summary.csv`.
    report: bool,
    /// Extra files: (name, contents).
    extras: Vec<(String, String)>,
    verdict_ok: bool,
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv.clone()) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli.command, &argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERDICT),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("ISOPERIOD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| anyhow!("ISOPERIOD_THREADS must be a positive integer (got `{v}`)"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cmd: Command, argv: &[std::ffi::OsString]) -> Result<bool> {
    let (outcome, out) = match cmd {
        Command::Integrate(a) => (cmd_integrate(&a)?, a.out),
        Command::Period(a) => (cmd_period(&a)?, a.out),
        Command::Survey(a) => (cmd_survey(&a)?, a.out),
        Command::Spectrum(a) => (cmd_spectrum(&a)?, a.out),
        Command::Diffspec(a) => (cmd_diffspec(&a)?, a.out),
        Command::Recipe(a) => {
            if a.list {
                let reg = RecipeRegistry::builtin();
                for name in reg.names() {
                    let r = reg.get(name)?;
                    println!("{name}\t{}", r.protocol);
                }
                return Ok(true);
            }
            (cmd_recipe(&a)?, a.out)
        }
    };
    emit(&outcome, &out, argv)?;
    Ok(outcome.verdict_ok)
}

/// Writes files or prints the primary output. The summary goes to stdout
/// unless stdout already carries data.
fn emit(o: &Outcome, out: &OutputArgs, argv: &[std::ffi::OsString]) -> Result<()> {
    let (body, ext) = match out.format.unwrap_or(Format::Csv) {
        Format::Csv => (&o.csv, "csv"),
        Format::Json => (&o.json, "json"),
    };
    match &out.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            if o.report {
                write(dir, &format!("{}.report.json", o.stem), &o.json)?;
                write(dir, &format!("{}.summary.csv", o.stem), &o.csv)?;
            } else {
                write(dir, &format!("{}.{ext}", o.stem), body)?;
            }
            for (name, text) in &o.extras {
                write(dir, name, text)?;
            }
            write(dir, &format!("{}.meta.json", o.stem), &metadata(argv)?)?;
            println!("{}", o.summary);
        }
        None if o.report && out.format.is_none() => println!("{}", o.summary),
        None => {
            print!("{body}");
            if !body.ends_with('\n') {
                println!();
            }
            eprintln!("{}", o.summary);
        }
    }
    Ok(())
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Run metadata kept out of the primary files so that reruns stay identical.
fn metadata(argv: &[std::ffi::OsString]) -> Result<String> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH)?;
    let doc = json!({
        "tool_version": isoperiod::VERSION,
        "argv": argv.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>(),
        "unix_time": now.as_secs_f64(),
        "threads": rayon::current_num_threads(),
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn system_spec(a: &SystemArgs) -> Result<SystemSpec> {
    let s = a.system.trim();
    let mut spec: SystemSpec = if s.starts_with('{') {
        serde_json::from_str(s).context("parsing --system JSON")?
    } else if s.ends_with(".json") {
        let text = std::fs::read_to_string(s).with_context(|| format!("reading {s}"))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {s}"))?
    } else {
        SystemSpec::new(s, json!({}))
    };
    let reg = SystemRegistry::builtin();
    spec.kind = reg.resolve(&spec.kind).to_string();
    if let Some(m) = a.m {
        spec.params.insert("m".into(), json!(m));
    }
    if let Some(k) = a.k {
        spec.params.insert("k".into(), json!(k));
    }
    if let Some(d) = a.dof {
        spec.params.insert("dof".into(), json!(d));
    }
    for kv in &a.params {
        let (key, val) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--param expects KEY=VALUE (got `{kv}`)"))?;
        let v = serde_json::from_str(val).unwrap_or_else(|_| Value::String(val.to_string()));
        spec.params.insert(key.trim().to_string(), v);
    }
    Ok(spec)
}

fn stepper(sys: &dyn isoperiod::systems::Hamiltonian, a: &StepArgs) -> StepperConfig {
    match &a.method {
        Some(m) => StepperConfig {
            method: m.clone(),
            ..StepperConfig::verlet(a.h)
        },
        None => StepperConfig::default_for(sys, a.h),
    }
}

fn start_point(spec: &SystemSpec, s: &StartArgs) -> Result<PhasePoint> {
    if !s.x0.is_empty() {
        if spec.kind != LotkaVolterra::KIND {
            bail!("--x0 applies to lotka-volterra only");
        }
        let lv = LotkaVolterra::from_system_spec(spec)?;
        return Ok(lv_embed(&s.x0, &lv)?.phase_point());
    }
    if s.q.is_empty() {
        bail!("give the initial state with --q and --p (or --x0 for lotka-volterra)");
    }
    let p = if s.p.is_empty() { vec![0.0; s.q.len()] } else { s.p.clone() };
    Ok(PhasePoint::new(s.q.clone(), p)?)
}

fn cmd_integrate(a: &IntegrateArgs) -> Result<Outcome> {
    let spec = system_spec(&a.system)?;
    let sys = spec.build()?;
    let pt0 = start_point(&spec, &a.start)?;
    let cfg = stepper(sys.as_ref(), &a.step);
    let traj = integrate::integrate(sys.as_ref(), &pt0, &cfg, a.t_max, None)?;
    let mut summary = format!(
        "steps={} t_end={} max_drift={:e}",
        traj.len() - 1,
        fmt17(*traj.times.last().unwrap()),
        traj.max_drift
    );
    if let Some(r) = &traj.exit_reason {
        let _ = write!(summary, " stopped: {r}");
    }
    Ok(Outcome {
        stem: "trajectory".into(),
        csv: integrate::csv::to_csv(&traj, sys.as_ref())?,
        json: serde_json::to_string_pretty(&traj)? + "\n",
        summary,
        report: false,
        extras: vec![],
        verdict_ok: true,
    })
}

fn estimate_csv(rows: &[(&str, &PeriodEstimate)]) -> String {
    let mut csv = String::from("space,verdict,T,residual,returns_used\n");
    for (space, e) in rows {
        let _ = writeln!(
            csv,
            "{space},{},{},{},{}",
            e.verdict.as_str(),
            e.period.map(fmt17).unwrap_or_default(),
            fmt17(e.residual),
            e.returns_used
        );
    }
    csv
}

fn cmd_period(a: &PeriodArgs) -> Result<Outcome> {
    let spec = system_spec(&a.system)?;
    let sys = spec.build()?;
    let cfg = stepper(sys.as_ref(), &a.step);
    let (csv, json, summary) = if !a.start.x0.is_empty() {
        let lv = LotkaVolterra::from_system_spec(&spec)?;
        let (x, d) = detect_period_lv(&lv, &a.start.x0, &cfg, a.horizon, a.return_tol)?;
        let summary = format!(
            "T_x={} T_drift_removed={} verdict={}",
            x.period.map_or("-".into(), |t| format!("{t:.10}")),
            d.period.map_or("-".into(), |t| format!("{t:.10}")),
            x.verdict.as_str()
        );
        (
            estimate_csv(&[("populations", &x), ("drift-removed", &d)]),
            json!({"populations": x, "drift_removed": d}),
            summary,
        )
    } else {
        let pt0 = start_point(&spec, &a.start)?;
        let e = detect_period(sys.as_ref(), &pt0, &cfg, a.horizon, a.return_tol)?;
        let summary = format!(
            "T={} verdict={}",
            e.period.map_or("-".into(), |t| format!("{t:.10}")),
            e.verdict.as_str()
        );
        (estimate_csv(&[("phase", &e)]), json!(e), summary)
    };
    Ok(Outcome {
        stem: "period".into(),
        csv,
        json: serde_json::to_string_pretty(&json)? + "\n",
        summary,
        report: false,
        extras: vec![],
        verdict_ok: true,
    })
}

fn report_outcome(doc: &ReportDocument, summary: String, verdict_ok: bool) -> Result<Outcome> {
    Ok(Outcome {
        stem: doc.file_stem(),
        csv: doc.summary_csv.clone(),
        json: doc.to_json()?,
        summary,
        report: true,
        extras: vec![],
        verdict_ok,
    })
}

fn survey_summary(doc: &ReportDocument) -> String {
    let s = &doc.results["survey"];
    let f = |key: &str| s[key].as_f64();
    match f("mean") {
        Some(mean) => format!(
            "T={mean:.4} spread={:e} samples={} verdict={}",
            f("spread_rel").unwrap_or(f64::NAN),
            s["samples"],
            doc.verdict
        ),
        None => format!("T=- samples={} verdict={}", s["samples"], doc.verdict),
    }
}

fn cmd_survey(a: &SurveyArgs) -> Result<Outcome> {
    let recipe = ExperimentRecipe {
        name: "survey".into(),
        system: Some(system_spec(&a.system)?),
        protocol: "survey".into(),
        parameters: json!({
            "energy": a.energy,
            "count": a.count,
            "tol_rel": a.tol_rel,
            "h": a.step.h,
            "method": a.step.method,
            "horizon": a.horizon,
            "return_tol": a.return_tol,
        }),
        seed: a.seed,
    };
    let doc = run_recipe(&recipe)?;
    let ok = !a.expect_same || doc.verdict == "SAME-PERIOD";
    report_outcome(&doc, survey_summary(&doc), ok)
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<Outcome> {
    let sys = Potential1D::parse(&a.potential, a.kinetic, (-1e3, 1e3))?;
    let w = a.c * a.hbar.powf(1.0 - a.delta);
    let l = match a.half_width {
        Some(l) => l,
        None => confining_half_width(&sys, a.energy + 10.0 * w)?,
    };
    let grid = Grid1D::new(l, a.grid_n)?;
    let range = (a.energy - w, a.energy + w);
    let (below, eigs) = if a.richardson {
        eig_richardson(&sys, a.hbar, &grid, range)?
    } else {
        let op = discretize_1d(&sys, a.hbar, &grid)?;
        (op.count_below(range.0), eig_tridiagonal(&op, range))
    };
    let win = window(&eigs, a.energy, a.c, a.delta, a.hbar)?;
    let mut csv = String::from("k,E\n");
    for (i, e) in win.eigenvalues.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", below + i, fmt17(*e));
    }
    let doc = json!({
        "potential": a.potential,
        "kinetic": a.kinetic,
        "grid": grid,
        "richardson": a.richardson,
        "first_index": below,
        "window": win,
    });
    Ok(Outcome {
        stem: "spectrum".into(),
        csv,
        json: serde_json::to_string_pretty(&doc)? + "\n",
        summary: format!("window [{}, {}] holds {} eigenvalues", a.energy - w, a.energy + w, win.len()),
        report: false,
        extras: vec![],
        verdict_ok: true,
    })
}

fn diffspec_summary(doc: &ReportDocument) -> String {
    let r = &doc.results["report"];
    let mut s = format!("verdict={}", doc.verdict);
    if let Some(sp) = r["fitted_spacing"].as_f64() {
        let _ = write!(s, " spacing={sp:.5}");
    }
    if let Some(t) = r["T_hat"].as_f64() {
        let _ = write!(s, " T_hat={t:.5}");
    }
    if let Some(fill) = r["fill_fractions"].as_array().and_then(|v| v.last()).and_then(Value::as_f64) {
        let _ = write!(s, " fill={fill:.3}");
    }
    s
}

fn with_plot(mut o: Outcome, emit_plot: bool, title: &str) -> Outcome {
    if emit_plot {
        let csv_name = format!("{}.summary.csv", o.stem);
        o.extras.push((format!("{}.plot.py", o.stem), plot_script(&csv_name, title)));
    }
    o
}

fn cmd_diffspec(a: &DiffspecArgs) -> Result<Outcome> {
    let mut params = Map::new();
    match (&a.potential, &a.separable) {
        (_, Some(sep)) => {
            let parts: Vec<&str> = sep.split(':').collect();
            if parts.len() != 2 {
                bail!("--separable expects `Vx:Vy` (got `{sep}`)");
            }
            params.insert("separable".into(), json!(parts));
        }
        (Some(v), None) => {
            params.insert("potential".into(), json!(v));
        }
        (None, None) => {
            params.insert("potential".into(), json!("x^2"));
        }
    }
    params.insert("energy".into(), json!(a.energy));
    params.insert("hbars".into(), json!(a.hbars));
    params.insert("c".into(), json!(a.c));
    params.insert("delta".into(), json!(a.delta));
    params.insert("grid_n".into(), json!(a.grid_n));
    params.insert("half_width".into(), json!(a.half_width));
    params.insert("bin_width".into(), json!(a.bin_width));
    params.insert("range".into(), json!(a.range));
    params.insert("persist_tol".into(), json!(a.persist_tol));
    params.insert("richardson".into(), json!(!a.no_richardson));
    if let Some(e) = a.expect {
        params.insert("expect".into(), json!(e.verdict()));
    }
    let recipe = ExperimentRecipe {
        name: "diffspec".into(),
        system: None,
        protocol: "diffspec".into(),
        parameters: Value::Object(params),
        seed: 0,
    };
    let doc = run_recipe(&recipe)?;
    let ok = a.expect.is_none_or(|e| doc.verdict == e.verdict());
    let title = doc.results["report"]["source"].as_str().unwrap_or("").to_string();
    let o = report_outcome(&doc, diffspec_summary(&doc), ok)?;
    Ok(with_plot(o, a.emit_plot, &format!("difference spectrum, V = {title}")))
}

fn cmd_recipe(a: &RecipeArgs) -> Result<Outcome> {
    let mut recipe = match (&a.name, &a.file) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentRecipe::from_json(&text)?
        }
        (Some(name), None) => RecipeRegistry::builtin().get(name)?,
        (None, None) => bail!("give a recipe name or --file"),
    };
    if let Some(seed) = a.seed {
        recipe.seed = seed;
    }
    let doc = run_recipe(&recipe)?;
    let met = doc.results["expectation_met"].as_bool().unwrap_or(true);
    let ok = met && a.expect.as_ref().is_none_or(|e| e.eq_ignore_ascii_case(&doc.verdict));
    let summary = match recipe.protocol.as_str() {
        "survey" => survey_summary(&doc),
        "diffspec" => diffspec_summary(&doc),
        _ => format!("verdict={}", doc.verdict),
    };
    let o = report_outcome(&doc, summary, ok)?;
    let plot = a.emit_plot && recipe.protocol == "diffspec";
    Ok(with_plot(o, plot, &format!("difference spectrum, {}", recipe.name)))
}
