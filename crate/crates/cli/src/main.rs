use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gyroball::battery;
use gyroball::classify;
use gyroball::neumann::NeumannSystem;
use gyroball::runtime::{self, CheckReport, CheckTolerances, InitialState, RunConfig, Simulation, Variant};
use gyroball::Error;

mod svg;

#[derive(Parser)]
#[command(name = "gyroball", version, about = "Gyroscopic ball rolling on a sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration and write the trajectory CSV and drift table.
    Simulate(Common),
    /// Closed-form x(t) against the ODE over one period.
    Quadrature(Common),
    /// Classify the motion of a Neumann configuration.
    Classify(Common),
    /// Run the invariant checks on a configuration or a random battery.
    Check(CheckArgs),
    /// Draw the contact-point traces as SVG.
    Plot(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Relative integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Seed of a random battery of Neumann configurations.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of battery cases.
    #[arg(long, default_value_t = 8)]
    cases: usize,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_)
            | Error::ConfigMismatch(_)
            | Error::ZhukovskyViolated { .. }
            | Error::Config(_)
            | Error::ConstraintViolation { .. } => 2,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 2, message: format!("{}: {e}", path.display()) }
}

fn load(config: &Path, tol: Option<f64>, horizon: Option<f64>) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(config).map_err(|e| io_failure(config, e))?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Failure::from(Error::Config(e.to_string())))?;
    if let Some(t) = tol {
        cfg.integrator.rel_tol = t;
        cfg.integrator.abs_tol = t * 1e-2;
    }
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| io_failure(&path, e))?;
    Ok(path)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

/// 17 significant digits.
fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv_table<I, R>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.as_ref().iter().map(|&x| fmt(x))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii output")
}

fn simulate(a: &Common) -> Result<(), Failure> {
    let cfg = load(&a.config, a.tol, a.horizon)?;
    let out = runtime::run(&cfg)?;
    let path = write(&a.out, "trajectory.csv", &csv_table(&out.columns, &out.rows))?;
    let drift = write(&a.out, "drift.json", &to_json(&out.drift))?;
    println!("wrote {} and {}", path.display(), drift.display());
    for d in &out.drift {
        println!("{:>8}  max relative drift {:.3e}", d.name, d.max_rel);
    }
    Ok(())
}

fn quadrature(a: &Common) -> Result<(), Failure> {
    let cfg = load(&a.config, a.tol, a.horizon)?;
    let q = runtime::quadrature_comparison(&cfg)?;
    let header: Vec<String> = ["t", "x_closed_form", "x_ode", "difference"].iter().map(|s| s.to_string()).collect();
    write(&a.out, "quadrature.csv", &csv_table(&header, &q.rows))?;
    write(&a.out, "quadrature.json", &to_json(&q))?;
    println!("roots {:?}", q.roots);
    println!("interval {:?}", q.interval);
    if let Some(p) = q.period {
        println!("period {p}");
    }
    println!("max |x_closed_form - x_ode| = {:.3e}", q.max_deviation);
    Ok(())
}

fn classify(a: &Common) -> Result<(), Failure> {
    let cfg = load(&a.config, a.tol, a.horizon)?;
    let (Variant::NeumannDemchenko, InitialState::Neumann(st)) = (cfg.variant, cfg.initial) else {
        return Err(Error::Config("classification needs a NeumannDemchenko configuration".into()).into());
    };
    let sys = NeumannSystem::new(cfg.params)?;
    let report = classify::classify_state(&sys, &sys.align_axis(&st))?;
    let text = to_json(&report);
    write(&a.out, "classification.json", &text)?;
    print!("{text}");
    Ok(())
}

fn print_report(label: &str, r: &CheckReport) {
    for e in &r.entries {
        println!(
            "{label}{:<20} {:.3e} < {:.1e}  {}",
            e.name,
            e.value,
            e.tolerance,
            if e.pass { "ok" } else { "FAIL" }
        );
    }
}

fn check(a: &CheckArgs) -> Result<(), Failure> {
    let mut tol = CheckTolerances::default();
    if let Some(t) = a.tol {
        tol.drift = t;
    }
    let mut reports = Vec::new();
    if let Some(path) = &a.config {
        let cfg = load(path, None, a.horizon)?;
        let r = runtime::check(&cfg, &tol)?;
        print_report("", &r);
        reports.push(r);
    }
    if let Some(seed) = a.seed {
        for (i, case) in battery::standard(seed, a.cases).into_iter().enumerate() {
            let cfg = RunConfig {
                params: case.sys.params,
                initial: InitialState::Neumann(case.state),
                variant: Variant::NeumannDemchenko,
                horizon: a.horizon.unwrap_or(20.0 * case.time_scale),
                integrator: Default::default(),
                body_inertia: None,
                output: Default::default(),
            };
            let r = runtime::check(&cfg, &tol)?;
            print_report(&format!("case {i:>3}  "), &r);
            reports.push(r);
        }
    }
    if reports.is_empty() {
        return Err(Error::Config("check needs --config or --seed".into()).into());
    }
    write(&a.out, "check.json", &to_json(&reports))?;
    if reports.iter().all(CheckReport::passed) {
        Ok(())
    } else {
        Err(Failure { code: 3, message: "checks failed beyond tolerance".into() })
    }
}

fn plot(a: &Common) -> Result<(), Failure> {
    let cfg = load(&a.config, a.tol, a.horizon)?;
    let sim = runtime::simulate(&cfg)?;
    let (ball, sphere) = sim.traces(cfg.output.samples);
    let p = write(&a.out, "ball.svg", &svg::chart("contact point on the ball (u, v)", &ball))?;
    println!("wrote {}", p.display());
    if let (Some(tr), Simulation::Neumann { .. }) = (sphere, &sim) {
        let p = write(&a.out, "sphere.svg", &svg::chart("contact point on the fixed sphere (u1, v1)", &tr))?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Quadrature(a) => quadrature(a),
        Command::Classify(a) => classify(a),
        Command::Check(a) => check(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
