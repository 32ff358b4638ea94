use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bo_periodic::bifurcation::BifurcationData;
use bo_periodic::cantor::{exclusion_widths, n_box, scan, ExclusionTable, ScanReport, WidthConfig, DEFAULT_NODES};
use bo_periodic::config::RunConfig;
use bo_periodic::nash_moser::{original_residual, physical_solution, IterationState, Problem, Status};
use bo_periodic::spectral::FieldRecord;
use bo_periodic::verify::{self, VerifyOptions};
use bo_periodic::{Error, Result};

#[derive(Parser)]
#[command(name = "bo-periodic", version, about = "Time-periodic Benjamin-Ono solutions by Nash-Moser iteration")]
struct Cli {
    /// On failure, print a JSON error object to stderr.
    #[arg(long, global = true)]
    error_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitudes and kernel solution for a mode set.
    Bifurcate(Common),
    /// Run the iteration at one eps.
    Solve(Common),
    /// Classify a grid of eps and tabulate exclusion widths.
    Scan(Common),
    /// Run the built-in checks and print a pass/fail table.
    Verify(VerifyArgs),
}

/// Flags mirror the config keys and override the file.
#[derive(Args)]
struct Common {
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    modes: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    signs: Option<Vec<i8>>,
    #[arg(long)]
    nonlinearity: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    refine_bad: Option<bool>,
    #[arg(long)]
    probe_predicted: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    a_bar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    chi: Option<f64>,
    #[arg(long)]
    n_cap: Option<u32>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tol_residual: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s_norm: Option<f64>,
    #[arg(long)]
    check_identities: Option<bool>,
    #[arg(long)]
    j_max: Option<u32>,
    /// Directory for the output files; without it a JSON summary goes to stdout.
    #[arg(long)]
    out_dir: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            modes: self.modes.clone(),
            signs: self.signs.clone(),
            nonlinearity: self.nonlinearity.clone(),
            eps: self.eps,
            eps_min: self.eps_min,
            eps_max: self.eps_max,
            grid_points: self.grid_points,
            refine_bad: self.refine_bad,
            probe_predicted: self.probe_predicted,
            a_bar: self.a_bar,
            chi: self.chi,
            n_cap: self.n_cap,
            max_steps: self.max_steps,
            tol_residual: self.tol_residual,
            s_norm: self.s_norm,
            check_identities: self.check_identities,
            j_max: self.j_max,
            out_dir: self.out_dir.clone(),
        };
        Ok(file.overridden_by(&flags))
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only the kernel-product enumeration.
    #[arg(long = "appendix-a", visible_alias = "kernel-products")]
    kernel_products: bool,
    #[arg(long, default_value_t = 10)]
    max_j: u32,
    /// Run only the multiplier identities.
    #[arg(long)]
    operators: bool,
    /// Run only the conjugation identity.
    #[arg(long)]
    conjugation: bool,
    /// Run only the oracle comparison.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Exit status for a failed run.
enum Failure {
    Error(Error),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<Option<PathBuf>> {
    match &cfg.out_dir {
        Some(d) => {
            let p = PathBuf::from(d);
            fs::create_dir_all(&p)?;
            Ok(Some(p))
        }
        None => Ok(None),
    }
}

#[derive(Serialize)]
struct BifurcationJson {
    schema: &'static str,
    modes: Vec<u32>,
    signs: Vec<i8>,
    rho: Vec<String>,
    rho_f64: Vec<f64>,
    b: String,
    b_f64: f64,
    delta: f64,
    amplitudes: Vec<f64>,
    v1: FieldRecord,
}

impl BifurcationJson {
    fn new(d: &BifurcationData) -> Self {
        BifurcationJson {
            schema: "bo-periodic/bifurcation/1",
            modes: d.modes.ks().to_vec(),
            signs: d.signs.clone(),
            rho: d.rho.iter().map(|r| r.to_string()).collect(),
            rho_f64: d.rho_f64(),
            b: d.b.to_string(),
            b_f64: d.b_f64(),
            delta: d.delta,
            amplitudes: d.a.clone(),
            v1: d.v1.to_record(),
        }
    }
}

fn bifurcate(args: &Common) -> std::result::Result<(), Failure> {
    let cfg = args.resolve()?;
    let d = cfg.bifurcation()?;
    let json = BifurcationJson::new(&d);
    match out_dir(&cfg)? {
        Some(dir) => write_json(&dir.join("bifurcation.json"), &json)?,
        None => print_json(&json)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    schema: &'static str,
    modes: Vec<u32>,
    nonlinearity: String,
    eps: f64,
    omega: f64,
    status: Status,
    steps: usize,
    final_residual: f64,
    /// `|omega U_t + H U_xx + N(U)|` over all modes, untruncated.
    original_residual: f64,
    witness: Option<(i64, i64)>,
    failure: Option<String>,
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    #[serde(flatten)]
    summary: &'a SolveSummary,
    /// `u` in `u_eps = eps v1 + eps^2 u`.
    u: FieldRecord,
    u_eps: FieldRecord,
}

fn write_iteration_csv(path: &Path, st: &IterationState) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::from)?;
    w.write_record(["n", "truncation", "residual", "h_norm", "margin", "w_method", "rn_defect", "taylor_defect"])
        .map_err(std::io::Error::from)?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    for r in &st.history {
        let method = r.w_method.map(|m| serde_json::to_value(m).expect("enum").as_str().unwrap_or("").to_string());
        w.write_record([
            r.n.to_string(),
            r.truncation.to_string(),
            format!("{:e}", r.residual),
            format!("{:e}", r.h_norm),
            format!("{:e}", r.margin),
            method.unwrap_or_default(),
            opt(r.rn_defect),
            opt(r.taylor_defect),
        ])
        .map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn solve(args: &Common) -> std::result::Result<(), Failure> {
    let cfg = args.resolve()?;
    let d = cfg.bifurcation()?;
    let spec = cfg.spec()?;
    let eps = cfg.eps()?;
    let problem = Problem { spec: &spec, data: &d, eps, cfg: cfg.solver()? };
    let st = problem.run()?;
    let summary = SolveSummary {
        schema: "bo-periodic/solve/1",
        modes: d.modes.ks().to_vec(),
        nonlinearity: cfg.nonlinearity_name(),
        eps,
        omega: 1.0 + 3.0 * eps * eps,
        status: st.status,
        steps: st.n,
        final_residual: st.final_residual(),
        original_residual: original_residual(&spec, &d, &st.u, eps).unwrap_or(f64::NAN),
        witness: st.witness,
        failure: st.failure.clone(),
    };
    match out_dir(&cfg)? {
        Some(dir) => {
            write_iteration_csv(&dir.join("iteration.csv"), &st)?;
            let sol = SolutionJson {
                summary: &summary,
                u: st.u.to_record(),
                u_eps: physical_solution(&d, &st.u, eps).to_record(),
            };
            write_json(&dir.join("solution.json"), &sol)?;
        }
        None => print_json(&summary)?,
    }
    if st.status != Status::Converged {
        return Err(Failure::Solver(format!("solver stopped with status {}", st.status.as_str())));
    }
    Ok(())
}

fn write_scan_csv(path: &Path, rep: &ScanReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::from)?;
    w.write_record(["eps", "status", "l", "j", "min_margin", "final_residual", "steps", "probe"])
        .map_err(std::io::Error::from)?;
    for r in &rep.per_eps {
        let (l, j) = r.witness.map(|(l, j)| (l.to_string(), j.to_string())).unwrap_or_default();
        w.write_record([
            format!("{:e}", r.eps),
            r.status.as_str().to_string(),
            l,
            j,
            format!("{:e}", r.min_margin),
            format!("{:e}", r.final_residual),
            r.steps.to_string(),
            r.probe.to_string(),
        ])
        .map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn write_widths_csv(path: &Path, t: &ExclusionTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::from)?;
    for r in &t.rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ScanJson<'a> {
    schema: &'static str,
    report: &'a ScanReport,
    widths: &'a ExclusionTable,
}

fn run_scan(args: &Common) -> std::result::Result<(), Failure> {
    let cfg = args.resolve()?;
    let d = cfg.bifurcation()?;
    let spec = cfg.spec()?;
    let sc = cfg.scan()?;
    let wc = WidthConfig {
        eps_min: sc.eps_min,
        eps_max: sc.eps_max,
        j_max: cfg.j_max.unwrap_or(sc.solver.n_cap),
        box_a: n_box(&d),
        nodes: DEFAULT_NODES,
    };
    let widths = exclusion_widths(&d, &spec, &wc)?;
    let rep = scan(&sc, &d, &spec)?;
    let json = ScanJson { schema: "bo-periodic/scan/1", report: &rep, widths: &widths };
    match out_dir(&cfg)? {
        Some(dir) => {
            write_json(&dir.join("scan.json"), &json)?;
            write_scan_csv(&dir.join("scan.csv"), &rep)?;
            write_widths_csv(&dir.join("widths.csv"), &widths)?;
        }
        None => print_json(&json)?,
    }
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> std::result::Result<(), Failure> {
    let any = a.kernel_products || a.operators || a.conjugation || a.oracle;
    let opts = VerifyOptions {
        kernel_products: !any || a.kernel_products,
        max_j: a.max_j,
        operators: !any || a.operators,
        conjugation: !any || a.conjugation,
        oracle: !any || a.oracle,
        seed: a.seed,
    };
    let checks = verify::run(&opts)?;
    print!("{}", verify::render(&checks));
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(Failure::Solver(format!("{failed} checks failed")));
    }
    Ok(())
}

fn report(json: bool, code: u8, kind: &str, msg: &str) -> ExitCode {
    if json {
        let v = serde_json::json!({ "error": kind, "message": msg, "exit_code": code });
        eprintln!("{v}");
    } else {
        eprintln!("error: {msg}");
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let json = std::env::args().any(|a| a == "--error-json");
            let msg = e.to_string();
            return report(json, 1, "validation", msg.trim_start_matches("error: ").trim_end());
        }
    };
    let result = match &cli.command {
        Command::Bifurcate(a) => bifurcate(a),
        Command::Solve(a) => solve(a),
        Command::Scan(a) => run_scan(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) if e.is_validation() => report(cli.error_json, 1, "validation", &e.to_string()),
        Err(Failure::Error(e)) => report(cli.error_json, 2, "solver", &e.to_string()),
        Err(Failure::Solver(m)) => report(cli.error_json, 2, "solver", &m),
    }
}
