use clap::{Parser, Subcommand, ValueEnum};
use fracstep_core::harness::{csv_name, emit_csv, emit_markdown, preset, profile, run_experiment, ExperimentConfig};
use fracstep_core::{cq_weights, l1_weights, mlf, ConfigError, MlfParams, Scheme};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAILED_CELLS: u8 = 2;
const EXIT_CONFIG: u8 = 64;

#[derive(Parser)]
#[command(name = "fracstep", version, about = "Time stepping for subdiffusion with nonsmooth data")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a convergence study from a JSON config or a bundled preset (table1..table7).
    Run {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write files here instead of printing to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Override a config field, e.g. --set space.cells=[16,32]. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate the Mittag-Leffler function E_{alpha,beta}(x).
    Mlf {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: Vec<f64>,
        /// File with one argument per line.
        #[arg(long)]
        x_list: Option<PathBuf>,
    },
    /// Print quadrature weights b_0.. for bdf1..bdf6 (b_0..b_N) or l1 (b_0..b_{N-1}).
    Weights {
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: usize,
    },
    /// Series-solution profiles u(x, t) along the interval or the line y = 1/2.
    Profile {
        #[arg(long)]
        config: String,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Only this case label.
        #[arg(long)]
        case: Option<String>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Failed(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn load_config(name: &str, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(name);
    if !path.exists() {
        if let Some(text) = preset(name.trim_end_matches(".json")) {
            return Ok(ExperimentConfig::from_json(text, overrides)?);
        }
    }
    Ok(ExperimentConfig::load(path, overrides)?)
}

fn write_out(dir: &Path, file: &str, body: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let p = dir.join(file);
    std::fs::write(&p, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
    eprintln!("wrote {}", p.display());
    Ok(())
}

fn run(config: &str, jobs: usize, out: Option<&Path>, format: Format, overrides: &[String]) -> Result<bool, CliError> {
    let cfg = load_config(config, overrides)?;
    let report = run_experiment(&cfg, jobs)?;
    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Csv => {
            for case in &report.cases {
                let body = emit_csv(case);
                let name = csv_name(&report, case);
                match out {
                    Some(dir) => write_out(dir, &name, &body)?,
                    None => {
                        if report.cases.len() > 1 {
                            let _ = writeln!(stdout, "# {name}");
                        }
                        let _ = write!(stdout, "{body}");
                    }
                }
            }
        }
        Format::Md => {
            let body = emit_markdown(&report);
            match out {
                Some(dir) => write_out(dir, &format!("{}.md", report.name), &body)?,
                None => {
                    let _ = write!(stdout, "{body}");
                }
            }
        }
    }
    for case in &report.cases {
        for r in case.rows.iter().filter(|r| r.failure.is_some()) {
            eprintln!(
                "failed cell: case {} alpha {} {} N {}: {}",
                case.label,
                r.alpha,
                r.scheme,
                r.n,
                r.failure.as_deref().unwrap_or("")
            );
        }
    }
    Ok(report.all_passed())
}

fn mlf_cmd(alpha: f64, beta: f64, xs: &[f64], list: Option<&Path>) -> Result<(), CliError> {
    let params = MlfParams::new(alpha, beta).map_err(|e| CliError::Config(e.to_string()))?;
    let mut args = xs.to_vec();
    if let Some(p) = list {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            args.push(line.parse().map_err(|_| CliError::Config(format!("not a number: {line}")))?);
        }
    }
    if args.is_empty() {
        return Err(CliError::Config("no arguments: pass --x or --x-list".into()));
    }
    let mut stdout = std::io::stdout().lock();
    for x in args {
        let v = mlf(params, x).map_err(|e| CliError::Failed(format!("x = {x}: {e}")))?;
        let _ = writeln!(stdout, "{v}");
    }
    Ok(())
}

fn weights_cmd(scheme: &str, alpha: f64, n: usize) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CliError::Config(format!("alpha = {alpha} outside (0, 1]")));
    }
    let b = match scheme.parse::<Scheme>().map_err(CliError::Config)? {
        Scheme::Bdf(k) => cq_weights(alpha, k, n).b,
        Scheme::L1 if alpha < 1.0 => l1_weights(alpha, n).b,
        Scheme::L1 => return Err(CliError::Config("l1 needs alpha < 1".into())),
        Scheme::Pg => return Err(CliError::Config("pg has no convolution weights; use bdf1..bdf6 or l1".into())),
    };
    let mut stdout = std::io::stdout().lock();
    for w in b {
        let _ = writeln!(stdout, "{w}");
    }
    Ok(())
}

fn profile_cmd(
    config: &str,
    times: &[f64],
    points: usize,
    only: Option<&str>,
    tol: f64,
    overrides: &[String],
) -> Result<(), CliError> {
    let cfg = load_config(config, overrides)?;
    if points < 2 {
        return Err(CliError::Config("need at least 2 points".into()));
    }
    if let Some(&t) = times.iter().find(|t| !(**t > 0.0)) {
        return Err(CliError::Config(format!("profile time {t} must be positive")));
    }
    let cases: Vec<_> = cfg.cases.iter().filter(|c| only.map_or(true, |l| c.label == l)).collect();
    if cases.is_empty() {
        return Err(CliError::Config(format!("no case labelled {}", only.unwrap_or(""))));
    }
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "case,alpha,t,x,u");
    for case in cases {
        for &alpha in &case.problem.alpha {
            for &t in times {
                let rows = profile(case, alpha, t, points, tol).map_err(CliError::Failed)?;
                for (x, u) in rows {
                    let _ = writeln!(stdout, "{},{alpha},{t},{x},{u:.10e}", case.label);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.cmd {
        Cmd::Run { config, jobs, out, format, overrides } => run(config, *jobs, out.as_deref(), *format, overrides),
        Cmd::Mlf { alpha, beta, x, x_list } => mlf_cmd(*alpha, *beta, x, x_list.as_deref()).map(|_| true),
        Cmd::Weights { scheme, alpha, n } => weights_cmd(scheme, *alpha, *n).map(|_| true),
        Cmd::Profile { config, times, points, case, tol, overrides } => {
            profile_cmd(config, times, *points, case.as_deref(), *tol, overrides).map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CELLS),
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAILED_CELLS)
        }
    }
}
