//! Command-line front end: fit a model, test a hypothesis on a dataset, or
//! rerun one of the simulation tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use bsreg::harness::{
    emit_table, run_experiment, table_preset, verify, CellResult, ExperimentConfig, TableFormat, DEFAULT_REPLICATIONS,
    QUICK_REPLICATIONS,
};
use bsreg::inference::{parse_null, test_null, Method, NullSpec, TestOptions, TestResult};
use bsreg::model::{expected_info, fit, CsvOptions, Dataset};
use bsreg::{Error, Result};

const EXIT_TOLERANCE: u8 = 4;

#[derive(Parser)]
#[command(name = "bsreg", version, about = "Birnbaum-Saunders regression: fitting, score tests and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DataArgs {
    /// CSV file: response in the first column, covariates after it.
    data: PathBuf,
    /// The response holds lifetimes; model their logarithms.
    #[arg(long)]
    take_logs: bool,
    /// Add an intercept column.
    #[arg(long)]
    intercept: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum-likelihood estimates, standard errors and log-likelihood.
    Fit {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Test a null hypothesis on the coefficients or on the shape.
    Test {
        #[command(flatten)]
        data: DataArgs,
        /// For example "b3=0,b4=0" (one-based coefficients or column names)
        /// or "alpha=1.0".
        #[arg(long)]
        null: String,
        /// lr, sr, sr-star, sh or boot.
        #[arg(long)]
        method: Method,
        /// Bootstrap replications.
        #[arg(long = "B", default_value_t = 600)]
        b: usize,
        /// Nominal levels, comma separated.
        #[arg(long = "level", value_delimiter = ',', default_values_t = [0.10, 0.05])]
        levels: Vec<f64>,
        /// Seed of the bootstrap stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo size, power and moment studies.
    Simulate {
        /// 1, 2, 3, 4, 5, or alpha. Without it, `--config` describes one cell.
        #[arg(long)]
        table: Option<String>,
        /// Use the reduced replication count.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the rates as CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Flat key = value file with experiment settings; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Replications per cell.
        #[arg(long)]
        reps: Option<usize>,
        /// Bootstrap replications.
        #[arg(long = "B")]
        b: Option<usize>,
        /// Compare with the published values; exit with status 4 on a miss.
        #[arg(long)]
        verify: bool,
        /// Format of the table printed on standard output.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

enum Outcome {
    Done,
    ToleranceMiss,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Fit { data } => run_fit(&data),
        Command::Test { data, null, method, b, levels, seed } => {
            run_test(&data, &null, method, &TestOptions { levels, bootstrap_b: b, seed })
        }
        Command::Simulate { table, quick, seed, out, config, reps, b, verify, format } => {
            run_simulate(SimulateArgs { table, quick, seed, out, config, reps, b, verify, format })
        }
    };
    match res {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ToleranceMiss) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(args: &DataArgs) -> Result<(Dataset, Vec<String>)> {
    Dataset::from_csv(&args.data, &CsvOptions { take_logs: args.take_logs, intercept: args.intercept })
}

fn run_fit(args: &DataArgs) -> Result<Outcome> {
    let (d, names) = load(args)?;
    let f = fit(&d, None)?.require()?;
    let info = expected_info(&f.theta, &d)?;
    let cov = info
        .beta
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Fit("information matrix is singular".into()))?;
    let width = names.iter().map(String::len).max().unwrap_or(0).max(9);
    let mut s = String::new();
    let _ = writeln!(s, "n = {}, p = {}, converged in {} iterations", d.n(), d.p(), f.iterations);
    let _ = writeln!(s, "{:<width$} {:>14} {:>12} {:>10}", "parameter", "estimate", "std.error", "z");
    for (j, name) in names.iter().enumerate() {
        let (est, se) = (f.theta.beta[j], cov[(j, j)].sqrt());
        let _ = writeln!(s, "{:<width$} {:>14.6} {:>12.6} {:>10.3}", name, est, se, est / se);
    }
    let _ = writeln!(s, "{:<width$} {:>14.6} {:>12.6}", "alpha", f.theta.alpha, (1.0 / info.alpha).sqrt());
    let _ = writeln!(s, "log-likelihood {:.6}", f.loglik);
    print!("{s}");
    Ok(Outcome::Done)
}

fn describe_null(null: &NullSpec, names: &[String]) -> String {
    match null {
        NullSpec::Alpha(a) => format!("alpha = {a}"),
        NullSpec::Beta { tested, values } => tested
            .iter()
            .zip(values)
            .map(|(&j, v)| format!("{} = {v}", names[j]))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn render_test(r: &TestResult, null: &str, names: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "H0: {null}  (df = {})", r.df);
    let _ = writeln!(s, "test             {}", r.method);
    let label = if r.method == Method::Lr { "LR" } else { "S_R" };
    let _ = writeln!(s, "statistic {label:<6} {:.6}", r.statistic);
    if let Some(c) = r.corrected {
        let _ = writeln!(s, "corrected S_R*   {c:.6}");
    }
    let _ = writeln!(s, "p-value          {:.6}", r.p_value);
    let _ = writeln!(s, "level  critical  reject");
    for ((level, crit), (_, rej)) in r.critical_values.iter().zip(&r.decisions) {
        let _ = writeln!(s, "{:>4}%  {:>8.4}  {}", 100.0 * level, crit, if *rej { "yes" } else { "no" });
    }
    let a = r.a.total();
    let _ = writeln!(s, "A1 = {:.6}, A2 = {:.6}, A3 = {:.6}", a[0], a[1], a[2]);
    let est: Vec<String> = names
        .iter()
        .zip(r.theta_restricted.beta.iter())
        .map(|(n, b)| format!("{n} = {b:.6}"))
        .chain(std::iter::once(format!("alpha = {:.6}", r.theta_restricted.alpha)))
        .collect();
    let _ = writeln!(s, "restricted estimate: {}", est.join(", "));
    for d in &r.diagnostics {
        let _ = writeln!(s, "note: {d}");
    }
    s
}

fn run_test(args: &DataArgs, null: &str, method: Method, opts: &TestOptions) -> Result<Outcome> {
    let (d, names) = load(args)?;
    let spec = parse_null(null, &names)?;
    let r = test_null(&d, &spec, method, opts)?;
    print!("{}", render_test(&r, &describe_null(&spec, &names), &names));
    Ok(Outcome::Done)
}

struct SimulateArgs {
    table: Option<String>,
    quick: bool,
    seed: Option<u64>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
    reps: Option<usize>,
    b: Option<usize>,
    verify: bool,
    format: Format,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn run_simulate(a: SimulateArgs) -> Result<Outcome> {
    let config = a.config.as_deref().map(read_text).transpose()?;
    let (mut cells, preset) = match &a.table {
        Some(t) => {
            let p = table_preset(t, DEFAULT_REPLICATIONS, ExperimentConfig::default().seed)?;
            (p.cells.clone(), Some(p))
        }
        None => {
            let text = config.as_deref().ok_or_else(|| Error::Input("simulate needs --table or --config".into()))?;
            (vec![ExperimentConfig::from_config_str(text)?], None)
        }
    };
    if a.verify && preset.is_none() {
        return Err(Error::Input("--verify needs --table".into()));
    }
    for c in &mut cells {
        if let (Some(text), Some(_)) = (&config, &a.table) {
            c.apply_config_str(text)?;
        }
        if a.quick {
            c.replications = QUICK_REPLICATIONS;
        }
        if let Some(r) = a.reps {
            c.replications = r;
        }
        if let Some(s) = a.seed {
            c.seed = s;
        }
        if let Some(b) = a.b {
            c.bootstrap_b = b;
        }
        c.validate()?;
    }

    let mut results: Vec<CellResult> = Vec::with_capacity(cells.len());
    for c in &cells {
        let t = Instant::now();
        let r = run_experiment(c)?;
        eprintln!(
            "{}: {} replications ({} failed) in {:.1}s",
            c.describe(),
            r.replications,
            r.failed,
            t.elapsed().as_secs_f64()
        );
        results.push(r);
    }
    let fmt = match a.format {
        Format::Text => TableFormat::Text,
        Format::Csv => TableFormat::Csv,
    };
    print!("{}", emit_table(&results, fmt));
    if let Some(path) = &a.out {
        std::fs::write(path, emit_table(&results, TableFormat::Csv))
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    }

    if let (true, Some(p)) = (a.verify, &preset) {
        let checks = verify(p, &results);
        let mut missed = 0;
        for c in &checks {
            missed += usize::from(!c.pass);
            println!(
                "{} {}: observed {:.3}, reference {:.3} ± {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.label,
                c.observed,
                c.expected,
                c.tolerance
            );
        }
        println!("{} of {} checks within tolerance", checks.len() - missed, checks.len());
        if missed > 0 {
            return Ok(Outcome::ToleranceMiss);
        }
    }
    Ok(Outcome::Done)
}
