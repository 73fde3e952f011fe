use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dichoscope::{
    apply_overrides, execute, load_config, plots, CheckFilter, EXIT_CHECK_FAILED, EXIT_ERROR,
    EXIT_OK,
};
use dichoscope_core::growth_group::{group_property_suite, GroupSample};
use dichoscope_core::GrowthRate64;

/// Numerical verification of dichotomy-type properties of x' = A(t)x under
/// arbitrary growth rates.
#[derive(Parser)]
#[command(name = "dichoscope", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Output directory for the report and plot data.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Size of the worker thread pool (0 = one per core).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's default check tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check declared in a config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Exercise the group identity suite for a growth rate
    /// (exp | identity | log1p | ged:<gamma>).
    GroupTest {
        rate: String,
        /// Sample size.
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// h-space relative tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Run only the estimation checks of a config (constant curves, sharp
    /// exponents, theta curves, windowed norms, conversions).
    Estimate {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Run only the pipeline check(s) of a config.
    Pipeline {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DICHOSCOPE_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, flags } => run_config_command(&config, &flags, CheckFilter::All),
        Command::Estimate { config, flags } => {
            run_config_command(&config, &flags, CheckFilter::EstimationOnly)
        }
        Command::Pipeline { config, flags } => {
            run_config_command(&config, &flags, CheckFilter::PipelineOnly)
        }
        Command::GroupTest {
            rate,
            points,
            tol,
            threads,
        } => group_test_command(&rate, points, tol, threads),
    };
    ExitCode::from(code as u8)
}

fn init_threads(threads: usize) -> Result<(), String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    builder.build_global().map_err(|e| e.to_string())
}

fn run_config_command(config: &PathBuf, flags: &CommonFlags, filter: CheckFilter) -> i32 {
    if let Err(e) = init_threads(flags.threads) {
        eprintln!("error: thread pool: {e}");
        return EXIT_ERROR;
    }
    let mut cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    apply_overrides(&mut cfg, flags.seed, flags.tol);
    let doc = match execute(&cfg, filter) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&flags.out) {
        eprintln!("error: cannot create output directory: {e}");
        return EXIT_ERROR;
    }
    let report_path = flags.out.join("report.json");
    if let Err(e) = std::fs::write(&report_path, doc.to_json()) {
        eprintln!("error: cannot write report: {e}");
        return EXIT_ERROR;
    }
    match plots::emit_plot_data(&doc, &flags.out) {
        Ok(paths) => {
            for p in &paths {
                log::info!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    }
    for outcome in &doc.checks {
        let verdict = if outcome.pass { "pass" } else { "FAIL" };
        println!("{:<28} {}", outcome.name, verdict);
        for stage in &outcome.stages {
            let v = if stage.pass { "pass" } else { "FAIL" };
            let consts: Vec<String> = stage
                .constants
                .iter()
                .map(|(n, v)| format!("{n} = {v}"))
                .collect();
            println!("    {:<24} {v}  {}", stage.stage, consts.join(", "));
        }
    }
    println!(
        "{} of {} checks passed; report written to {}",
        doc.summary.passed,
        doc.summary.total,
        report_path.display()
    );
    if doc.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn group_test_command(rate: &str, points: usize, tol: f64, threads: usize) -> i32 {
    if let Err(e) = init_threads(threads) {
        eprintln!("error: thread pool: {e}");
        return EXIT_ERROR;
    }
    let g = match GrowthRate64::from_spec(rate) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    // sample over two decades of h on each side of the unit element
    let sample = match (g.exp_h_inv(-2.0), g.exp_h_inv(2.0)) {
        (Ok(lo), Ok(hi)) => match GroupSample::log_h_uniform(&g, lo, hi, points) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        },
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let report = group_property_suite(&g, &sample, tol);
    println!(
        "group_property_suite[{rate}] {} ({} identities checked, worst residual {:e})",
        if report.pass { "pass" } else { "FAIL" },
        report.checked,
        report.worst_violation
    );
    for w in &report.witness {
        println!(
            "  witness {}: t = {}, s = {}, lhs = {:e}, rhs = {:e}",
            w.label, w.t, w.s, w.lhs, w.rhs
        );
    }
    for n in &report.notes {
        println!("  note: {n}");
    }
    if report.pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
