use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use fkgap_cli::output::{to_json, write_meta, write_report, Meta};
use fkgap_cli::pipeline::{self, Report};
use fkgap_cli::scenario::Scenario;
use fkgap_cli::{plotdata, Failure};

#[derive(Parser)]
#[command(name = "fkgap", version, about = "Equilibria and phonon gaps of Frenkel-Kontorova chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, verify and measure; writes report.json, meta.json and gap.csv.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write plot-ready CSV series from a report.json.
    Plotdata {
        report: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check the Aubry criterion of an anti_integrable scenario.
    CheckAubry { scenario: PathBuf },
    /// Run the Diophantine scan of a kam scenario.
    Diophantine { scenario: PathBuf },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    print!("{}", String::from_utf8_lossy(&to_json(value)?));
    Ok(())
}

fn run(path: &Path, out: &Path, threads: Option<usize>) -> i32 {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 3;
        }
    };
    let code = match Scenario::load(path) {
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Ok(scenario) => {
            let (report, code) = match pool.install(|| pipeline::run(&scenario)) {
                Ok(r) => (r, 0),
                Err(e) => {
                    eprintln!("error: {e}");
                    (Report::failed(&scenario, &e), e.exit_code())
                }
            };
            if let Err(e) = write_report(out, &report) {
                eprintln!("error: {e}");
                return 3;
            }
            if let Some(v) = report.verdict {
                println!("verdict: {}", serde_json::to_string(&v).unwrap_or_default().trim_matches('"'));
            }
            code
        }
    };
    let meta = Meta {
        tool: "fkgap",
        version: env!("CARGO_PKG_VERSION"),
        scenario_path: path.display().to_string(),
        threads: pool.current_num_threads(),
        started_unix,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        exit_code: code,
    };
    if let Err(e) = write_meta(out, &meta) {
        eprintln!("error: {e}");
        return 3;
    }
    code
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, out, threads } => run(&scenario, &out, threads),
        Command::Plotdata { report, out } => match plotdata::emit_file(&report, &out) {
            Ok(files) => {
                for f in files {
                    println!("{}", out.join(f).display());
                }
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::CheckAubry { scenario } => {
            match Scenario::load(&scenario).and_then(|s| pipeline::check_aubry(&s)).and_then(|c| print_json(&c)) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Diophantine { scenario } => {
            match Scenario::load(&scenario).and_then(|s| pipeline::diophantine(&s)).and_then(|d| print_json(&d)) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
