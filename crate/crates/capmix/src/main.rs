use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use capmix::bodyio::BodyFile;
use capmix::config::{parse_config, SuiteConfig, SUITES};
use capmix::meshio::{dump_nodes, mesh_info};
use capmix::report::{write_convergence, RunReport};
use capmix::study::{converge, parse_levels};
use capmix::suites::{build_mesh, run_suite, seed_body};

/// Numerical verification of mixed-volume inequalities for anisotropic
/// capillary convex bodies.
#[derive(Parser)]
#[command(name = "capmix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured suites and write a report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Run only this suite (overrides [suites] in the config).
        #[arg(long)]
        suite: Option<String>,
        /// Report directory [env: CAPMIX_OUT].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads [env: CAPMIX_JOBS].
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Mesh diagnostics.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Random bodies.
    Body {
        #[command(subcommand)]
        command: BodyCommand,
    },
    /// Convergence studies.
    Study {
        #[command(subcommand)]
        command: StudyCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Print a JSON summary of the configured mesh.
    Info {
        #[arg(long)]
        config: PathBuf,
        /// Also write the node table to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BodyCommand {
    /// Generate the random body of a seed and write it as JSON.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Evaluate one check over a range of mesh levels.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        check: String,
        /// Inclusive range, e.g. 2..5.
        #[arg(long)]
        levels: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn load(path: &Path) -> Result<SuiteConfig, ExitCode> {
    parse_config(path).map_err(|e| {
        eprintln!("config error in {}:\n{e}", path.display());
        ExitCode::from(2)
    })
}

fn jobs(flag: Option<usize>) -> Result<usize, ExitCode> {
    if let Some(j) = flag {
        return Ok(j.max(1));
    }
    match std::env::var("CAPMIX_JOBS") {
        Ok(v) => v.trim().parse::<usize>().map(|j| j.max(1)).map_err(|_| {
            eprintln!("CAPMIX_JOBS must be a positive integer, got '{v}'");
            ExitCode::from(2)
        }),
        Err(_) => Ok(1),
    }
}

fn out_dir(flag: Option<PathBuf>, config: &SuiteConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os("CAPMIX_OUT").map(PathBuf::from))
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("capmix-out"))
}

fn io_fail(what: &str, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("{what}: {e}");
    ExitCode::from(2)
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.command {
        Command::Verify { config, suite, out, jobs: j } => {
            let mut cfg = load(&config)?;
            if let Some(s) = suite {
                if s == "all" {
                    cfg.suites = SUITES.iter().map(|x| x.to_string()).collect();
                } else if SUITES.contains(&s.as_str()) {
                    cfg.suites = vec![s];
                } else {
                    eprintln!("unknown suite '{s}' (valid: {}, all)", SUITES.join(", "));
                    return Err(ExitCode::from(2));
                }
            }
            let jobs = jobs(j)?;
            let dir = out_dir(out, &cfg);
            let report: RunReport = run_suite(&cfg, jobs);
            report.write(&dir).map_err(|e| io_fail("cannot write report", e))?;
            for r in report.records.iter().filter(|r| !r.pass) {
                eprintln!(
                    "FAIL {} gap={:e} tol={:e}{}",
                    r.label(),
                    r.gap,
                    r.tolerance,
                    r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
                );
            }
            println!(
                "{} checks, {} passed, {} failed; report in {}",
                report.summary.total,
                report.summary.passed,
                report.summary.failed,
                dir.display()
            );
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Mesh { command: MeshCommand::Info { config, dump } } => {
            let cfg = load(&config)?;
            let mesh = build_mesh(&cfg, cfg.mesh_level).map_err(|e| io_fail("mesh construction failed", e))?;
            println!("{}", serde_json::to_string_pretty(&mesh_info(&mesh)).expect("info serializes"));
            if let Some(path) = dump {
                let file = std::fs::File::create(&path).map_err(|e| io_fail("cannot create dump", e))?;
                dump_nodes(&mesh, file).map_err(|e| io_fail("cannot write dump", e))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Body { command: BodyCommand::Gen { config, seed, out } } => {
            let cfg = load(&config)?;
            let mesh = build_mesh(&cfg, cfg.mesh_level).map_err(|e| io_fail("mesh construction failed", e))?;
            let body = match seed_body(&mesh, seed, cfg.body_spec()) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("seed {seed}: {e}");
                    return Ok(ExitCode::from(1));
                }
            };
            BodyFile::new(&cfg, Some(seed), body.function().support()).write(&out).map_err(|e| io_fail("cannot write body", e))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Study { command: StudyCommand::Converge { config, check, levels, out, jobs: j } } => {
            let cfg = load(&config)?;
            let levels = parse_levels(&levels).map_err(|e| io_fail("bad --levels", e))?;
            let jobs = jobs(j)?;
            let table = match converge(&cfg, &check, levels, jobs) {
                Ok(t) => t,
                Err(capmix::study::StudyError::Core(e)) => {
                    eprintln!("{e}");
                    return Ok(ExitCode::from(1));
                }
                Err(e) => return Err(io_fail("bad study", e)),
            };
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir).map_err(|e| io_fail("cannot create output directory", e))?;
            write_convergence(&dir.join("convergence.csv"), std::slice::from_ref(&table)).map_err(|e| io_fail("cannot write table", e))?;
            let report = RunReport::new(serde_json::to_value(&cfg).expect("config serializes"), Vec::new(), vec![table.clone()]);
            std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
                .map_err(|e| io_fail("cannot write report", e))?;
            println!("level,value,residual,ratio");
            for r in &table.rows {
                println!("{},{:e},{:e},{}", r.level, r.value, r.residual, r.ratio.map(|x| format!("{x:.3}")).unwrap_or_default());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    run(cli).unwrap_or_else(|code| code)
}
