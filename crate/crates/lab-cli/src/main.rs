use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use forcing_lab::ccc::{check_strong_almost_disjoint, simulate_generic_pprime, SimConfig};
use forcing_lab::schema::{parse_object, Schema};
use lab_cli::corpus::{self, Kind};
use lab_cli::export::{self, Format};
use lab_cli::manifest::{parse_manifest, Manifest};
use lab_cli::suites::{self, criterion_five_config, simulation_failures};

#[derive(Parser)]
#[command(name = "lab", about = "Generate, check and export finite forcing conditions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a validated instance corpus, one instance per line.
    Gen {
        kind: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance suites from a manifest file or from the flags.
    Run {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Manifest file; flags given alongside override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drive the tree-forcing simulator and check its final approximation.
    Simulate {
        /// Simulator config; defaults to 8 indices, height 12, all pairs committed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render an object file as canonical text or DOT.
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every instance of a corpus against its kind's hypotheses.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A usage problem (exit 2) as opposed to a property failure (exit 1).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(s: impl Into<String>) -> anyhow::Error {
    Usage(s.into()).into()
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn format_arg(s: &str) -> Result<Format> {
    s.parse().map_err(usage)
}

/// Returns whether every checked property held.
fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Gen { kind, count, seed, out } => {
            let kind: Kind = kind.parse().map_err(usage)?;
            emit(&out, &corpus::render(&corpus::generate(kind, count, seed)))?;
            Ok(true)
        }
        Cmd::Run { suite, seed, config, out } => {
            let mut m = match &config {
                Some(path) => parse_manifest(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None => Manifest::new("all", 0),
            };
            if let Some(s) = suite {
                m.suite = s;
            }
            if let Some(s) = seed {
                m.seed = s;
            }
            if m.suite != "all" && suites::find(&m.suite).is_none() {
                let names: Vec<&str> = suites::SUITES.iter().map(|s| s.name).collect();
                return Err(usage(format!("unknown suite `{}` (expected all or one of {})", m.suite, names.join(", "))));
            }
            let report = suites::run_manifest(&m).map_err(usage)?;
            emit(&out, &report.render())?;
            Ok(report.passed())
        }
        Cmd::Simulate { config, seed, format, out } => {
            let format = format_arg(&format)?;
            let cfg = match &config {
                Some(path) => SimConfig::from_text(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None => criterion_five_config(seed),
            };
            let g = simulate_generic_pprime(&cfg).map_err(|e| anyhow!("simulation failed: {e}"))?;
            let failures = simulation_failures(&cfg).map_err(|e| anyhow!(e))?;
            let text = match format {
                Format::Dot => export::pstar_dot(g.last()),
                Format::Text => {
                    let sad = check_strong_almost_disjoint(&g);
                    let mut s = format!("config {}\n", cfg.to_text());
                    s.push_str(&format!("chain length {}\n", g.chain.len()));
                    s.push_str(&format!("nodes {}\n", g.tree().len()));
                    for c in &sad.pairs {
                        s.push_str(&format!(
                            "pair ({} {}) committed {} shared {} maximal {} certified {}\n",
                            c.pair.0.to_text(),
                            c.pair.1.to_text(),
                            c.committed_at.map_or("never".to_string(), |i| format!("at step {i}")),
                            c.intersection_size,
                            c.max_antichain,
                            c.certified
                        ));
                    }
                    for f in &failures {
                        s.push_str(&format!("failure {f}\n"));
                    }
                    s.push_str(&format!("final {}\n", g.last().to_text()));
                    s
                }
            };
            emit(&out, &text)?;
            Ok(failures.is_empty())
        }
        Cmd::Export { config, format, out } => {
            let format = format_arg(&format)?;
            let o = parse_object(read(&config)?.trim()).map_err(|e| usage(format!("{}: {e}", config.display())))?;
            emit(&out, &export::export(&o, format).map_err(usage)?)?;
            Ok(true)
        }
        Cmd::Verify { config, out } => {
            let c = corpus::parse_corpus(&read(&config)?).map_err(|e| usage(format!("{}: {e}", config.display())))?;
            let found = corpus::verify(&c);
            let mut s = String::new();
            for (line, why) in &found {
                s.push_str(&format!("counterexample at instance {line}: {why}\n"));
            }
            s.push_str(&format!("{} instances, {} violations\n", c.len(), found.len()));
            emit(&out, &s)?;
            Ok(found.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
