use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dosefind::report::{self, Format, Row};
use dosefind::{batch, scenarios, service, theory};
use dosefind_core::designs::{DesignConfig, REGISTRY};
use dosefind_core::RngSeed;

#[derive(Parser)]
#[command(name = "dosefind", version, about = "Dose-finding trial designs: simulation, theory and trial conduct")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate designs on scenarios and report operating characteristics.
    Simulate(SimulateArgs),
    /// Allocation constants and Sequential Halving complexity of a scenario.
    Theory(TheoryArgs),
    /// Run the trial-conduct HTTP service.
    Serve(ServeArgs),
    /// List built-in scenarios and design names.
    List,
}

#[derive(Args)]
struct SimulateArgs {
    /// Design names, repeatable or comma-separated.
    #[arg(long = "design", short = 'd', value_delimiter = ',', required = true)]
    designs: Vec<String>,
    /// Scenario files or built-in names, repeatable or comma-separated.
    #[arg(long = "scenario", short = 's', value_delimiter = ',', required = true)]
    scenarios: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    n_reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    parallelism: Option<usize>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct Tuning {
    /// ts-eps: probability of proposing the sampled dose.
    #[arg(long)]
    epsilon: Option<f64>,
    /// ts-eps: resampling attempts before falling back to plain TS.
    #[arg(long)]
    max_rejections: Option<usize>,
    /// ts-a, med-ts-a, mta-ra: safety cut-off.
    #[arg(long)]
    c1: Option<f64>,
    /// med-ts-a, mta-ra: efficacy cut-off.
    #[arg(long)]
    c2: Option<f64>,
    /// med-ts-a, mta-ra: minimal efficacy.
    #[arg(long)]
    xi: Option<f64>,
    /// mta-ra: initial slack.
    #[arg(long)]
    slack: Option<f64>,
    /// MCMC iterations, burn-in included.
    #[arg(long)]
    chain_length: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Override the scenario's start-up phase setting.
    #[arg(long)]
    no_startup: bool,
}

impl Tuning {
    fn apply(&self, d: &mut DesignConfig) {
        match d {
            DesignConfig::TsEps {
                epsilon,
                max_rejections,
            } => {
                if let Some(e) = self.epsilon {
                    *epsilon = e;
                }
                if let Some(m) = self.max_rejections {
                    *max_rejections = m;
                }
            }
            DesignConfig::TsA { c1 } => {
                if let Some(c) = self.c1 {
                    *c1 = c;
                }
            }
            DesignConfig::MedTsA { criteria } | DesignConfig::MtaRa { criteria, .. } => {
                if let Some(c) = self.c1 {
                    criteria.c1 = c;
                }
                if let Some(c) = self.c2 {
                    criteria.c2 = c;
                }
                if let Some(x) = self.xi {
                    criteria.xi = x;
                }
            }
            _ => {}
        }
        if let (DesignConfig::MtaRa { slack, .. }, Some(s)) = (d, self.slack) {
            *slack = s;
        }
    }
}

#[derive(Args)]
struct TheoryArgs {
    /// Scenario file or built-in name.
    #[arg(long, short = 's')]
    scenario: String,
    /// Budget for the Sequential Halving error bound; defaults to the scenario's.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// Directory for session event logs and snapshots; in-memory if unset.
    #[arg(long, env = "DOSEFIND_STATE_DIR")]
    state_dir: Option<PathBuf>,
}

/// Bad input the user can fix; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let mut designs = Vec::new();
    for name in &a.designs {
        let mut d = DesignConfig::from_name(name)
            .ok_or_else(|| Usage(format!("unknown design `{name}`; available: {}", REGISTRY.join(", "))))?;
        a.tuning.apply(&mut d);
        d.validate().map_err(|e| Usage(format!("{name}: {e}")))?;
        designs.push(d);
    }
    let specs = a
        .scenarios
        .iter()
        .map(|s| scenarios::load(s).map_err(|e| Usage(format!("{e:#}")).into()))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let parallelism = a
        .parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut rows = Vec::new();
    for (arg, spec) in a.scenarios.iter().zip(&specs) {
        let mut setup = spec.setup()?;
        if let Some(l) = a.tuning.chain_length {
            setup.chain.length = l;
        }
        if let Some(b) = a.tuning.burn_in {
            setup.chain.burn_in = b;
        }
        if a.tuning.no_startup {
            setup.startup = false;
        }
        let label = if spec.label.is_empty() { arg.clone() } else { spec.label.clone() };
        for d in &designs {
            setup
                .check(d)
                .map_err(|e| Usage(format!("{} on {label}: {e}", d.name())))?;
            tracing::info!(design = d.name(), scenario = %label, reps = a.n_reps, "simulating");
            let metrics = batch::run_batch(d, &setup, &spec.truth(), a.n_reps, RngSeed(a.seed), parallelism)?;
            rows.push(Row {
                design: d.name().to_string(),
                scenario: label.clone(),
                metrics,
            });
        }
    }
    let text = if a.format == Format::Csv && specs.iter().any(|s| s.doses() != specs[0].doses()) {
        // one CSV per dose count would be needed; JSON keeps them together
        return Err(Usage("scenarios with different dose counts need --format json or table".into()).into());
    } else {
        report::render(&rows, a.format)?
    };
    match &a.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn theory_cmd(a: TheoryArgs) -> anyhow::Result<()> {
    let spec = scenarios::load(&a.scenario).map_err(|e| Usage(format!("{e:#}")))?;
    let r = theory::analyze(&spec.true_tox, spec.theta, Some(a.budget.unwrap_or(spec.n)))?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        print!("{}", theory::render(&r));
    }
    Ok(())
}

fn list() {
    println!("designs: {}", REGISTRY.join(", "));
    println!("scenarios:");
    for (name, _) in scenarios::BUILTIN {
        let s = scenarios::builtin(name).expect("built-in scenario");
        println!("  {name:<10} {}", s.label);
    }
}

fn serve_cmd(a: ServeArgs) -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(SocketAddr::new(a.bind, a.port), a.state_dir))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Theory(a) => theory_cmd(a),
        Command::Serve(a) => serve_cmd(a),
        Command::List => {
            list();
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
