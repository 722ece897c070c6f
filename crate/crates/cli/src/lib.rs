//! Command-line front end: single analyses, parameter sweeps and the CSV
//! artifacts they produce.
//!
//! Every command writes its CSV files and a `meta.txt` into an output
//! directory. CSV bodies depend only on the settings and seed; the creation
//! time is recorded in `meta.txt` alone.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod output;
pub mod settings;
pub mod sweep;

pub use settings::Settings;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} stability verdicts disagree with the analytic conditions")]
    LemmaDisagreement(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::LemmaDisagreement(_) => 4,
        }
    }
}

impl From<trustdyn_core::Error> for CliError {
    fn from(e: trustdyn_core::Error) -> Self {
        match e {
            trustdyn_core::Error::Csv(msg) => CliError::Io(msg),
            trustdyn_core::Error::Config(msg) => CliError::Config(msg),
            e if e.is_config_error() => CliError::Config(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "trustdyn", version, about = "Evolutionary dynamics of trust between AI users and AI creators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Small-mutation Markov chain over monomorphic states, optionally
    /// checked against an agent-based simulation.
    Finite(CommonArgs),
    /// Integrate the replicator equations from one starting point.
    Replicator(CommonArgs),
    /// Two populations of stateless Q-learners.
    Qlearn(CommonArgs),
    /// Equilibrium catalogue with stability verdicts.
    Equilibria {
        #[command(flatten)]
        common: CommonArgs,
        /// Also check the stability conditions over the 5x5x2 (c, v, sign of
        /// mu) grid around the given parameters.
        #[arg(long)]
        grid: bool,
    },
    /// Cartesian parameter sweep.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

macro_rules! key_flags {
    ($($field:ident => $key:literal, $help:literal;)*) => {
        /// One flag per config key. Flags override the config file.
        #[derive(Debug, Clone, Default, Args)]
        pub struct KeyFlags {
            $(
                #[doc = $help]
                #[arg(long = $key, value_name = "VALUE", allow_hyphen_values = true)]
                pub $field: Option<String>,
            )*
        }

        impl KeyFlags {
            pub fn overrides(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push(($key, v.clone()));
                    }
                )*
                out
            }
        }
    };
}

key_flags! {
    b_u => "b_u", "User benefit from adopting a safe system";
    b_c => "b_c", "Creator benefit per adoption";
    c => "c", "Creator cost of building a safe system";
    v => "v", "Institutional punishment of an adopted unsafe system";
    mu => "mu", "Risk multiplier on user benefit from an unsafe system";
    eps => "eps", "Monitoring cost per check";
    p_t => "p_T", "TUA checking probability once trusting";
    p_d => "p_D", "DtG checking probability once distrusting";
    theta_t => "theta_T", "TUA cooperation threshold (rounds)";
    theta_d => "theta_D", "DtG defection threshold (rounds)";
    r => "r", "Rounds per repeated game";
    z_u => "Z_u", "User population size";
    z_c => "Z_c", "Creator population size";
    beta => "beta", "Selection strength";
    trust => "trust", "Include TUA and DtG (true or false)";
    seed => "seed", "Random seed (TRUSTDYN_SEED overrides the config file)";
    mutation_rate => "mutation_rate", "Mutation probability in the agent-based simulation";
    mc_steps => "mc_steps", "Agent-based simulation steps; 0 skips the simulation";
    mc_record_every => "mc_record_every", "Keep every n-th simulation count record";
    variant => "variant", "Replicator system: five or three";
    dt => "dt", "Integration time step";
    t_end => "t_end", "Integration end time";
    record_every => "record_every", "Write every n-th integration step";
    init => "init", "Starting point: uniform, or the free coordinates comma-separated";
    learn_rate => "learn_rate", "Q-learning rate";
    explore_rate => "explore_rate", "Exploration probability";
    pop_size => "pop_size", "Learners per population";
    episodes => "episodes", "Learning episodes per run";
    runs => "runs", "Independent learning runs to average";
    census => "census", "Per-episode census: greedy or sampled";
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// key=value configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for CSV files and meta.txt.
    #[arg(long, value_name = "DIR", default_value = "trustdyn_out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub keys: KeyFlags,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// First axis, `name=a,b,c` or `name=start:end:points`.
    #[arg(long, default_value = "eps=0:1:21")]
    pub axis1: String,
    /// Optional second axis in the same syntax.
    #[arg(long)]
    pub axis2: Option<String>,
    /// finite, replicator or qlearn.
    #[arg(long, default_value = "finite")]
    pub mode: String,
    /// both, with or without the trust strategies. Q-learning always uses
    /// all five user strategies.
    #[arg(long = "trust_variants", default_value = "both")]
    pub trust_variants: String,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Finite(a) => commands::finite(&load(&a)?, &a.out),
        Command::Replicator(a) => commands::replicator(&load(&a)?, &a.out),
        Command::Qlearn(a) => commands::qlearn(&load(&a)?, &a.out),
        Command::Equilibria { common, grid } => commands::equilibria(&load(&common)?, &common.out, grid),
        Command::Sweep { common, sweep } => {
            let settings = load(&common)?;
            let spec = sweep::SweepSpec::parse(&sweep)?;
            sweep::run_sweep(&spec, &settings, &common.out, sweep.jobs)
        }
    }
}

fn load(a: &CommonArgs) -> Result<Settings, CliError> {
    Settings::load(a.config.as_deref(), &a.keys.overrides())
}
