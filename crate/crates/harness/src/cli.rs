use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctf_core::engine::Role;
use ctf_envserver::{Server, DEFAULT_BIND};

use crate::config::{dump_config, load_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::heatmap::{action_heatmap, position_heatmap, DEFAULT_CELL};
use crate::replay::{cmd_replay, collect_logs, read_log};
use crate::run::{cmd_eval, cmd_train, load_policy, resolve_out, write_file};

#[derive(Debug, Parser)]
#[command(name = "ctf", version, about = "Capture-the-flag training and evaluation harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a defender for every seed.
    Train(ExperimentArgs),
    /// Evaluate a trained policy (or the untrained table) greedily.
    Eval {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Policy file written by `train`.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Re-simulate episode logs and report disagreements.
    Replay {
        /// Log files or directories holding them.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        /// Replay under this config's field instead of the logged one.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Position or action heat map from episode logs, as CSV.
    Heatmap {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "position")]
        kind: HeatmapKind,
        #[arg(long, value_enum, default_value = "defender")]
        role: RoleArg,
        /// Cell edge in meters (position maps).
        #[arg(long, default_value_t = DEFAULT_CELL)]
        cell: f64,
        /// Add a column with each cell's share of the total.
        #[arg(long)]
        normalize: bool,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the environment protocol.
    Serve {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, env = "CTF_BIND", default_value = DEFAULT_BIND)]
        bind: String,
    },
    /// Print the resolved config.
    DumpConfig {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Print the environment document used by the protocol's `configure`.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HeatmapKind {
    Position,
    Action,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    Attacker,
    Defender,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replaces the config's seed list. Repeatable.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Output directory. Defaults to the config's `output`, then
    /// `$CTF_OUT_ROOT/<config name>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reward profile label, such as BTRS or 2BTRS+EFF.
    #[arg(long)]
    pub profile: Option<String>,
    /// Train against a single opponent.
    #[arg(long, value_parser = ["att_e", "att_h"])]
    pub opponent: Option<String>,
    /// Sets the reward's gradient scale (absolute, not multiplied).
    #[arg(long)]
    pub gradient_scale: Option<f64>,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.profile {
            cfg.set_profile(p)?;
        }
        if let Some(o) = &self.opponent {
            cfg.set_opponent(o)?;
        }
        if let Some(g) = self.gradient_scale {
            cfg.reward.gradient_scale = g;
        }
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig, command: &str) -> PathBuf {
        let name = self
            .config
            .as_deref()
            .and_then(Path::file_stem)
            .map_or_else(|| command.to_string(), |s| s.to_string_lossy().into_owned());
        let base = resolve_out(self.out.as_deref(), cfg, &name);
        if command == "eval" && self.out.is_none() {
            base.join("eval")
        } else {
            base
        }
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(exp) => {
            let cfg = exp.resolve()?;
            let out = exp.out_dir(&cfg, "train");
            let runs = cmd_train(&cfg, &out)?;
            for r in &runs {
                for (o, e) in &r.final_evals {
                    println!("seed {}: vs {o} mean score {}", r.seed, e.mean_score);
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Eval { exp, policy } => {
            let cfg = exp.resolve()?;
            let policy = policy.as_deref().map(load_policy).transpose()?;
            let out = exp.out_dir(&cfg, "eval");
            for (seed, evals) in cmd_eval(&cfg, policy.as_ref(), &out)? {
                for (o, e) in evals {
                    println!("seed {seed}: vs {o} mean score {}", e.mean_score);
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Replay { logs, config } => {
            let field = config.as_deref().map(load_config).transpose()?.map(|c| c.field);
            let summary = cmd_replay(&logs, field.as_ref())?;
            print!("{}", summary.render());
            if summary.mismatches() > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Heatmap {
            logs,
            kind,
            role,
            cell,
            normalize,
            out,
        } => {
            let logs = collect_logs(&logs)?
                .iter()
                .map(|p| read_log(p))
                .collect::<Result<Vec<_>>>()?;
            let role = match role {
                RoleArg::Attacker => Role::Attacker,
                RoleArg::Defender => Role::Defender,
            };
            let csv = match kind {
                HeatmapKind::Position => position_heatmap(&logs, role, cell)?.to_csv(normalize),
                HeatmapKind::Action => action_heatmap(&logs, role)?.to_csv(normalize),
            };
            match out {
                Some(p) => write_file(&p, &csv)?,
                None => print!("{}", String::from_utf8_lossy(&csv)),
            }
        }
        Command::Serve { exp, bind } => {
            let cfg = exp.resolve()?;
            let opponent = cfg.regime.opponents().remove(0);
            let server = Server::bind(bind.as_str(), cfg.env_config(&opponent)?)?;
            eprintln!("listening on {}", server.local_addr().map_err(Error::io(bind.as_str()))?);
            server.run()?;
        }
        Command::DumpConfig { exp, json } => {
            let cfg = exp.resolve()?;
            if json {
                let opponent = cfg.regime.opponents().remove(0);
                let doc = serde_json::to_string_pretty(&cfg.env_config(&opponent)?).expect("config serializes");
                println!("{doc}");
            } else {
                print!("{}", dump_config(&cfg));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
