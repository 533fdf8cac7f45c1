use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamsel::antenna::Design;
use beamsel::harness::{cmd_eval, cmd_gen_dataset, cmd_gen_scene, cmd_map, cmd_train, ExperimentConfig, Mismatch, Profile, Scenario};
use beamsel::{Error, Result};

#[derive(Parser)]
#[command(name = "beamsel", version, about = "Device-agnostic mmWave beam selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the resolved experiment config and scene.
    GenScene(Common),
    /// Generate train/test datasets and coverage diagnostics.
    GenDataset(Common),
    /// Train every network for every seed.
    Train(Common),
    /// Evaluate trained networks and write metric tables.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Evaluate one train/test pairing, e.g. trEF:teF.
        #[arg(long)]
        mismatch: Option<String>,
    },
    /// Export beam regions, the grid map, and a best-beam histogram.
    Map {
        #[arg(long, default_value = "EF")]
        device: String,
        #[arg(long, default_value_t = 100)]
        n_fib: usize,
        #[arg(long, default_value_t = 360)]
        az_steps: usize,
        #[arg(long, default_value_t = 180)]
        el_steps: usize,
        /// Dataset whose best beams are histogrammed.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config JSON; defaults come from --profile and --scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for dataset generation and sensing noise.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "desk")]
    profile: String,
    #[arg(long, default_value = "indoor")]
    scenario: String,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let profile: Profile = self.profile.parse()?;
                let scenario = match self.scenario.as_str() {
                    "indoor" => Scenario::Indoor,
                    "sub6" => Scenario::Sub6,
                    other => return Err(Error::config(format!("unknown scenario '{other}' (expected indoor or sub6)"))),
                };
                ExperimentConfig::for_scenario(scenario, profile)
            }
        };
        if let Some(seed) = self.seed {
            cfg.data.master_seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        cfg.out_dir = Some(out.clone());
        cfg.validate()?;
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenScene(c) => {
            let (cfg, out) = c.resolve()?;
            let path = cmd_gen_scene(&cfg, &out)?;
            println!("wrote {}", path.display());
        }
        Command::GenDataset(c) => {
            let (cfg, out) = c.resolve()?;
            let data = cmd_gen_dataset(&cfg, &out)?;
            for (id, ds) in &data.train {
                println!("train {id}: {} samples", ds.len());
            }
            for (id, ds) in &data.test {
                println!("test {id}: {} samples", ds.len());
            }
        }
        Command::Train(c) => {
            let (cfg, out) = c.resolve()?;
            let models = cmd_train(&cfg, &out)?;
            println!("trained {} networks into {}", models.len(), out.join("models").display());
        }
        Command::Eval { common, mismatch } => {
            let (cfg, out) = common.resolve()?;
            let mm = mismatch.as_deref().map(str::parse::<Mismatch>).transpose()?;
            let ev = cmd_eval(&cfg, &out, mm.as_ref())?;
            for r in ev.rows.iter().filter(|r| r.seed == "mean") {
                println!("{:<40} n={:<3} {:<16} {:.4}", r.experiment, r.n, r.metric, r.value);
            }
        }
        Command::Map {
            device,
            n_fib,
            az_steps,
            el_steps,
            dataset,
            out,
        } => {
            let design: Design = device.parse()?;
            let m = cmd_map(design, n_fib, az_steps, el_steps, dataset.as_deref(), &out)?;
            println!("wrote {} and {}", m.regions.display(), m.fib_map.display());
            if let Some(h) = m.histogram {
                println!("wrote {}", h.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
