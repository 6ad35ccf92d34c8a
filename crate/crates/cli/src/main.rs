use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fsg_cli::commands;
use fsg_cli::config::RunConfig;
use fsg_cli::manifest::Manifest;
use fsg_cli::{exit_code, EXIT_VALIDATION};
use fsg_core::metrics::LandmarkReduction;
use fsg_core::poisson::Method;

/// Face swapping toolkit: appearance maps, view interpolation, Poisson
/// blending, curation and evaluation. Set FSG_LOG (e.g. `info`, `debug`)
/// for diagnostics on stderr.
#[derive(Parser)]
#[command(name = "fsg", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for `mock:noise` endpoints given without one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reenactment generator endpoint.
    #[arg(long = "gen-r", global = true)]
    gen_r: Option<String>,
    /// Segmentation generator endpoint.
    #[arg(long = "gen-s", global = true)]
    gen_s: Option<String>,
    /// Inpainting generator endpoint.
    #[arg(long = "gen-c", global = true)]
    gen_c: Option<String>,
    /// Blending generator endpoint; Poisson blending when absent.
    #[arg(long = "gen-b", global = true)]
    gen_b: Option<String>,
    /// Fixed number of reenactment steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Minimum angular separation of kept views, degrees.
    #[arg(long = "prune-radius", global = true)]
    prune_radius: Option<f64>,
    /// Poisson solver residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverChoice {
    Auto,
    Direct,
    Cg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Png,
    Fsim,
}

#[derive(Subcommand)]
enum Command {
    /// Prune and triangulate the manifest's views into an appearance map.
    BuildMap {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Barycentric view weights of a pose, as JSON.
    Query {
        #[arg(long)]
        map: PathBuf,
        /// `yaw,pitch[,roll]` in degrees.
        #[arg(long, allow_hyphen_values = true)]
        pose: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Swap the manifest's source views into its target frames.
    Swap {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "png")]
        format: Format,
    },
    /// Poisson-blend a source into a target inside a label mask.
    Blend {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        solver: SolverChoice,
    },
    /// Aggregate SSIM, pose and landmark errors into a mean ± std table.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// CSV table; a JSON report is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Row label in the table.
        #[arg(long, default_value = "fsg")]
        method: String,
        /// Report mean per-point landmark distance instead of the flattened norm.
        #[arg(long)]
        landmark_mean: bool,
    },
    /// Coverage, blur and pose pruning plus the per-subject frame cap.
    Curate {
        #[arg(long)]
        manifest: PathBuf,
        /// Retained frame ids, one per line.
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize a new view at a pose from the nearest existing view.
    Densify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        pose: String,
        /// Landmark file for the new view.
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        id: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    for (slot, v) in [
        (&mut cfg.gen_r, &c.gen_r),
        (&mut cfg.gen_s, &c.gen_s),
        (&mut cfg.gen_c, &c.gen_c),
    ] {
        if let Some(v) = v {
            *slot = v.clone();
        }
    }
    if c.gen_b.is_some() {
        cfg.gen_b = c.gen_b.clone();
    }
    if c.steps.is_some() {
        cfg.swap.steps = c.steps;
    }
    if let Some(r) = c.prune_radius {
        cfg.swap.prune_radius = r;
    }
    if let Some(t) = c.tol {
        cfg.swap.tol = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    match cli.command {
        Command::BuildMap { manifest, out } => {
            commands::build_map(&Manifest::load(&manifest)?, &cfg, &out)
        }
        Command::Query { map, pose, out } => {
            let v = commands::query(&commands::load_map(&map)?, &commands::parse_pose(&pose)?)?;
            let text = serde_json::to_string_pretty(&v)?;
            println!("{text}");
            if let Some(out) = out {
                std::fs::write(&out, text + "\n")
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            Ok(())
        }
        Command::Swap {
            manifest,
            out,
            format,
        } => {
            let ext = match format {
                Format::Png => "png",
                Format::Fsim => "fsim",
            };
            commands::swap(&Manifest::load(&manifest)?, &cfg, &out, ext)
        }
        Command::Blend {
            target,
            source,
            mask,
            out,
            solver,
        } => {
            let method = match solver {
                SolverChoice::Auto => Method::Auto,
                SolverChoice::Direct => Method::Direct,
                SolverChoice::Cg => Method::ConjugateGradient,
            };
            commands::blend(&target, &source, &mask, &cfg, method, &out)
        }
        Command::Eval {
            manifest,
            out,
            method,
            landmark_mean,
        } => {
            let reduction = if landmark_mean {
                LandmarkReduction::MeanPerPoint
            } else {
                LandmarkReduction::Flattened
            };
            print!(
                "{}",
                commands::eval(&Manifest::load(&manifest)?, reduction, &method, &out)?
            );
            Ok(())
        }
        Command::Curate { manifest, out } => {
            let ids = commands::curate(&Manifest::load(&manifest)?, &cfg, &out)?;
            log::info!("kept {} frames", ids.len());
            Ok(())
        }
        Command::Densify {
            manifest,
            pose,
            landmarks,
            id,
            out,
        } => {
            let row = commands::densify(
                &Manifest::load(&manifest)?,
                &cfg,
                &commands::parse_pose(&pose)?,
                &landmarks,
                id,
                &out,
            )?;
            println!("{row}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FSG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fsg: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
