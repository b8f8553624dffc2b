use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::{error, info, warn};
use polarmix::pipeline::{self, output_paths, RecipeConfig};
use polarmix::{export_ply, read_scan, ClassHistogram, Palette};

/// Batch LiDAR scan augmentation.
#[derive(Parser)]
#[command(name = "augment", version = polarmix::VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an augmentation recipe over a dataset.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Print the config with every default filled in, then exit.
        #[arg(long)]
        print_effective_config: bool,
    },
    /// Print per-class point counts over every scan under a root.
    Stats {
        #[arg(long)]
        root: PathBuf,
    },
    /// Write one labelled scan as a colored ASCII PLY file.
    ExportPly {
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML table of class id to [r, g, b]; generated colors otherwise.
        #[arg(long)]
        palette: Option<PathBuf>,
    },
    /// Print the scan pairing a recipe would use, without running it.
    PairPreview {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Exit status for invalid configuration or usage.
const USAGE: u8 = 2;

enum Failure {
    Usage(anyhow::Error),
    Task(anyhow::Error),
}

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run { config, print_effective_config } => run(&config, print_effective_config),
        Command::Stats { root } => stats(&root),
        Command::ExportPly { scan, labels, out, palette } => {
            export(&scan, &labels, &out, palette.as_deref())
        }
        Command::PairPreview { config } => pair_preview(&config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            error!("{e:#}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Task(e)) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<RecipeConfig, Failure> {
    RecipeConfig::load(path).map_err(usage)
}

fn run(config_path: &Path, print_only: bool) -> Result<(), Failure> {
    let config = load(config_path)?;
    if print_only {
        print!("{}", config.to_toml_string());
        return Ok(());
    }
    let report = pipeline::run_recipe(&config).map_err(usage)?;
    info!(
        "{} outputs written, {} failed, report at {}",
        report.outputs_written,
        report.failures,
        config.report_path().display()
    );
    if report.succeeded() {
        Ok(())
    } else {
        Err(Failure::Task(anyhow::anyhow!("{} task(s) failed", report.failures)))
    }
}

fn stats(root: &Path) -> Result<(), Failure> {
    let dataset = pipeline::enumerate_dataset(root).map_err(usage)?;
    let mut histogram = ClassHistogram::new();
    let mut failed = 0;
    for entry in &dataset.entries {
        match read_scan(&entry.scan_path, entry.label_path.as_deref()) {
            Ok(scan) => histogram.add_scan(&scan),
            Err(e) => {
                warn!("{e}");
                failed += 1;
            }
        }
    }
    println!("{histogram}");
    if failed > 0 {
        return Err(Failure::Task(anyhow::anyhow!("{failed} scan(s) could not be read")));
    }
    Ok(())
}

fn export(scan: &Path, labels: &Path, out: &Path, palette: Option<&Path>) -> Result<(), Failure> {
    let scan = read_scan(scan, Some(labels)).map_err(|e| Failure::Task(e.into()))?;
    let palette = match palette {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading palette {}", path.display()))
                .map_err(Failure::Usage)?;
            Palette::from_toml_str(&text)
                .with_context(|| format!("palette {}", path.display()))
                .map_err(Failure::Usage)?
        }
        None => {
            let classes: BTreeSet<u16> = scan.labels().iter().map(|l| l.semantic()).collect();
            Palette::generated(&classes)
        }
    };
    export_ply(&scan, &palette, out).map_err(|e| Failure::Task(e.into()))?;
    info!("wrote {} points to {}", scan.len(), out.display());
    Ok(())
}

fn pair_preview(config_path: &Path) -> Result<(), Failure> {
    let config = load(config_path)?;
    let plan = pipeline::plan(&config).map_err(usage)?;
    for task in plan.tasks(config.multiplier) {
        let base = &plan.dataset.entries[task.a_index];
        let (scan_out, _) = output_paths(base, &plan.dataset.root, &config.output_root, task.k);
        let donor = match task.b_index {
            Some(b) => format!("{}\t{}", b, plan.donor(b).scan_path.display()),
            None => "-\t-".to_string(),
        };
        println!(
            "{}\t{}\t{}\t{}",
            task.a_index,
            base.scan_path.display(),
            donor,
            scan_out.display()
        );
    }
    Ok(())
}
