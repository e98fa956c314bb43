//! Command-line entry point: load a run config (file path or bundled
//! name), apply flag overrides, execute the mode, and report artifacts.

use std::process::ExitCode;

use clap::Parser;

use fractube::config::{EpsGrid, Mode, RunConfig};
use fractube::run::{load_config_text, print_summary, run};

#[derive(Parser, Debug)]
#[command(
    name = "fractube",
    version,
    about = "Inner tube volumes of self-similar fractal tilings: residue series over complex dimensions, cross-checked against direct summation"
)]
struct Cli {
    /// Config file path, or a bundled name (example1_compare,
    /// example1_dimensions, example1_conditions, example1_polygon).
    #[arg(long)]
    config: String,

    /// Override the config's mode (dimensions|tube|compare|polygon|conditions).
    #[arg(long)]
    mode: Option<String>,

    /// Output directory override.
    #[arg(long)]
    out: Option<String>,

    #[arg(long)]
    eps_min: Option<f64>,

    #[arg(long)]
    eps_max: Option<f64>,

    #[arg(long)]
    eps_count: Option<usize>,

    /// Symmetric truncation index N of the residue series.
    #[arg(long)]
    truncation: Option<u64>,

    /// Pole search window |Im s| <= T.
    #[arg(long)]
    window: Option<f64>,

    /// Raster resolution in pixels per unit.
    #[arg(long)]
    resolution: Option<u32>,

    /// Suppress the summary lines on stdout.
    #[arg(long)]
    quiet: bool,
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) -> Result<(), String> {
    if let Some(mode) = &cli.mode {
        config.mode = Mode::parse(mode).ok_or_else(|| format!("unknown mode {mode:?}"))?;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if cli.eps_min.is_some() || cli.eps_max.is_some() || cli.eps_count.is_some() {
        let base = config.eps_grid.unwrap_or(EpsGrid {
            min: 0.1,
            max: 0.5,
            count: 9,
            log_spacing: false,
        });
        config.eps_grid = Some(EpsGrid {
            min: cli.eps_min.unwrap_or(base.min),
            max: cli.eps_max.unwrap_or(base.max),
            count: cli.eps_count.unwrap_or(base.count),
            log_spacing: base.log_spacing,
        });
    }
    if let Some(n) = cli.truncation {
        config.truncation = n;
    }
    if let Some(w) = cli.window {
        config.window = Some(w);
    }
    if let Some(r) = cli.resolution {
        config.resolution = Some(r).filter(|&r| r > 0).ok_or("resolution must be positive")?;
    }
    if cli.quiet {
        config.quiet = true;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, bundled) = match load_config_text(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = apply_overrides(&mut config, &cli) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    if bundled.is_some() && !config.quiet {
        println!("using bundled config {:?}", cli.config);
    }
    match run(&config) {
        Ok(artifacts) => {
            print_summary(&artifacts, config.quiet);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(1))
        }
    }
}
