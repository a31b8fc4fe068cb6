use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use tileviz_cli::demo::write_demo_workspace;
use tileviz_core::geojson::import_geojson;
use tileviz_core::slide::generate_synthetic_slide;
use tileviz_core::AnnotationStore;

#[derive(Parser)]
#[command(version, about = "Slide and overlay utilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic test-pattern pyramid.
    Synth {
        width: u32,
        height: u32,
        out: PathBuf,
    },
    /// Convert a GeoJSON FeatureCollection into an annotation store.
    ImportGeojson {
        input: PathBuf,
        /// Defaults to the input path with a .db extension.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Create a small workspace with one slide and an overlay of every kind.
    DemoWorkspace {
        out: PathBuf,
        #[arg(long, default_value = "demo")]
        slide_id: String,
        #[arg(long, default_value_t = 4096)]
        width: u32,
        #[arg(long, default_value_t = 3072)]
        height: u32,
        #[arg(long, default_value_t = 2000)]
        annotations: usize,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth { width, height, out } => {
            let s = generate_synthetic_slide(width, height, &out)?;
            println!("{}: {}x{}, {} levels", out.display(), s.width(), s.height(), s.level_count());
        }
        Command::ImportGeojson { input, output } => {
            let output = output.unwrap_or_else(|| input.with_extension("db"));
            if output.exists() {
                bail!("{} already exists", output.display());
            }
            let mut store = AnnotationStore::create(&output)?;
            let report = import_geojson(&mut store, &input)?;
            println!("{}: {} annotations", output.display(), report.inserted);
            for s in &report.skipped {
                eprintln!("skipped feature {}: {}", s.index, s.reason);
            }
        }
        Command::DemoWorkspace { out, slide_id, width, height, annotations } => {
            write_demo_workspace(&out, &slide_id, width, height, annotations)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}
