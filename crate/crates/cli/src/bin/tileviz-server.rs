use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Parser;
use tileviz_cli::{serve, AppState};
use tileviz_core::{scan_workspace, ProjectConfig};

/// Serve slides and overlays from a workspace directory.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Directory holding slides/ and overlays/.
    #[arg(long)]
    workspace: PathBuf,
    /// Project configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 5006)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Idle sessions are dropped after this many seconds.
    #[arg(long, default_value_t = 3600)]
    session_timeout_secs: u64,
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt().with_target(false).init();
    let args = Args::parse();
    let config = match &args.config {
        Some(path) => ProjectConfig::load(path).with_context(|| format!("config {}", path.display()))?,
        None => ProjectConfig::default(),
    };
    let catalog = scan_workspace(&args.workspace)?;
    for d in &catalog.diagnostics {
        tracing::warn!("{d}");
    }
    tracing::info!(slides = catalog.slides.len(), "workspace scanned");
    let state = Arc::new(AppState::new(
        args.workspace,
        config,
        Duration::from_secs(args.session_timeout_secs),
    ));
    serve(state, SocketAddr::new(args.host, args.port)).await?;
    Ok(())
}
