use std::io;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use sqlhint::cli::{run, Cli, Command};
use sqlhint::{http, Engine};

fn serve(cli: &Cli, addr: Option<&str>) -> anyhow::Result<()> {
    let mut config = cli.load_config()?;
    if let Some(a) = addr {
        config.listen = a.to_string();
    }
    let listen = config.listen.clone();
    let app = http::router(Engine::open(config)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&listen).await.with_context(|| format!("binding {listen}"))?;
        tracing::info!("listening on {listen}");
        axum::serve(listener, app).await?;
        Ok(())
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve { addr } => serve(&cli, addr.as_deref()),
        _ => run(&cli, &mut io::stdout().lock()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
