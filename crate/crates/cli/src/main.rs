mod args;
mod commands;
mod log;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, PoolCommand};

/// 2 for configuration problems, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err
        .chain()
        .filter_map(|e| e.downcast_ref::<unlock_core::Error>())
        .any(unlock_core::Error::is_config);
    if config {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Thresholds(a) => commands::thresholds(a),
        Command::PseudoLabel(a) => commands::pseudo_label(a),
        Command::Pool {
            command: PoolCommand::Build(a),
        } => commands::pool_build(a),
        Command::Mix(a) => commands::mix(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::Eval(a) => commands::eval(a),
        Command::Pipeline(a) => commands::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            let message = format!("{err:#}");
            log::event(
                "error",
                "failed",
                json!({"error": message, "exit_code": code}),
            );
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
