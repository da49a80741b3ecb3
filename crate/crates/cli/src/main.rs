use std::process::ExitCode;

use clap::Parser;
use fredholm_kit::args::{error_json, prepare, Cli, Sub};
use fredholm_kit::demos::DEMO_NAMES;
use fredholm_kit::run::{output_dir, run};
use fredholm_kit::Command;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            println!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let (command, name, overrides) = match cli.command {
        Sub::Solve(o) => (Command::Solve, None, o),
        Sub::Mixdens(o) => (Command::Mixdens, None, o),
        Sub::Fpt(o) => (Command::Fpt, None, o),
        Sub::Demo { list: true, .. } => {
            for name in DEMO_NAMES {
                println!("{name}");
            }
            return Ok(());
        }
        Sub::Demo { name, overrides, .. } => (Command::Demo, name, overrides),
    };
    let config = prepare(command, name.as_deref(), &overrides)?;
    let dir = output_dir(&config, overrides.out.as_deref());
    let output = run(&config, &dir)?;
    let summary = serde_json::json!({
        "status": "ok",
        "out": dir,
        "command": output.diagnostics.command,
        "iterations": output.diagnostics.iterations,
        "termination": output.diagnostics.termination,
        "warnings": output.diagnostics.warnings,
    });
    println!("{summary}");
    Ok(())
}
