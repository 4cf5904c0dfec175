use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use preskit_cli::{dispatch, Cli};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    if let Err(e) = Cli::try_parse_from(&argv) {
        if matches!(
            e.kind(),
            ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
        ) {
            e.exit();
        }
    }
    let report = dispatch(argv, Path::new("."));
    if let Some(msg) = report
        .result
        .get("error")
        .and_then(|e| e.get("message"))
        .and_then(|m| m.as_str())
    {
        eprintln!("preskit: {msg}");
    }
    let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json());
    ExitCode::from(report.exit_code as u8)
}
