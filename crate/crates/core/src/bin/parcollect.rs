use std::io::Write;
use std::process::ExitCode;

use parcollect::cli::{main_with, STATE_LIMIT_ENV};

fn main() -> ExitCode {
    let limit = std::env::var(STATE_LIMIT_ENV).ok();
    let outcome = main_with(std::env::args_os(), limit.as_deref());
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.exit_code as u8)
}
