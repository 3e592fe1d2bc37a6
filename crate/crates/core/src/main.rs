use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let inv = morphkit_core::cli::run_command(std::env::args_os());
    let written = match (&inv.out, &inv.report) {
        (Some(path), Some(_)) => std::fs::write(path, &inv.output),
        (_, None) if inv.code != 0 => std::io::stderr().write_all(inv.output.as_bytes()),
        _ => std::io::stdout().write_all(inv.output.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("morphkit: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(inv.code as u8)
}
