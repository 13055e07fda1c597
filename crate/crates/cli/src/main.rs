use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use idde_cli::{run, Cli, Streams};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let result = run(&cli, &mut Streams { out: &mut out, err: &mut err });
    let code = match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
