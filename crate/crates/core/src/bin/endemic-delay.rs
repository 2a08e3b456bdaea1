use std::process::ExitCode;

use clap::Parser;
use endemic_delay::cli::{self, Cli};

fn main() -> ExitCode {
    cli::main(Cli::parse())
}
