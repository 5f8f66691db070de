use clap::Parser;
use ultrajet::cli_report::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}
