use clap::Parser;

use thermopath::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
