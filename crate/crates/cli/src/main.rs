use clap::Parser;

use boundary_cli::args::Cli;
use boundary_cli::commands;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
