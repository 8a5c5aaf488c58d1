use clap::Parser;

use mwdiff_cli::run::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("mwdiff: {e}");
        std::process::exit(e.exit_code());
    }
}
