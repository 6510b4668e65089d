use clap::Parser;
use nashplan_cli::{commands::EXIT_INPUT, run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(EXIT_INPUT);
        }
        Err(e) => e.exit(),
    };
    std::process::exit(run(cli));
}
