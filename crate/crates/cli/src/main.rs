use clap::Parser;
use osborne_cli::{run, RunConfig, EXIT_ERROR};

fn main() {
    let config = match RunConfig::try_parse() {
        Ok(config) => config,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(&config));
}
