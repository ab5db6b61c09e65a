use clap::Parser;

use carapace::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CARAPACE_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let cfg = match cli.into_config() {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    };
    std::process::exit(run(&cfg));
}
