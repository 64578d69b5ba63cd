use clap::Parser;
use iakrc_cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("IAKRC_LOG", "warn")).init();
    if let Err(e) = execute(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
