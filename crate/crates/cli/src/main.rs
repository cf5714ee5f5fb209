use clap::Parser;

use qjump_cli::{commands, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = cli
        .experiment()
        .and_then(|(cfg, out)| commands::run(&cfg, &out));
    if let Err(e) = result {
        eprintln!("qjump: {e}");
        std::process::exit(CliError::exit_code(&e));
    }
}
