use clap::Parser;
use orlat_cli::config::Cli;
use orlat_cli::error::{EXIT_OK, EXIT_USAGE};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = orlat_cli::init_threads().and_then(|()| orlat_cli::execute(&cli));
    if let Err(e) = result {
        eprintln!("orlat: {e}");
        std::process::exit(e.exit_code());
    }
}
