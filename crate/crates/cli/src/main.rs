use clap::Parser;

fn main() {
    let cli = rxnfit_cli::Cli::parse();
    if let Err(e) = rxnfit_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
