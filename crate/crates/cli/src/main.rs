use clap::Parser;

fn main() {
    let cli = trustdyn_cli::Cli::parse();
    if let Err(e) = trustdyn_cli::run(cli) {
        eprintln!("trustdyn: {e}");
        std::process::exit(e.exit_code());
    }
}
