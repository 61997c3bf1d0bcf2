use clap::Parser;

fn main() {
    let cli = spinbath_cli::Cli::parse();
    if let Err(err) = spinbath_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
