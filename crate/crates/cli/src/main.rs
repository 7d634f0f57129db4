use clap::Parser;

fn main() {
    let cli = organslice_cli::Cli::parse();
    if let Err(e) = organslice_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
