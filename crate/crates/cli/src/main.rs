use clap::Parser;

fn main() {
    let cli = polsqueeze_cli::Cli::parse();
    std::process::exit(polsqueeze_cli::run(&cli));
}
