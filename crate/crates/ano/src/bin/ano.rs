use clap::Parser;

fn main() {
    std::process::exit(ano::cli::run(ano::cli::Cli::parse()));
}
