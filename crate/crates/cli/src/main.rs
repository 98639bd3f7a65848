use clap::Parser;

fn main() {
    std::process::exit(evoml_cli::run(evoml_cli::Cli::parse()));
}
