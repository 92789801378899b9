use clap::Parser;

fn main() {
    std::process::exit(refute_cli::main_with(refute_cli::Cli::parse()));
}
