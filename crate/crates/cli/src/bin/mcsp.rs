use clap::Parser;

/// Streaming search-MCSP.
#[derive(Parser)]
#[command(name = "mcsp", version)]
struct McspCli {
    #[command(subcommand)]
    command: refute_cli::McspCommand,
}

fn main() {
    let cli = McspCli::parse();
    std::process::exit(refute_cli::main_with(refute_cli::Cli { command: refute_cli::Command::Mcsp(cli.command) }));
}
