use clap::Parser;

fn main() {
    let cli = flow3_cli::Cli::parse();
    std::process::exit(flow3_cli::run(cli));
}
