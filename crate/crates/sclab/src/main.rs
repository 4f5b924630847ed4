use clap::Parser;

fn main() {
    let cli = sclab::Cli::parse();
    std::process::exit(sclab::main_with(&cli));
}
