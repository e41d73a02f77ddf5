use clap::Parser;

fn main() {
    std::process::exit(thzcov::cli::main_with(thzcov::cli::Args::parse()));
}
