use clap::Parser;

fn main() {
    let args = gcma::cli::Args::parse();
    std::process::exit(gcma::cli::main_with_args(args));
}
