use clap::Parser;

fn main() -> std::process::ExitCode {
    cavity_mf::cli::main_with(cavity_mf::cli::Cli::parse())
}
