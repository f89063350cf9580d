fn main() {
    std::process::exit(thermoplan::cli::run_cli(std::env::args_os()));
}
