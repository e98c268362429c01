fn main() {
    std::process::exit(qsylv::cli::run_cli(std::env::args_os()));
}
