fn main() {
    std::process::exit(safenav_cli::run(std::env::args_os()));
}
