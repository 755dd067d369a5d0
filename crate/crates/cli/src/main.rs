fn main() {
    std::process::exit(fspace_cli::run(std::env::args_os()));
}
