fn main() {
    std::process::exit(momlab::cli::run(std::env::args_os()));
}
