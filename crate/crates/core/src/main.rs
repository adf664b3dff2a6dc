fn main() {
    std::process::exit(magslab::cli::run(std::env::args_os()));
}
