fn main() {
    std::process::exit(amlab::cli::run(std::env::args_os()));
}
