fn main() {
    std::process::exit(credkit::cli::dispatch(std::env::args_os()));
}
