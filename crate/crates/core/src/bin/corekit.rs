fn main() {
    std::process::exit(corekit::cli::run(std::env::args_os()));
}
