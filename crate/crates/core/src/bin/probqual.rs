fn main() {
    std::process::exit(probqual::cli::run(std::env::args_os()));
}
