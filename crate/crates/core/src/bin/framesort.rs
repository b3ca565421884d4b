fn main() {
    std::process::exit(framesort::cli::run(std::env::args_os()));
}
