fn main() {
    std::process::exit(slicebed::cli::run(std::env::args_os()));
}
