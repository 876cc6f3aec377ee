fn main() {
    std::process::exit(advmod::cli::run(std::env::args_os()));
}
