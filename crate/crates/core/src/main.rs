fn main() {
    std::process::exit(nullmap::cli::run(std::env::args_os()));
}
