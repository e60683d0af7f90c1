fn main() {
    std::process::exit(cogtrack::cli::run(std::env::args_os()));
}
