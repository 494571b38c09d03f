fn main() {
    std::process::exit(fracnd::cli::run(std::env::args_os()));
}
