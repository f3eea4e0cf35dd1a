fn main() {
    std::process::exit(cvhss::cli::run(std::env::args_os()));
}
