fn main() {
    std::process::exit(cuspdet::cli::run());
}
