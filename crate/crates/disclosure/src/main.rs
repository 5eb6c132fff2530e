fn main() {
    std::process::exit(disclosure::cli::run());
}
