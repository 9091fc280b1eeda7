fn main() {
    std::process::exit(femtomarket::cli::run());
}
