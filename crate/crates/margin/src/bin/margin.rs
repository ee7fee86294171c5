fn main() {
    std::process::exit(margin::cli::run());
}
