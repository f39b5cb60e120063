fn main() {
    std::process::exit(idcc::cli::run());
}
