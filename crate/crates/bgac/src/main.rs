fn main() {
    std::process::exit(bgac::cli::run());
}
