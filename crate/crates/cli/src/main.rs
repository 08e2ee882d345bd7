fn main() {
    std::process::exit(smoothing_cli::run());
}
