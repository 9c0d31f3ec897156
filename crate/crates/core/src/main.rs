fn main() {
    std::process::exit(twinspec::cli::run());
}
