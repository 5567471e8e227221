fn main() {
    std::process::exit(shine_fs::cli::run());
}
