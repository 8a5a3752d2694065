fn main() {
    std::process::exit(dynkin_cli::run());
}
