fn main() {
    std::process::exit(affembed_cli::run(std::env::args_os()))
}
