fn main() {
    std::process::exit(anisotetra_cli::run(std::env::args_os()));
}
