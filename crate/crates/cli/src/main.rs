fn main() {
    std::process::exit(voidscan_cli::run(std::env::args_os()));
}
