fn main() {
    std::process::exit(envpair_cli::run(std::env::args_os()));
}
