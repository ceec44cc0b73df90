fn main() {
    std::process::exit(kneescope_cli::run(std::env::args_os()));
}
