fn main() {
    std::process::exit(relinfo_cli::run(std::env::args_os()));
}
