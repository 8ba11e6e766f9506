fn main() {
    std::process::exit(usrecon_cli::run(std::env::args_os()));
}
