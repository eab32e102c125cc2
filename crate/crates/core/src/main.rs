fn main() {
    std::process::exit(lacuna::cli::run(std::env::args_os()));
}
