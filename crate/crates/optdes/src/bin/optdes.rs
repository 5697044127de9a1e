fn main() {
    std::process::exit(optdes::cli::run(std::env::args_os()));
}
