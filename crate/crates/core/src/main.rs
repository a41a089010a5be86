fn main() {
    std::process::exit(geodpm::cli::run(std::env::args_os()));
}
