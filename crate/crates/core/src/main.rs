fn main() {
    std::process::exit(elz::cli::run(std::env::args_os()));
}
