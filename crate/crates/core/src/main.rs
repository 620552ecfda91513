fn main() {
    std::process::exit(radcube::cli::run(std::env::args_os()));
}
