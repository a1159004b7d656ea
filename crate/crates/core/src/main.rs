fn main() {
    std::process::exit(vpbounds::cli::run(std::env::args_os()));
}
