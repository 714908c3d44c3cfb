fn main() {
    std::process::exit(ncdft::cli::run(std::env::args_os()));
}
