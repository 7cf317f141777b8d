fn main() {
    std::process::exit(scg::cli::run(std::env::args_os()));
}
