fn main() {
    std::process::exit(varorder::cli::run(std::env::args_os()));
}
