fn main() {
    std::process::exit(wagetheft::cli::run(std::env::args_os()));
}
