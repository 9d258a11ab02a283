fn main() {
    std::process::exit(modelcert::cli::run(std::env::args_os()));
}
