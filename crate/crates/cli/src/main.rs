fn main() {
    std::process::exit(ctxed_cli::run(std::env::args_os()));
}
