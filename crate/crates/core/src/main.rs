fn main() {
    std::process::exit(w2s::cli::run(std::env::args_os()));
}
