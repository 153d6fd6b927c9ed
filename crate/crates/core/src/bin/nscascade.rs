fn main() {
    std::process::exit(nscascade::cli::main_with_args(std::env::args_os()));
}
