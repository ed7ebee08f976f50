fn main() {
    std::process::exit(residual_solve::cli::run(std::env::args_os()));
}
