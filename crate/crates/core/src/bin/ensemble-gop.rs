fn main() {
    std::process::exit(ensemble_gop::cli::run(std::env::args_os()));
}
