fn main() {
    std::process::exit(nls_spectral_cli::run(std::env::args_os()));
}
