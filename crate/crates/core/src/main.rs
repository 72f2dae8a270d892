fn main() {
    std::process::exit(gmvae_core::cli::run(std::env::args_os()));
}
