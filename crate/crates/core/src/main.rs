fn main() {
    std::process::exit(trng_extract::cli::run(std::env::args_os()));
}
