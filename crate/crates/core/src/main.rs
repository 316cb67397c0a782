fn main() {
    std::process::exit(unistoq::cli::run(std::env::args_os()));
}
