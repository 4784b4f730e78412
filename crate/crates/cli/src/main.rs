fn main() {
    std::process::exit(mpmsa_cli::run(std::env::args_os()));
}
