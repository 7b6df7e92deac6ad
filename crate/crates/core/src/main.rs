fn main() {
    std::process::exit(amrfact_core::cli::run(std::env::args_os()));
}
