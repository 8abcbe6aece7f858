fn main() {
    std::process::exit(torus_scatterer::cli::run(std::env::args_os()));
}
