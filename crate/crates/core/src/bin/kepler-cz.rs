fn main() {
    std::process::exit(kepler_cz::cli::main_with_args(std::env::args_os()));
}
