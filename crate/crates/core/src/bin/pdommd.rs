fn main() {
    std::process::exit(pdommd::cli::main_from_env());
}
