fn main() {
    std::process::exit(bellman_error::cli::main());
}
