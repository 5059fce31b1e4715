fn main() {
    std::process::exit(soclab::cli::main());
}
