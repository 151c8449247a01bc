fn main() {
    std::process::exit(memcode::cli::main());
}
