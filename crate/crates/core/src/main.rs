fn main() {
    std::process::exit(aggregative::cli::main());
}
