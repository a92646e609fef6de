fn main() {
    std::process::exit(parawin::cli::main());
}
