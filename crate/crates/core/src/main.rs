fn main() {
    std::process::exit(harassnet::cli::main());
}
