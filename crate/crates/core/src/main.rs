fn main() {
    std::process::exit(infokernel::cli::main());
}
