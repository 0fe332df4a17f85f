fn main() {
    std::process::exit(dpdp::cli::main());
}
