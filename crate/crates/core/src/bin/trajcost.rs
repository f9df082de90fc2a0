fn main() {
    std::process::exit(trajcost::cli::main_from_env());
}
