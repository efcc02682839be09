fn main() {
    std::process::exit(frobtower::cli::main_with(std::env::args_os()));
}
