fn main() {
    std::process::exit(simo_rff::harness::cli::main_with(std::env::args_os()));
}
