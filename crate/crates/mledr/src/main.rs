fn main() {
    std::process::exit(mledr::cli::main_exit_code());
}
