fn main() {
    std::process::exit(spin_order_cli::run(std::env::args_os()));
}
