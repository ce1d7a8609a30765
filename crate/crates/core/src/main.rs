fn main() {
    std::process::exit(dynflow::cli::run(std::env::args_os()));
}
