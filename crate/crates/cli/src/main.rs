fn main() {
    std::process::exit(dqd_cli::run(std::env::args_os()));
}
