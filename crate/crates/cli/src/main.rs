fn main() {
    std::process::exit(imbal_cli::run(std::env::args_os()));
}
