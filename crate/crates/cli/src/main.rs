fn main() {
    std::process::exit(eraprobe_cli::run(std::env::args_os()));
}
