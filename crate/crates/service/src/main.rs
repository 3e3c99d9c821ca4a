fn main() {
    std::process::exit(udrl_service::cli::run(std::env::args_os()));
}
