fn main() {
    env_logger::init();
    std::process::exit(wfda::cli::run(std::env::args_os()));
}
