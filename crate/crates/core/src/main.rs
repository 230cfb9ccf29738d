fn main() {
    std::process::exit(mphnet::cli::run_from(std::env::args_os()));
}
