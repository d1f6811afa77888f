fn main() {
    std::process::exit(pcselect::cli::run(std::env::args_os()));
}
