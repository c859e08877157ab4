fn main() {
    std::process::exit(privfilter::cli::run(std::env::args_os()));
}
