fn main() {
    std::process::exit(wepkit::cli::dispatch(std::env::args_os()));
}
