fn main() {
    std::process::exit(annulus_nls::cli::parse_and_dispatch(std::env::args_os()));
}
