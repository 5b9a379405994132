fn main() {
    std::process::exit(twostep::harness::cli::cli_main(std::env::args_os()));
}
