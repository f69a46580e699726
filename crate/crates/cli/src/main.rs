fn main() {
    std::process::exit(exdiff::cli_main(std::env::args_os()));
}
