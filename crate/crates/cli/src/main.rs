fn main() {
    std::process::exit(bgrowth_cli::cli_main(std::env::args_os()));
}
