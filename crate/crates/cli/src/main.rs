fn main() {
    std::process::exit(circreg_cli::dispatch(std::env::args_os()));
}
