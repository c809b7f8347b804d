fn main() {
    std::process::exit(aklt_mite_cli::run(std::env::args_os()));
}
