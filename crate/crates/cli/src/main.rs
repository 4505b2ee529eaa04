fn main() {
    std::process::exit(bubble_fts_cli::run(std::env::args_os()));
}
