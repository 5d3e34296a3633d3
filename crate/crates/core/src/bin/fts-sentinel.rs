fn main() {
    std::process::exit(fts_sentinel::cli::run(std::env::args_os()));
}
