fn main() {
    std::process::exit(chapterfn_cli::run(std::env::args_os()));
}
