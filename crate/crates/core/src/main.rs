fn main() {
    std::process::exit(persuasion::cli::run(std::env::args_os()));
}
