fn main() {
    std::process::exit(lame_forge::cli::run(std::env::args_os()));
}
