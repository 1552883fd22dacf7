fn main() {
    std::process::exit(letz_forge::run(std::env::args_os()));
}
