fn main() {
    std::process::exit(holodfs::cli::run(std::env::args_os()));
}
