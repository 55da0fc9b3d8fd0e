fn main() {
    std::process::exit(cltfp::cli::run(std::env::args_os()));
}
