fn main() {
    std::process::exit(spectrasketch::cli::main_with_args(std::env::args_os()));
}
