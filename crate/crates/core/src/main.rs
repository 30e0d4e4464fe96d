fn main() {
    std::process::exit(wavedetect::cli::run(std::env::args_os()));
}
