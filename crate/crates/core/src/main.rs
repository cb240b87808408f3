fn main() {
    std::process::exit(fdr_ofdm::harness::cli::run(std::env::args_os()));
}
