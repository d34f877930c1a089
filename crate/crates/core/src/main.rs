fn main() {
    std::process::exit(sector_spectra::cli::run(std::env::args_os()));
}
