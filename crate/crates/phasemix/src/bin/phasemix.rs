fn main() {
    std::process::exit(phasemix::cli::main_from_args());
}
