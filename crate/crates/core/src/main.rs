fn main() {
    std::process::exit(qcost::cli::run(std::env::args_os()));
}
