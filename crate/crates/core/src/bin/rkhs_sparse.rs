fn main() {
    std::process::exit(rkhs_sparse::cli::run_cli());
}
