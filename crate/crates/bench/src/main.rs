fn main() {
    std::process::exit(snap_bench::cli::main_with_args(std::env::args_os()));
}
