fn main() {
    std::process::exit(stencilbench_cli::portlint_main(std::env::args_os()));
}
