fn main() {
    std::process::exit(stencilbench_cli::main_with(std::env::args_os()));
}
