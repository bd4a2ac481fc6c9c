fn main() {
    std::process::exit(attn_ed::cli::main_with_args(std::env::args_os()));
}
