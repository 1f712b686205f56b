fn main() {
    std::process::exit(spider_hjb::cli::main_with_args(std::env::args_os()));
}
