fn main() {
    std::process::exit(ppos_tool::run(std::env::args_os()));
}
