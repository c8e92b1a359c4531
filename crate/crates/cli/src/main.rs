fn main() {
    std::process::exit(skillplan_cli::main_with(std::env::args_os()));
}
