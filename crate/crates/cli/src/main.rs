fn main() {
    std::process::exit(agv_path_kit_cli::run(std::env::args_os()));
}
