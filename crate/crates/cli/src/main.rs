fn main() {
    std::process::exit(geofem::commands::main_with_args(std::env::args_os()));
}
