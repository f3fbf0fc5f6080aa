fn main() {
    std::process::exit(cloudmorph_cli::run(std::env::args_os()));
}
