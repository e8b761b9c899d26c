fn main() {
    std::process::exit(radiomatch::harness::run_cli(std::env::args_os()));
}
