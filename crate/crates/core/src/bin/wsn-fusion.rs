fn main() {
    std::process::exit(wsn_fusion::harness::cli_main(std::env::args_os()));
}
