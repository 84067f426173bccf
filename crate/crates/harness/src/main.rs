fn main() {
    std::process::exit(aclr_harness::cli_main(std::env::args_os()));
}
