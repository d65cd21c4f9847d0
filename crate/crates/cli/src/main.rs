fn main() {
    std::process::exit(clique_lab::cli_main(std::env::args().collect()));
}
