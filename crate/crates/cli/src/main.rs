fn main() {
    std::process::exit(ampliclone_cli::run(std::env::args_os()));
}
