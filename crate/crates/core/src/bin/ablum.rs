fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(ablum::experiment::cli::cli_entry(&args));
}
