fn main() {
    std::process::exit(rectiflow::cli::main_entry(std::env::args()));
}
