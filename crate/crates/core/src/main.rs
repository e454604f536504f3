fn main() {
    std::process::exit(salience_match::cli::main_with_args(std::env::args()));
}
