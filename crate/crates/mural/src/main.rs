fn main() {
    std::process::exit(mural::cli::main_entry());
}
