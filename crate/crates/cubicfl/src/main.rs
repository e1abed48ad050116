fn main() { cubicfl::cli::main(); }
