pub fn main() { println!("cli pending"); }
