fn main() {
    println!("acg");
}
