fn main() {
    println!("fraclap: CLI not wired yet");
}
