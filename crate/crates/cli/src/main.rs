fn main() {
    std::process::exit(sieve_lab::run(std::env::args()));
}
