fn main() {
    macrosim::cli::main()
}
