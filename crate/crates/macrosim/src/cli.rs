//! Command-line interface: single runs, Monte Carlo batches, analysis,
//! and network stress scoring.

/// Entry point invoked by the binary.
pub fn main() {
    unimplemented!("command-line interface")
}
