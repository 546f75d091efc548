//! Regenerates the checked-in fixture tree from the in-code constructors:
//!
//! ```text
//! cargo run -p tradewind-core --example generate_fixtures [DIR]
//! ```
//!
//! A unit test compares the tree against these generators, so edits to the
//! fixtures must go through `src/fixtures.rs` and a rerun of this example.

use std::path::PathBuf;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures"));
    tradewind_core::fixtures::write_all(&dir).expect("fixture tree written");
    println!("fixtures written to {}", dir.display());
}
