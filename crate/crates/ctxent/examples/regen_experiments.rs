//! Regenerate the shipped experiment files from the built-in arrangements:
//!
//! ```text
//! cargo run -p ctxent --example regen_experiments
//! ```
//!
//! A test pins the files to this rendering, so edit the builtins and rerun
//! this rather than editing the files by hand.

use std::path::PathBuf;

use ctxent::dsl::render;
use ctxent::models::{builtin, BUILTIN_NAMES, DEFAULT_ALPHA};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    std::fs::create_dir_all(&dir)?;
    for name in BUILTIN_NAMES {
        let spec = builtin(name, DEFAULT_ALPHA).expect("listed names are built in");
        let path = dir.join(format!("{name}.exp"));
        std::fs::write(&path, render(&spec))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
