//! Writes every bundled generator to `<dir>/<name>.csv` (default `data/`).

use std::path::PathBuf;

use ect_core::data::{generate, write_csv, GENERATORS};

fn main() -> ect_core::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    for (name, _) in GENERATORS {
        let d = generate(name)?;
        let path = dir.join(format!("{name}.csv"));
        write_csv(&d, &path)?;
        println!("{} rows, k={} -> {}", d.len(), d.k(), path.display());
    }
    Ok(())
}
