//! Writes the synthetic series used by the `c08_*` example configs.
//!
//! ```text
//! cargo run --release --example periodic_series -- crates/core/examples/configs/data
//! ```

use std::io::Write;

use ensemblab::ensemble_builder::{homogeneous_series, two_regime_series, LongSeries};

fn write(series: &LongSeries, path: &std::path::Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "timestamp,value")?;
    for (t, v) in series.timestamps.iter().zip(&series.values) {
        writeln!(f, "{t},{v:.17e}")?;
    }
    f.flush()
}

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let dir = std::path::Path::new(&dir);
    std::fs::create_dir_all(dir)?;
    write(&two_regime_series(50, 288, 4.0, 8), &dir.join("two_regime.csv"))?;
    write(&homogeneous_series(50, 288, 8), &dir.join("homogeneous.csv"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
