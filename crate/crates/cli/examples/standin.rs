//! Writes a four-class stand-in dataset with 48 `x` and 100 `y` columns.
//!
//! Usage: cargo run -p cgc-cli --example standin -- OUT.csv [SEED]

use cgc::data::write_paired_csv;
use cgc::simgen::standin_dataset;
use cgc::RngStream;

fn main() -> cgc::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "standin.csv".into());
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let data = standin_dataset(&[212, 151, 97, 46], 48, 100, &mut RngStream::new(seed, 0))?;
    write_paired_csv(&data, &out)?;
    println!("wrote {} rows ({} x columns, {} y columns) to {out}", data.n(), data.p(), data.q());
    Ok(())
}
