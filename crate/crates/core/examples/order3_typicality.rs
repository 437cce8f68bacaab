//! Frequencies of real rank 2 and 3 among Gaussian order-3 tensors.

use htr::cli::gaussian_sample;
use htr::rank222::classify;
use htr::{Field, SlicePair};

fn main() -> htr::Result<()> {
    let n = 100_000;
    let mut counts = [0usize; 4];
    for i in 0..n {
        let t = SlicePair::from_tensor(&gaussian_sample(3, Field::Real, 0, i))?;
        counts[classify(&t, Field::Real).rank as usize] += 1;
    }
    for (r, c) in counts.iter().enumerate().skip(2) {
        println!("rank {r}: {:.4}", *c as f64 / n as f64);
    }
    Ok(())
}
