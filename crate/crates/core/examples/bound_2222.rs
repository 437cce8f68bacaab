//! Constructive bounds for order-4 tensors: at most 5 real or 4 complex
//! terms, with a census of the constructions used on Gaussian samples.

use std::collections::BTreeMap;

use htr::bound2222::bound_tensor;
use htr::cli::gaussian_sample;
use htr::Field;

fn main() -> htr::Result<()> {
    for field in [Field::Real, Field::Complex] {
        let mut branches = BTreeMap::<&str, usize>::new();
        let mut terms = BTreeMap::<usize, usize>::new();
        let mut worst: f64 = 0.0;
        for i in 0..500 {
            let t = gaussian_sample(4, field, 7, i);
            let b = bound_tensor(&t, field, 0)?;
            *branches.entry(b.branch.as_str()).or_default() += 1;
            *terms.entry(b.decomposition.len()).or_default() += 1;
            worst = worst.max(b.decomposition.relative_residual(&t)?);
        }
        println!(
            "{field}: terms {terms:?}, constructions {branches:?}, worst residual {worst:.1e}"
        );
    }
    Ok(())
}
