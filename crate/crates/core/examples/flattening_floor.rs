//! The row-wise reading of X's block display is its (kjil) flattening, whose
//! 4×4 matrix has rank 2. On that singular matrix f levels off near 0.04.
//! The unchecked constructor is needed because the search otherwise
//! requires a nonsingular unfolding.

use htr::certify::{minimize_with, LocalOptions, Method, Objective};
use htr::special::x_tensor;
use htr::{Field, ModePerm, QuadTensor};

fn main() -> htr::Result<()> {
    let perm = ModePerm::from_pattern("kjil")?;
    let t = x_tensor().to_tensor(Field::Real)?.reorder_modes(&perm)?;
    let q = QuadTensor::from_tensor(&t)?;
    let b = q.real_unfolding().expect("real");
    println!("rank of the (kjil) matrix: {}", b.rank(1e-12));
    let obj = Objective::from_unfolding(b);
    for method in [Method::NelderMead, Method::Bfgs] {
        let run = minimize_with(&obj, 300, 0, method, LocalOptions::default())?;
        println!("{method}: min f = {:.4}", run.best_value);
    }
    println!(
        "nonsingular reading rejected: {}",
        Objective::new(&q).is_err()
    );
    Ok(())
}
