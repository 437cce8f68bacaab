//! Orders 5 and 6: the stabilized construction (≤ 2^(k−2) + 1 real terms)
//! against mode grouping.

use htr::cli::gaussian_sample;
use htr::higher::{decompose_higher, mode_group_bound, order4_inner, rank222_inner};
use htr::Field;

fn main() -> htr::Result<()> {
    for k in [4, 5, 6] {
        let t = gaussian_sample(k, Field::Real, 5, 0);
        let s = decompose_higher(&t, Field::Real)?;
        let g3 = mode_group_bound(&t, 3, &rank222_inner(Field::Real))?;
        println!(
            "k = {k}: stabilized {} terms (bound {}, residual {:.1e}); grouped by 3: {} (bound {})",
            s.decomposition.len(),
            s.bound,
            s.residual,
            g3.decomposition.len(),
            g3.bound
        );
    }
    let c = gaussian_sample(5, Field::Complex, 5, 1);
    let g = mode_group_bound(&c, 4, &order4_inner(Field::Complex, 0))?;
    println!(
        "complex k = 5, grouped by 4: {} terms (bound {})",
        g.decomposition.len(),
        g.bound
    );
    Ok(())
}
