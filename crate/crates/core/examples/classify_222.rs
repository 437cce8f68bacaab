//! Exact rank of order-3 tensors over ℝ and ℂ, minimal decompositions, and
//! canonical forms of rank-3 tensors.

use htr::rank222::{canonicalize_rank3, classify, decompose222};
use htr::special::{e_r, e_s};
use htr::{rank_one, vec2, Field, SlicePair};

fn main() -> htr::Result<()> {
    let sum = rank_one(&[vec2(1.0, 2.0), vec2(0.0, 1.0), vec2(1.0, -1.0)])?.add(&rank_one(&[
        vec2(1.0, 0.0),
        vec2(3.0, 1.0),
        vec2(2.0, 2.0),
    ])?)?;
    let cases = [
        ("zero", SlicePair::zero()),
        ("(E;S)", e_s()),
        ("(E;R)", e_r()),
        ("two terms", SlicePair::from_tensor(&sum)?),
    ];
    for (name, t) in cases {
        for field in [Field::Real, Field::Complex] {
            let report = classify(&t, field);
            let dec = decompose222(&t, field);
            let res = dec.relative_residual(&t.to_tensor(field)?)?;
            println!(
                "{name:>9} over {field}: rank {}, {} terms, residual {res:.1e}",
                report.rank,
                dec.len()
            );
        }
    }
    let c = canonicalize_rank3(&e_r())?;
    println!(
        "(E;R) canonical form {:?}, residual {:.1e}",
        c.form, c.residual
    );
    Ok(())
}
