//! The six essential flattenings of X: adjacent-slice Δ signs and slice
//! ranks, also under a random real group action.

use htr::bound2222::slice_rank_profile;
use htr::pencil::delta_profile;
use htr::special::x_tensor;
use htr::{essential_flattenings, Field, GLAction, Mat2, QuadTensor};

fn main() -> htr::Result<()> {
    let x = x_tensor();
    for f in essential_flattenings() {
        let p = delta_profile(&x, &f.perm)?;
        println!(
            "{}: Δ = ({}, {}, {}, {})  all negative: {}",
            f.label,
            p.delta_ab.value.re,
            p.delta_cd.value.re,
            p.delta_ac.value.re,
            p.delta_bd.value.re,
            p.all_negative()
        );
    }
    let g = GLAction::new(vec![
        Mat2::real(1.0, 2.0, 0.0, 1.0),
        Mat2::real(3.0, 0.0, 1.0, 1.0),
        Mat2::real(1.0, 1.0, -1.0, 2.0),
        Mat2::real(0.0, 1.0, 1.0, 5.0),
    ])?;
    let moved = QuadTensor::from_tensor(&g.apply(&x.to_tensor(Field::Real)?)?)?;
    for row in slice_rank_profile(&moved)? {
        println!("g·X {}: slice ranks {:?}", row.label, row.ranks);
    }
    Ok(())
}
