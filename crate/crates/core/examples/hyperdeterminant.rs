//! Δ, Θ and nonsingularity for the named order-3 tensors, plus the
//! transformation law Δ(g·T) = det(P)² det(Q)² det(R)² Δ(T).

use htr::pencil::{delta, is_nonsingular_pair, theta};
use htr::special::{e_r, e_s};
use htr::{Field, GLAction, Mat2, SlicePair};

fn show(name: &str, t: &SlicePair) {
    let d = delta(&t.a, &t.b);
    println!(
        "{name}: Δ = {} ({:?}), Θ = {}, nonsingular over ℝ: {}",
        d.value.re,
        d.sign,
        theta(&t.a, &t.b).re,
        is_nonsingular_pair(&t.a, &t.b, Field::Real)
    );
}

fn main() -> htr::Result<()> {
    show("(E;S)", &e_s());
    show("(E;R)", &e_r());

    let (p, q, r) = (
        Mat2::real(2.0, 1.0, 0.0, 1.0),
        Mat2::real(1.0, 0.0, 3.0, 1.0),
        Mat2::real(0.0, 1.0, 1.0, 1.0),
    );
    let g = GLAction::new(vec![p, q, r])?;
    let moved = SlicePair::from_tensor(&g.apply(&e_r().to_tensor(Field::Real)?)?)?;
    let predicted = delta(&e_r().a, &e_r().b).value * (p.det() * q.det() * r.det()).powi(2);
    println!(
        "after g: Δ = {}, predicted {}",
        delta(&moved.a, &moved.b).value.re,
        predicted.re
    );
    Ok(())
}
