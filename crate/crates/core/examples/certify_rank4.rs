//! Multistart search for a real 4-term certificate: a synthetic rank-4
//! tensor, the fixed tensor X, and a couple of Gaussian samples.

use htr::certify::{synthetic_rank4, typicality_report, Method, TypicalityConfig};
use htr::cli::gaussian_sample;
use htr::special::x_tensor;
use htr::QuadTensor;
use rand::SeedableRng;

fn report(name: &str, q: &QuadTensor, cfg: &TypicalityConfig) -> htr::Result<()> {
    let r = typicality_report(q, cfg)?;
    let inside: usize = r
        .local_minima_histogram
        .iter()
        .filter(|b| b.value == 0.0)
        .map(|b| b.count)
        .sum();
    println!(
        "{name}: min f {:.2e}, {} (residual {:.1e}), {inside}/{} restarts near 0",
        r.min_f,
        r.conclusion.as_str(),
        r.residual,
        r.restarts
    );
    Ok(())
}

fn main() -> htr::Result<()> {
    let cfg = TypicalityConfig {
        restarts: 200,
        seed: 1,
        method: Method::Bfgs,
        ..Default::default()
    };
    let (q, _) = synthetic_rank4(&mut htr::Rng::seed_from_u64(3), 0.1);
    report("synthetic", &q, &cfg)?;
    report("X", &x_tensor(), &cfg)?;
    for i in 0..2 {
        let q = QuadTensor::from_tensor(&gaussian_sample(4, htr::Field::Real, 11, i))?;
        report(&format!("gaussian {i}"), &q, &cfg)?;
    }
    Ok(())
}
