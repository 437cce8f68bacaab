use serde::Serialize;

use super::minimize::{minimize_with, LocalOptions, Method, MinimizeResult};
use super::objective::{recovered_factors, CertificateParams, Objective};
use crate::decomposition::{Decomposition, DecompositionFile};
use crate::error::Result;
use crate::field::Field;
use crate::io::TensorFile;
use crate::mat2::vec2;
use crate::tensor::QuadTensor;

/// Below this relative residual an extracted decomposition is accepted.
pub const CERTIFICATE_REL_TOL: f64 = 1e-6;
/// A best value at or above this counts as bounded away from zero.
pub const DEFAULT_FLOOR: f64 = 1e-3;
/// Fewer restarts never yield a `rank5-candidate` conclusion.
pub const DEFAULT_MIN_RESTARTS: usize = 100;

pub const EVIDENCE_NOTE: &str = "rank5-candidate is evidence, not proof: a multistart search that \
never drives f below the floor does not show that no real 4-term decomposition exists";

/// Outcome of turning a parameter point into four rank-one terms.
#[derive(Debug, Clone)]
pub enum Extraction {
    Certified {
        decomposition: Decomposition,
        residual: f64,
    },
    Refused {
        residual: f64,
    },
}

impl Extraction {
    pub fn residual(&self) -> f64 {
        match self {
            Extraction::Certified { residual, .. } | Extraction::Refused { residual } => *residual,
        }
    }

    pub fn decomposition(&self) -> Option<&Decomposition> {
        match self {
            Extraction::Certified { decomposition, .. } => Some(decomposition),
            Extraction::Refused { .. } => None,
        }
    }
}

/// Projects each recovered `A_k` onto its nearest rank-one matrix `u vᵀ` and
/// emits `u ⊗ v ⊗ c_k ⊗ d_k`; accepted when the relative residual is at most
/// `rel_tol`.
pub fn extract_certificate(
    t: &QuadTensor,
    p: &CertificateParams,
    rel_tol: f64,
) -> Result<Extraction> {
    let factors = recovered_factors(t, p)?;
    let tensor = t.to_tensor_inferred();
    let mut dec = Decomposition::empty(4);
    for k in 0..4 {
        let Some((u, v)) = factors.factor(k).rank_one_factors() else {
            continue;
        };
        let [c1, c2] = p.c_vector(k);
        let [d1, d2] = p.d_vector(k);
        dec.push_vectors(vec![u, v, vec2(c1, c2), vec2(d1, d2)])?;
    }
    let residual = dec.relative_residual(&tensor)?;
    Ok(if residual <= rel_tol {
        Extraction::Certified {
            decomposition: dec,
            residual,
        }
    } else {
        Extraction::Refused { residual }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    #[serde(rename = "rank4-certified")]
    Rank4Certified,
    #[serde(rename = "rank5-candidate")]
    Rank5Candidate,
    Inconclusive,
}

impl Conclusion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Conclusion::Rank4Certified => "rank4-certified",
            Conclusion::Rank5Candidate => "rank5-candidate",
            Conclusion::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TypicalityConfig {
    pub restarts: usize,
    pub seed: u64,
    pub method: Method,
    pub floor: f64,
    pub min_restarts: usize,
    pub certificate_tol: f64,
    pub local: LocalOptions,
}

impl Default for TypicalityConfig {
    fn default() -> Self {
        TypicalityConfig {
            restarts: DEFAULT_MIN_RESTARTS,
            seed: 0,
            method: Method::NelderMead,
            floor: DEFAULT_FLOOR,
            min_restarts: DEFAULT_MIN_RESTARTS,
            certificate_tol: CERTIFICATE_REL_TOL,
            local: LocalOptions::default(),
        }
    }
}

/// Local minima rounded to four decimals, with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub value: f64,
    pub count: usize,
}

pub fn minima_histogram(values: &[f64]) -> Vec<HistogramBin> {
    let mut keys: Vec<i64> = values
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v * 1e4).round() as i64)
        .collect();
    keys.sort_unstable();
    let mut bins: Vec<HistogramBin> = Vec::new();
    for k in keys {
        let value = k as f64 / 1e4;
        match bins.last_mut() {
            Some(b) if b.value == value => b.count += 1,
            _ => bins.push(HistogramBin { value, count: 1 }),
        }
    }
    bins
}

#[derive(Debug, Clone, Serialize)]
pub struct EvidenceReport {
    pub tensor: TensorFile,
    pub seed: u64,
    pub restarts: usize,
    pub method: Method,
    pub min_f: f64,
    pub best_restart: usize,
    pub conclusion: Conclusion,
    /// Relative residual of the extracted 4-term decomposition.
    pub residual: f64,
    pub local_minima_histogram: Vec<HistogramBin>,
    pub floor: f64,
    pub min_restarts: usize,
    pub best_params: CertificateParams,
    pub decomposition: Option<DecompositionFile>,
    pub note: &'static str,
}

/// Certified beats everything; a rank-5 candidate needs the floor held over
/// at least `min_restarts` restarts.
pub fn conclude(certified: bool, best_value: f64, cfg: &TypicalityConfig) -> Conclusion {
    if certified {
        Conclusion::Rank4Certified
    } else if best_value >= cfg.floor && cfg.restarts >= cfg.min_restarts {
        Conclusion::Rank5Candidate
    } else {
        Conclusion::Inconclusive
    }
}

pub fn typicality_report(t: &QuadTensor, cfg: &TypicalityConfig) -> Result<EvidenceReport> {
    let obj = Objective::new(t)?;
    let run = minimize_with(&obj, cfg.restarts, cfg.seed, cfg.method, cfg.local)?;
    report_from_run(t, cfg, &run)
}

pub fn report_from_run(
    t: &QuadTensor,
    cfg: &TypicalityConfig,
    run: &MinimizeResult,
) -> Result<EvidenceReport> {
    let extraction = if run.best_value.is_finite() {
        extract_certificate(t, &run.best_params, cfg.certificate_tol)?
    } else {
        Extraction::Refused {
            residual: f64::INFINITY,
        }
    };
    let conclusion = conclude(extraction.decomposition().is_some(), run.best_value, cfg);
    let values: Vec<f64> = run.minima.iter().map(|m| m.value).collect();
    Ok(EvidenceReport {
        tensor: TensorFile::from(&t.to_tensor(Field::Real)?),
        seed: cfg.seed,
        restarts: cfg.restarts,
        method: cfg.method,
        min_f: run.best_value,
        best_restart: run.best_restart,
        conclusion,
        residual: extraction.residual(),
        local_minima_histogram: minima_histogram(&values),
        floor: cfg.floor,
        min_restarts: cfg.min_restarts,
        best_params: run.best_params,
        decomposition: extraction.decomposition().map(DecompositionFile::from),
        note: EVIDENCE_NOTE,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::certify::{minimize_with, synthetic_rank4};
    use crate::special::x_tensor;
    use crate::tensor::ModePerm;

    #[test]
    fn synthetic_ground_truth_extracts() {
        let mut rng = crate::Rng::seed_from_u64(4);
        let (q, p) = synthetic_rank4(&mut rng, 0.1);
        let e = extract_certificate(&q, &p, CERTIFICATE_REL_TOL).unwrap();
        let d = e.decomposition().expect("certified");
        assert_eq!(d.len(), 4);
        assert!(e.residual() < 1e-10);
    }

    #[test]
    fn synthetic_report_is_certified() {
        let mut rng = crate::Rng::seed_from_u64(9);
        let (q, _) = synthetic_rank4(&mut rng, 0.1);
        let cfg = TypicalityConfig {
            restarts: 20,
            ..Default::default()
        };
        let r = typicality_report(&q, &cfg).unwrap();
        assert_eq!(r.conclusion, Conclusion::Rank4Certified);
        assert!(r.min_f <= 1e-10);
        assert!(r.residual <= 1e-6);
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "tensor",
            "seed",
            "restarts",
            "min_f",
            "conclusion",
            "residual",
            "local_minima_histogram",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["conclusion"], "rank4-certified");
        assert!(json["note"]
            .as_str()
            .unwrap()
            .contains("evidence, not proof"));
    }

    #[test]
    fn x_is_certified() {
        let cfg = TypicalityConfig {
            restarts: 20,
            ..Default::default()
        };
        let r = typicality_report(&x_tensor(), &cfg).unwrap();
        assert_eq!(r.conclusion, Conclusion::Rank4Certified);
        assert_eq!(r.decomposition.unwrap().terms.len(), 4);
    }

    #[test]
    fn starved_run_is_inconclusive() {
        let mut local = LocalOptions::default();
        local.max_evals = 2;
        local.warm_start = false;
        let cfg = TypicalityConfig {
            restarts: 1,
            local,
            ..Default::default()
        };
        let r = typicality_report(&x_tensor(), &cfg).unwrap();
        assert_eq!(r.conclusion, Conclusion::Inconclusive);
    }

    #[test]
    fn conclusion_rules() {
        let cfg = TypicalityConfig::default();
        assert_eq!(conclude(true, 0.5, &cfg), Conclusion::Rank4Certified);
        assert_eq!(conclude(false, 0.04, &cfg), Conclusion::Rank5Candidate);
        assert_eq!(conclude(false, 1e-4, &cfg), Conclusion::Inconclusive);
        let few = TypicalityConfig {
            restarts: 10,
            ..cfg
        };
        assert_eq!(conclude(false, 0.04, &few), Conclusion::Inconclusive);
    }

    #[test]
    fn singular_flattening_refuses() {
        // the (kjil) reading of X has a rank-2 unfolding and f stays near 0.04
        let perm = ModePerm::from_pattern("kjil").unwrap();
        let t = x_tensor()
            .to_tensor(Field::Real)
            .unwrap()
            .reorder_modes(&perm)
            .unwrap();
        let q = QuadTensor::from_tensor(&t).unwrap();
        assert!(Objective::new(&q).is_err());
        let obj = Objective::from_unfolding(q.real_unfolding().unwrap());
        let run = minimize_with(&obj, 30, 1, Method::NelderMead, LocalOptions::default()).unwrap();
        assert!(run.best_value > 0.01, "{}", run.best_value);
        let e = extract_certificate(&q, &run.best_params, CERTIFICATE_REL_TOL).unwrap();
        assert!(e.decomposition().is_none());
        assert!(e.residual() > 1e-3);
    }

    #[test]
    fn histogram_groups_by_rounding() {
        let h = minima_histogram(&[0.04, 0.040_01, 0.1, f64::INFINITY, 1e-30]);
        assert_eq!(
            h,
            vec![
                HistogramBin {
                    value: 0.0,
                    count: 1
                },
                HistogramBin {
                    value: 0.04,
                    count: 2
                },
                HistogramBin {
                    value: 0.1,
                    count: 1
                },
            ]
        );
    }
}
