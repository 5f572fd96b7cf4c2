//! Orbit statistics of `lambda + S` on a finite truncation.
//!
//! This is HEURISTIC EVIDENCE only. No finite-dimensional operator is
//! hypercyclic, so nothing here has pass/fail semantics.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::NormMode;
use crate::operator::{truncate, OperatorExpr};
use crate::scalar::{Float, Scalar};
use crate::vector::SparseVector;

pub const HEURISTIC_LABEL: &str = "HEURISTIC EVIDENCE";

#[derive(Clone, Debug)]
pub struct OrbitTarget {
    pub center: SparseVector<Float>,
    pub radius: f64,
}

#[derive(Clone, Debug)]
pub struct OrbitConfig {
    /// Truncation dimension `D`.
    pub dimension: usize,
    /// Iteration cap `N`.
    pub iterations: usize,
    /// Distances are measured after projecting onto coordinates
    /// `1..=window`.
    pub window: usize,
    /// The run stops, without failing, once the orbit norm exceeds this.
    pub overflow_cap: f64,
    pub norm: NormMode,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            dimension: 64,
            iterations: 5000,
            window: 8,
            overflow_cap: 1e100,
            norm: NormMode::L2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSample {
    pub iteration: usize,
    pub norm: f64,
    /// Projected distance to each target.
    pub distances: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitReport {
    pub label: &'static str,
    pub dimension: usize,
    pub iterations_run: usize,
    pub leaked: bool,
    /// First iteration whose projected distance is within the radius.
    pub first_hits: Vec<Option<usize>>,
    pub overflow_at: Option<usize>,
    pub samples: Vec<OrbitSample>,
}

impl OrbitReport {
    /// `iteration,norm,target_id,distance`, one line per iteration and
    /// target.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,norm,target_id,distance\n");
        for s in &self.samples {
            for (t, d) in s.distances.iter().enumerate() {
                let _ = writeln!(out, "{},{:e},{},{:e}", s.iteration, s.norm, t, d);
            }
        }
        out
    }
}

/// Iterates `v <- lambda v + S_D v` from `seed` on the `D`-truncation of
/// `op`, in float arithmetic.
pub fn orbit_visit_evidence<S: Scalar>(
    op: &OperatorExpr<S>,
    lambda: Float,
    seed: &SparseVector<S>,
    targets: &[OrbitTarget],
    config: &OrbitConfig,
) -> Result<OrbitReport> {
    if (lambda.norm_sqr() - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnimodular);
    }
    let d = config.dimension;
    let view = truncate(&op.convert::<Float>(), d)?;
    let mut v: Vec<Float> = (1..=d as i64)
        .map(|c| seed.coordinate(c).to_complex64())
        .collect();
    let window = config.window.min(d);
    let centers: Vec<Vec<Float>> = targets
        .iter()
        .map(|t| {
            (1..=window as i64)
                .map(|c| t.center.coordinate(c))
                .collect()
        })
        .collect();

    let mut first_hits = vec![None; targets.len()];
    let mut samples = Vec::with_capacity(config.iterations);
    let mut overflow_at = None;
    for n in 1..=config.iterations {
        let image = view.matrix.mul_vec(&v);
        v = v.iter().zip(image).map(|(x, y)| lambda * x + y).collect();
        let norm = float_norm(&v, config.norm);
        let distances: Vec<f64> = centers
            .iter()
            .map(|c| {
                let diff: Vec<Float> = c.iter().zip(&v).map(|(a, b)| b - a).collect();
                float_norm(&diff, config.norm)
            })
            .collect();
        for (t, dist) in distances.iter().enumerate() {
            if first_hits[t].is_none() && *dist <= targets[t].radius {
                first_hits[t] = Some(n);
            }
        }
        samples.push(OrbitSample {
            iteration: n,
            norm,
            distances,
        });
        if !norm.is_finite() || norm > config.overflow_cap {
            overflow_at = Some(n);
            break;
        }
    }
    Ok(OrbitReport {
        label: HEURISTIC_LABEL,
        dimension: d,
        iterations_run: samples.len(),
        leaked: view.leaked,
        first_hits,
        overflow_at,
        samples,
    })
}

fn float_norm(v: &[Float], p: NormMode) -> f64 {
    let abs = v.iter().map(|x| x.norm());
    match p {
        NormMode::L1 => abs.sum(),
        NormMode::L2 => abs.map(|a| a * a).sum::<f64>().sqrt(),
        NormMode::LInf => abs.fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::scalar::Exact;

    fn config(dimension: usize, iterations: usize) -> OrbitConfig {
        OrbitConfig {
            dimension,
            iterations,
            window: dimension,
            ..OrbitConfig::default()
        }
    }

    #[test]
    fn zero_operator_orbit_is_constant() {
        let seed = &SparseVector::<Exact>::basis(1) + &SparseVector::basis(2);
        let target = OrbitTarget {
            center: seed.convert(),
            radius: 0.1,
        };
        let report = orbit_visit_evidence(
            &OperatorExpr::<Exact>::zero(),
            Float::new(1.0, 0.0),
            &seed,
            &[target],
            &config(4, 3),
        )
        .unwrap();
        assert_eq!(report.first_hits, vec![Some(1)]);
        assert_eq!(report.label, HEURISTIC_LABEL);
    }

    #[test]
    fn nilpotent_orbit_is_binomial() {
        let j = OperatorExpr::dense_block(
            1,
            DenseMatrix::from_fn(3, 3, |i, k| {
                if i == k + 1 {
                    Exact::from_int(1)
                } else {
                    Exact::from_int(0)
                }
            }),
        );
        let report = orbit_visit_evidence(
            &j,
            Float::new(1.0, 0.0),
            &SparseVector::basis(1),
            &[],
            &OrbitConfig {
                norm: NormMode::L1,
                ..config(3, 10)
            },
        )
        .unwrap();
        // (1 + J)^n e_1 = e_1 + n e_2 + C(n,2) e_3
        for s in &report.samples {
            let n = s.iteration as f64;
            assert_eq!(s.norm, 1.0 + n + n * (n - 1.0) / 2.0);
        }
        let csv = report.to_csv();
        assert!(csv.starts_with("iteration,norm,target_id,distance\n"));
    }

    #[test]
    fn lambda_must_be_unimodular() {
        let r = orbit_visit_evidence(
            &OperatorExpr::<Exact>::zero(),
            Float::new(0.5, 0.0),
            &SparseVector::basis(1),
            &[],
            &config(2, 2),
        );
        assert_eq!(r.unwrap_err(), Error::NotUnimodular);
    }

    #[test]
    fn overflow_is_reported() {
        let s = OperatorExpr::weighted_shift(
            crate::operator::Direction::Forward,
            crate::operator::WeightSequence::constant(Exact::from_int(1000)),
        );
        let report = orbit_visit_evidence(
            &s,
            Float::new(1.0, 0.0),
            &SparseVector::basis(1),
            &[],
            &OrbitConfig {
                overflow_cap: 1e6,
                ..config(10, 100)
            },
        )
        .unwrap();
        assert!(report.overflow_at.is_some());
        assert!(report.iterations_run < 100);
    }
}
