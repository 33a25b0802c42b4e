use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{LabelAssignment, Population};

/// Largest hypothesis list any enumeration may produce.
pub const ENUMERATION_CAP: usize = 1 << 20;

/// Largest population for which all dichotomies are enumerated.
pub const MAX_DICHOTOMY_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HypothesisClassSpec {
    /// Every map X → {0, .., k-1}.
    AllDichotomies,
    /// Binary thresholds over a scalar feature: points ranked below the cut
    /// get 0, the rest 1. With `flips`, the label-swapped maps are added.
    Thresholds1d { feature: Vec<f64>, flips: bool },
    /// Every map from view-2 values to classes, lifted to points.
    View2Measurable { view2_of: Vec<usize>, view2_size: usize },
    ExplicitList { hypotheses: Vec<Vec<usize>> },
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let requested = (base as f64).powi(exp as i32);
    match base.checked_pow(exp as u32) {
        Some(n) if n <= ENUMERATION_CAP => Ok(n),
        _ => Err(Error::EnumerationBound {
            requested,
            cap: ENUMERATION_CAP,
        }),
    }
}

/// Digit `pos` of `code` written in base `k`.
fn digit(code: usize, pos: usize, k: usize) -> usize {
    (code / k.pow(pos as u32)) % k
}

pub fn enumerate_hypotheses(spec: &HypothesisClassSpec, pop: &Population) -> Result<Vec<LabelAssignment>> {
    let n = pop.len();
    let k = pop.num_classes();
    match spec {
        HypothesisClassSpec::AllDichotomies => {
            if n > MAX_DICHOTOMY_POINTS {
                return Err(Error::EnumerationBound {
                    requested: (k as f64).powi(n as i32),
                    cap: ENUMERATION_CAP,
                });
            }
            let count = checked_pow(k, n)?;
            Ok((0..count)
                .map(|code| LabelAssignment::from_vec((0..n).map(|x| digit(code, x, k)).collect()))
                .collect())
        }
        HypothesisClassSpec::Thresholds1d { feature, flips } => {
            if k != 2 {
                return Err(Error::Unsupported("threshold classes are binary".into()));
            }
            if feature.len() != n {
                return Err(Error::AssignmentSize {
                    expected: n,
                    got: feature.len(),
                });
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| feature[a].total_cmp(&feature[b]));
            let mut rank = vec![0; n];
            for (r, &x) in order.iter().enumerate() {
                rank[x] = r;
            }
            let mut out: Vec<LabelAssignment> = (0..=n)
                .map(|cut| LabelAssignment::from_vec(rank.iter().map(|&r| usize::from(r >= cut)).collect()))
                .collect();
            if *flips {
                let flipped: Vec<_> = out
                    .iter()
                    .map(|h| LabelAssignment::from_vec(h.labels().iter().map(|&l| 1 - l).collect()))
                    .collect();
                out.extend(flipped);
            }
            Ok(out)
        }
        HypothesisClassSpec::View2Measurable { view2_of, view2_size } => {
            if view2_of.len() != n {
                return Err(Error::AssignmentSize {
                    expected: n,
                    got: view2_of.len(),
                });
            }
            if let Some(&v) = view2_of.iter().find(|&&v| v >= *view2_size) {
                return Err(Error::Unsupported(format!("view-2 value {v} out of range")));
            }
            let count = checked_pow(k, *view2_size)?;
            Ok((0..count)
                .map(|code| LabelAssignment::from_vec(view2_of.iter().map(|&v| digit(code, v, k)).collect()))
                .collect())
        }
        HypothesisClassSpec::ExplicitList { hypotheses } => {
            if hypotheses.len() > ENUMERATION_CAP {
                return Err(Error::EnumerationBound {
                    requested: hypotheses.len() as f64,
                    cap: ENUMERATION_CAP,
                });
            }
            hypotheses
                .iter()
                .map(|h| LabelAssignment::new(pop, h.clone()))
                .collect()
        }
    }
}

fn argmin_by(hypotheses: &[LabelAssignment], loss: impl Fn(&LabelAssignment) -> f64) -> Result<usize> {
    if hypotheses.is_empty() {
        return Err(Error::Unsupported("ERM needs at least one hypothesis".into()));
    }
    let mut best = (0, f64::INFINITY);
    for (i, h) in hypotheses.iter().enumerate() {
        let l = loss(h);
        // Strict comparison keeps the lowest index among co-minimizers.
        if l < best.1 {
            best = (i, l);
        }
    }
    Ok(best.0)
}

/// Index of the hypothesis with fewest disagreements on a sample of
/// (point index, weak label) pairs. Ties go to the lowest index.
pub fn erm_train(sample: &[(usize, usize)], hypotheses: &[LabelAssignment]) -> Result<usize> {
    if sample.is_empty() {
        return Err(Error::Unsupported("ERM needs a nonempty sample".into()));
    }
    argmin_by(hypotheses, |h| sample.iter().filter(|&&(x, l)| h.get(x) != l).count() as f64)
}

/// ERM against the weak labels under the population measure on S.
pub fn erm_population(pop: &Population, hypotheses: &[LabelAssignment]) -> Result<usize> {
    let covered: Vec<(usize, usize, f64)> = (0..pop.len())
        .filter_map(|x| pop.weak(x).class().map(|l| (x, l, pop.mass_of(x))))
        .collect();
    if covered.is_empty() {
        return Err(Error::UndefinedConditional);
    }
    argmin_by(hypotheses, |h| {
        covered.iter().filter(|&&(x, l, _)| h.get(x) != l).map(|t| t.2).fold(0.0, |a, b| a + b)
    })
}
