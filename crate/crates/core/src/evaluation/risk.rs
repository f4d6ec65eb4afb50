//! Misclassification risk and misclassified volume of a classifier against
//! an oracle model, by quadrature (d ≤ 2) or Monte Carlo.

use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::{piece_resolution, Rule};
use crate::classifiers::Classifier;
use crate::data::{argmax, MixtureModel};
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION_1D: usize = 4001;
pub const DEFAULT_RESOLUTION_2D: usize = 801;
pub const MIN_MONTE_CARLO: usize = 100;

/// Bisection stops once a label switch is bracketed this tightly.
const SWITCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub risk: f64,
    pub method: RiskMethod,
    #[serde(serialize_with = "crate::io::ser_opt_f64")]
    pub stderr: Option<f64>,
    pub n_eval: usize,
}

/// How the pair sum Σ_{i≠j} w_i p_j is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskForm {
    /// Σ_i Σ_{j≠i} w_i(x) p_j(x).
    PairSum,
    /// Σ_i w_i(x) (1 - p_i(x)).
    Direct,
}

/// What weights the class probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weighting {
    /// π_i f_i(x): probability of error.
    Joint,
    /// η_i(x): Lebesgue-weighted misclassified volume.
    Posterior,
    /// f(x) on the class the Bayes rule picks: error against the Bayes
    /// partition of the domain.
    Partition,
}

fn default_resolution(dim: usize) -> usize {
    if dim == 1 {
        DEFAULT_RESOLUTION_1D
    } else {
        DEFAULT_RESOLUTION_2D
    }
}

fn check_dim(model: &MixtureModel, c: &Classifier) -> Result<()> {
    if model.dim() > 2 {
        return Err(Error::UnsupportedDimension("quadrature"));
    }
    if c.q() != model.q() {
        return Err(Error::InvalidParameter(format!(
            "classifier has {} classes, model has {}",
            c.q(),
            model.q()
        )));
    }
    Ok(())
}

/// Σ_{i≠j} ∫ π_i f_i(x) P(c(x) = j) dx over the model domain.
pub fn classifier_risk_quadrature(
    model: &MixtureModel,
    c: &Classifier,
    resolution: Option<usize>,
) -> Result<RiskReport> {
    classifier_risk_quadrature_with(model, c, resolution, RiskForm::PairSum)
}

pub fn classifier_risk_quadrature_with(
    model: &MixtureModel,
    c: &Classifier,
    resolution: Option<usize>,
    form: RiskForm,
) -> Result<RiskReport> {
    check_dim(model, c)?;
    let res = resolution.unwrap_or_else(|| default_resolution(model.dim()));
    let (risk, nodes) = integrate(model, c, res, Weighting::Joint, form)?;
    Ok(RiskReport {
        risk,
        method: RiskMethod::Quadrature,
        stderr: None,
        n_eval: nodes,
    })
}

/// Σ_{i≠j} ∫ η_i(x) 1{c(x) = j} dx: the posterior-weighted volume the
/// classifier gets wrong.
pub fn misclassified_volume(model: &MixtureModel, c: &Classifier, resolution: Option<usize>) -> Result<f64> {
    check_dim(model, c)?;
    let res = resolution.unwrap_or_else(|| default_resolution(model.dim()));
    Ok(integrate(model, c, res, Weighting::Posterior, RiskForm::PairSum)?.0)
}

/// ∫ f(x) P(c(x) ≠ F*(x)) dx: the error of `c` when the labels are the ones
/// the Bayes rule assigns, so the Bayes partition is the target.
pub fn partition_risk_quadrature(
    model: &MixtureModel,
    c: &Classifier,
    resolution: Option<usize>,
) -> Result<RiskReport> {
    check_dim(model, c)?;
    let res = resolution.unwrap_or_else(|| default_resolution(model.dim()));
    let (risk, nodes) = integrate(model, c, res, Weighting::Partition, RiskForm::PairSum)?;
    Ok(RiskReport {
        risk,
        method: RiskMethod::Quadrature,
        stderr: None,
        n_eval: nodes,
    })
}

fn class_weights(model: &MixtureModel, x: &[f64], weighting: Weighting, out: &mut [f64]) {
    let v = model.evaluate_unchecked(x);
    match weighting {
        Weighting::Joint => {
            for (o, (p, f)) in out.iter_mut().zip(model.priors().iter().zip(&v.class_densities)) {
                *o = p * f;
            }
        }
        Weighting::Posterior => out.copy_from_slice(&v.posterior),
        Weighting::Partition => {
            out.fill(0.0);
            out[argmax(&v.posterior)] = v.f;
        }
    }
}

fn pair_sum(w: &[f64], p: &[f64], form: RiskForm) -> f64 {
    match form {
        RiskForm::PairSum => {
            let mut s = 0.0;
            for (i, wi) in w.iter().enumerate() {
                for (j, pj) in p.iter().enumerate() {
                    if i != j {
                        s += wi * pj;
                    }
                }
            }
            s
        }
        RiskForm::Direct => w.iter().zip(p).map(|(wi, pi)| wi * (1.0 - pi)).sum(),
    }
}

fn integrand(model: &MixtureModel, c: &Classifier, x: &[f64], weighting: Weighting, form: RiskForm) -> f64 {
    let q = model.q();
    let mut w = vec![0.0; q];
    let mut p = vec![0.0; q];
    class_weights(model, x, weighting, &mut w);
    c.probabilities_into(x, &mut p);
    pair_sum(&w, &p, form)
}

fn integrate(
    model: &MixtureModel,
    c: &Classifier,
    res: usize,
    weighting: Weighting,
    form: RiskForm,
) -> Result<(f64, usize)> {
    let m0 = model.domain().half_width();
    let rule = Rule::simpson(-m0, m0, res)?;
    if model.dim() == 2 {
        let values: Vec<f64> = rule
            .nodes
            .par_iter()
            .map(|&x| rule.integrate(|y| integrand(model, c, &[x, y], weighting, form)))
            .collect();
        let total = values.iter().zip(&rule.weights).map(|(v, w)| v * w).sum();
        return Ok((total, rule.len() * rule.len()));
    }

    // In 1-D the integrand jumps wherever a hard label switches; each
    // constant-label piece is integrated on its own so the jumps cost nothing.
    let key = |x: f64| -> (usize, usize) {
        let own = if c.is_hard() { c.hard_label(&[x]) } else { 0 };
        let reference = if weighting == Weighting::Partition {
            argmax(&model.evaluate_unchecked(&[x]).posterior)
        } else {
            0
        };
        (own, reference)
    };
    let keys: Vec<(usize, usize)> = rule.nodes.par_iter().map(|&x| key(x)).collect();
    let mut cuts = vec![-m0];
    for k in 0..rule.len() - 1 {
        if keys[k] != keys[k + 1] {
            cuts.push(locate_switch(&key, rule.nodes[k], rule.nodes[k + 1], keys[k]));
        }
    }
    cuts.push(m0);
    let pieces: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect();
    let parts: Vec<Result<(f64, usize)>> = pieces
        .par_iter()
        .map(|&(a, b)| {
            // labels are fixed from the piece midpoint: the bisected end
            // points may sit on either side of a switch
            let (own, reference) = key(0.5 * (a + b));
            let q = model.q();
            let mut w = vec![0.0; q];
            let mut p = vec![0.0; q];
            if c.is_hard() {
                p[own] = 1.0;
            }
            let piece = Rule::simpson(a, b, piece_resolution(b - a, 2.0 * m0, res))?;
            let v = piece.integrate(|x| {
                if weighting == Weighting::Partition {
                    w.fill(0.0);
                    w[reference] = model.evaluate_unchecked(&[x]).f;
                } else {
                    class_weights(model, &[x], weighting, &mut w);
                }
                if !c.is_hard() {
                    c.probabilities_into(&[x], &mut p);
                }
                pair_sum(&w, &p, form)
            });
            Ok((v, piece.len()))
        })
        .collect();
    let mut total = 0.0;
    let mut nodes = rule.len();
    for part in parts {
        let (v, k) = part?;
        total += v;
        nodes += k;
    }
    Ok((total, nodes))
}

/// Point inside [a, b] where `key` stops equal to `left`, by bisection.
fn locate_switch<K: PartialEq>(key: &impl Fn(f64) -> K, mut a: f64, mut b: f64, left: K) -> f64 {
    for _ in 0..200 {
        if b - a <= SWITCH_TOL * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        if key(mid) == left {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Average loss over `n_eval` fresh draws from the model: 1{c(X) ≠ Y} for
/// hard rules, 1 - P(c(X) = Y) for soft ones.
pub fn classifier_risk_monte_carlo(
    model: &MixtureModel,
    c: &Classifier,
    n_eval: usize,
    seed: u64,
) -> Result<RiskReport> {
    if n_eval < MIN_MONTE_CARLO {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo risk needs n_eval >= {MIN_MONTE_CARLO}, got {n_eval}"
        )));
    }
    if c.q() != model.q() {
        return Err(Error::InvalidParameter(format!(
            "classifier has {} classes, model has {}",
            c.q(),
            model.q()
        )));
    }
    let (data, labels) = model.sample(n_eval, seed)?;
    let q = model.q();
    let losses: Vec<f64> = (0..n_eval)
        .into_par_iter()
        .map(|k| {
            let x = data.point(k);
            let y = labels.label(k);
            if c.is_hard() {
                if c.hard_label(x) == y {
                    0.0
                } else {
                    1.0
                }
            } else {
                let mut p = vec![0.0; q];
                c.probabilities_into(x, &mut p);
                1.0 - p[y]
            }
        })
        .collect();
    let risk = losses.iter().sum::<f64>() / n_eval as f64;
    let stderr = (risk.clamp(0.0, 1.0) * (1.0 - risk.clamp(0.0, 1.0)) / n_eval as f64).sqrt();
    Ok(RiskReport {
        risk,
        method: RiskMethod::MonteCarlo,
        stderr: Some(stderr),
        n_eval,
    })
}
