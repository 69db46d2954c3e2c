//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use landmark_audit::data::{AuditDataset, AuditRecord, FactorTaxonomy, ResponseInput};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One row: factor levels (by index into each taxonomy), covariates, response.
pub struct Row {
    pub levels: Vec<usize>,
    pub covariates: Vec<f64>,
    pub response: f64,
}

pub fn dataset(factors: &[FactorTaxonomy], covariates: &[&str], rows: &[Row]) -> AuditDataset {
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, r)| AuditRecord {
            sample_id: format!("r{i}"),
            response: ResponseInput::Precomputed(r.response),
            factors: factors
                .iter()
                .zip(&r.levels)
                .map(|(t, &l)| (t.name().to_string(), t.levels()[l].clone()))
                .collect::<BTreeMap<_, _>>(),
            covariates: covariates.iter().zip(&r.covariates).map(|(c, &v)| (c.to_string(), v)).collect(),
        })
        .collect();
    AuditDataset::new(factors.to_vec(), covariates.iter().map(|c| c.to_string()).collect(), records).unwrap()
}

pub fn factor(name: &str, k: usize) -> FactorTaxonomy {
    FactorTaxonomy::new(name, (0..k).map(|i| format!("{name}{i}")), false).unwrap()
}

/// Oracle: `(X^T X)^{-1} X^T y` by explicit inversion.
pub fn normal_equations(x: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    let xt = x.transpose();
    let inv = (&xt * x).try_inverse().expect("invertible normal matrix");
    inv * (xt * DVector::from_column_slice(y))
}

/// Oracle: `I_x(a, b)` from two positive hypergeometric series,
/// `B_x(a, b) = x^a (1-x)^b / a * sum_n (a+b)_n / (a+1)_n x^n`, normalized
/// by `B_x(a, b) + B_{1-x}(b, a)` so no gamma function is involved.
pub fn inc_beta_series(x: f64, a: f64, b: f64) -> f64 {
    let lower = partial_beta_series(x, a, b);
    let upper = partial_beta_series(1.0 - x, b, a);
    lower / (lower + upper)
}

fn partial_beta_series(x: f64, a: f64, b: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..1_000_000 {
        let n = n as f64;
        let ratio = (a + b + n) / (a + 1.0 + n) * x;
        term *= ratio;
        sum += term;
        if ratio < 1.0 && term < 1e-18 * sum {
            break;
        }
    }
    x.powf(a) * (1.0 - x).powf(b) / a * sum
}

/// Tanh-sinh quadrature of `g` over `[lo, hi]`. `g` receives the point and
/// its distances to both ends so endpoint singularities stay accurate.
pub fn tanh_sinh<G: Fn(f64, f64, f64) -> f64>(g: G, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    let logistic = |z: f64| 1.0 / (1.0 + (-z).exp());
    let mut k: i64 = -(6.5 / h) as i64;
    while (k as f64) * h <= 6.5 {
        let t = k as f64 * h;
        let z = std::f64::consts::FRAC_PI_2 * 2.0 * t.sinh();
        let (left, right) = (width * logistic(z), width * logistic(-z));
        let weight = width * logistic(z) * logistic(-z) * std::f64::consts::PI * t.cosh();
        if left > 0.0 && right > 0.0 && weight > 0.0 {
            sum += weight * g(lo + left, left, right);
        }
        k += 1;
    }
    sum * h
}

/// Oracle: `P(F > f)` by integrating the beta kernel `u^(a-1) (1-u)^(b-1)`
/// of `U = d1 F / (d2 + d1 F)` on both sides of the cut.
pub fn f_sf_quadrature(f: f64, d1: f64, d2: f64) -> f64 {
    let (a, b) = (d1 / 2.0, d2 / 2.0);
    let cut = d1 * f / (d2 + d1 * f);
    let kernel = |from_zero: f64, to_one: f64| ((a - 1.0) * from_zero.ln() + (b - 1.0) * to_one.ln()).exp();
    let below = tanh_sinh(|_, l, r| kernel(l, (1.0 - cut) + r), 0.0, cut);
    let above = tanh_sinh(|_, l, r| kernel(cut + l, r), cut, 1.0);
    above / (below + above)
}

/// Kolmogorov-Smirnov distance between a sample and U(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().map(|(i, &p)| ((i as f64 + 1.0) / n - p).max(p - i as f64 / n)).fold(0.0, f64::max)
}
