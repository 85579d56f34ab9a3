//! JSON form of moduli and tabular sample rows.

use serde::{Deserialize, Serialize};

use super::Modulus;
use crate::error::Result;
use crate::scalar::Real;

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

/// Serializable description of a modulus, e.g. `{"kind":"power","alpha":0.5,"a":1.0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulusSpec {
    Zero {
        a: f64,
    },
    Power {
        alpha: f64,
        a: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coeff: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    LogPower {
        gamma: f64,
        a: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coeff: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    Product {
        alpha: f64,
        gamma: f64,
        a: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coeff: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    Table {
        t: Vec<f64>,
        w: Vec<f64>,
    },
}

impl ModulusSpec {
    pub fn build<T: Real>(&self) -> Result<Modulus<T>> {
        let c = T::lit;
        match self {
            ModulusSpec::Zero { a } => Ok(Modulus::zero(c(*a))),
            ModulusSpec::Power { alpha, a, coeff, scale } => Modulus::closed(c(*coeff), c(*alpha), T::zero(), c(*scale), c(*a)),
            ModulusSpec::LogPower { gamma, a, coeff, scale } => Modulus::closed(c(*coeff), T::zero(), c(*gamma), c(*scale), c(*a)),
            ModulusSpec::Product { alpha, gamma, a, coeff, scale } => {
                Modulus::closed(c(*coeff), c(*alpha), c(*gamma), c(*scale), c(*a))
            }
            ModulusSpec::Table { t, w } => Modulus::table(t.iter().map(|&x| c(x)).collect(), w.iter().map(|&x| c(x)).collect()),
        }
    }
}

impl<T: Real> Modulus<T> {
    /// JSON description; majorants are tabulated on 481 log-spaced points.
    pub fn to_spec(&self) -> Result<ModulusSpec> {
        Ok(match self {
            Modulus::Zero { a } => ModulusSpec::Zero { a: a.f64() },
            Modulus::Closed { a, form } => {
                let (alpha, gamma, coeff, scale, a) = (form.alpha.f64(), form.gamma.f64(), form.coeff.f64(), form.scale.f64(), a.f64());
                if gamma == 0.0 {
                    ModulusSpec::Power { alpha, a, coeff, scale }
                } else if alpha == 0.0 {
                    ModulusSpec::LogPower { gamma, a, coeff, scale }
                } else {
                    ModulusSpec::Product { alpha, gamma, a, coeff, scale }
                }
            }
            Modulus::Table(tab) => ModulusSpec::Table {
                t: tab.abscissae().iter().map(|x| x.f64()).collect(),
                w: tab.values().iter().map(|x| x.f64()).collect(),
            },
            Modulus::Majorant(_) => return self.to_table(self.right_end() * T::lit(1e-12), 481)?.to_spec(),
        })
    }

    /// Rows `(r, ω(r), error)` for a list of radii with a uniform error estimate.
    pub fn sample_rows(&self, radii: &[T], error_estimate: T) -> Vec<SampleRow> {
        radii
            .iter()
            .map(|&r| SampleRow { r: r.f64(), value: self.eval(r).f64(), error_estimate: error_estimate.f64() })
            .collect()
    }
}

/// One CSV row of a sampled modulus or measured quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub r: f64,
    pub value: f64,
    pub error_estimate: f64,
}
