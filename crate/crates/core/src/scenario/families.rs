//! Coefficient and data families.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid2, Region};
use crate::modulus::Modulus;
use crate::solvers::CoefficientField;

/// Ellipticity constant of the generated coefficients; perturbations are capped at half of it.
pub const LAMBDA: f64 = 1.0;

/// Profile `amplitude · ω(t)` of a coefficient or data family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    #[default]
    Constant,
    /// `ω(t) = t^α`.
    Holder { alpha: f64, amplitude: f64 },
    /// `ω(t) = (ln(e/t))^{−γ}` with `γ > 1`.
    DiniLog { gamma: f64, amplitude: f64 },
    /// `ω(t) = (ln(e/t))^{−1}`.
    NonDiniLog { amplitude: f64 },
}

/// Name and one-line description of every family.
pub const FAMILIES: [(&str, &str); 4] = [
    ("constant", "identity matrix, zero oscillation"),
    ("holder", "1 + amplitude * t^alpha, alpha in (0, 1]"),
    ("dini-log", "1 + amplitude * (ln(e/t))^-gamma, gamma > 1: Dini"),
    ("non-dini-log", "1 + amplitude * (ln(e/t))^-1: not Dini"),
];

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Constant => FAMILIES[0].0,
            FamilySpec::Holder { .. } => FAMILIES[1].0,
            FamilySpec::DiniLog { .. } => FAMILIES[2].0,
            FamilySpec::NonDiniLog { .. } => FAMILIES[3].0,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            FamilySpec::Constant => 0.0,
            FamilySpec::Holder { amplitude, .. } | FamilySpec::DiniLog { amplitude, .. } | FamilySpec::NonDiniLog { amplitude } => amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilySpec::Constant => return Ok(()),
            FamilySpec::Holder { alpha, .. } if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::param(format!("holder exponent {alpha} outside (0, 1]")))
            }
            FamilySpec::DiniLog { gamma, .. } if !(gamma > 1.0 && gamma.is_finite()) => {
                return Err(Error::param(format!("dini-log exponent {gamma} must exceed 1")))
            }
            _ => {}
        }
        let amp = self.amplitude();
        if !(amp >= 0.0) {
            return Err(Error::param(format!("amplitude {amp} must be nonnegative")));
        }
        if amp > 0.5 * LAMBDA {
            return Err(Error::param(format!("amplitude {amp} exceeds lambda/2 = {}", 0.5 * LAMBDA)));
        }
        Ok(())
    }

    /// End of the range where `ω` is concave: `1` for powers, `e^{−γ}` for `(ln(e/t))^{−γ}`.
    pub fn concave_end(&self) -> f64 {
        match *self {
            FamilySpec::DiniLog { gamma, .. } => (-gamma).exp(),
            FamilySpec::NonDiniLog { .. } => (-1f64).exp(),
            _ => 1.0,
        }
    }

    /// `amplitude · ω` on `[0, concave_end]`, constant beyond.
    pub fn modulus(&self) -> Result<Modulus<f64>> {
        self.validate()?;
        let end = self.concave_end();
        match *self {
            FamilySpec::Constant => Ok(Modulus::zero(1.0)),
            _ if self.amplitude() == 0.0 => Ok(Modulus::zero(1.0)),
            FamilySpec::Holder { alpha, amplitude } => Modulus::closed(amplitude, alpha, 0.0, 1.0, end),
            FamilySpec::DiniLog { gamma, amplitude } => Modulus::closed(amplitude, 0.0, gamma, 1.0, end),
            FamilySpec::NonDiniLog { amplitude } => Modulus::closed(amplitude, 0.0, 1.0, 1.0, end),
        }
    }

    /// `t ↦ amplitude · ω(|t|)`. Capping at the concave range keeps `ω` the
    /// continuity modulus of the profile.
    pub fn profile(&self) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
        let w = self.modulus()?;
        Ok(Arc::new(move |t: f64| w.eval(t.abs())))
    }
}

/// `A(x) = (λ + amplitude·ω(|xⁿ|)) I`, validated on the nodes of `grid` inside `region`.
pub fn generate_coefficients(family: &FamilySpec, grid: Grid2, region: &dyn Region) -> Result<CoefficientField> {
    let prof = family.profile()?;
    let top = LAMBDA + family.amplitude();
    let coeffs = CoefficientField::new(Arc::new(move |p| {
        let a = LAMBDA + prof(p[1]);
        [[a, 0.0], [0.0, a]]
    }))
    .with_bounds(LAMBDA, std::f64::consts::SQRT_2 * top);
    coeffs.validate(grid, region)?;
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Rect, ScalarField};
    use crate::modulus::{classify, empirical_continuity_modulus, Classification};

    fn setup(family: &FamilySpec) -> (ScalarField, Rect) {
        let grid = Grid2::square([-1.0, 0.0], [1.0, 2.0], 256);
        let rect = Rect { lo: [-1.0 - 1e-9, -1e-9], hi: [1.0 + 1e-9, 2.0 + 1e-9] };
        let c = generate_coefficients(family, grid, &rect).unwrap();
        (ScalarField::from_fn(grid, |p| c.a_at(p)[0][0]), rect)
    }

    /// Pairwise scan: the largest entry difference over pairs at distance at most `t` is attained
    /// across the flat side, where it equals the profile itself.
    fn scan(family: &FamilySpec, radii: &[f64]) -> Vec<f64> {
        let (a, rect) = setup(family);
        empirical_continuity_modulus(&a, &rect, radii).unwrap().raw
    }

    #[test]
    fn constant_has_zero_modulus() {
        assert!(FamilySpec::Constant.modulus().unwrap().is_zero());
        assert!(scan(&FamilySpec::Constant, &[0.0625, 0.125, 0.25]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn holder_matches_requested_modulus() {
        let fam = FamilySpec::Holder { alpha: 0.5, amplitude: 0.2 };
        let radii = [0.0625, 0.125, 0.25];
        for (r, m) in radii.iter().zip(scan(&fam, &radii)) {
            let want = 0.2 * r.sqrt();
            assert!((m - want).abs() <= 0.15 * want, "t = {r}: {m} vs {want}");
        }
    }

    #[test]
    fn dini_log_matches_and_is_dini() {
        let fam = FamilySpec::DiniLog { gamma: 2.0, amplitude: 0.3 };
        let radii = [0.03125, 0.0625, 0.125];
        for (r, m) in radii.iter().zip(scan(&fam, &radii)) {
            let want = 0.3 / (1.0 - r.ln()).powi(2);
            assert!((m - want).abs() <= 0.15 * want, "t = {r}: {m} vs {want}");
        }
        assert_eq!(classify(&fam.modulus().unwrap()).unwrap().classification, Classification::Dini);
        let nd = classify(&FamilySpec::NonDiniLog { amplitude: 0.3 }.modulus().unwrap()).unwrap();
        assert_eq!(nd.classification, Classification::Neither);
    }

    #[test]
    fn amplitude_capped_by_ellipticity() {
        let fam = FamilySpec::Holder { alpha: 0.5, amplitude: 0.6 };
        assert!(matches!(fam.validate(), Err(Error::Parameter(_))));
        assert!(FamilySpec::DiniLog { gamma: 1.0, amplitude: 0.1 }.validate().is_err());
        assert!(FamilySpec::Holder { alpha: 0.0, amplitude: 0.1 }.validate().is_err());
    }
}
