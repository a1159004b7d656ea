//! Concentric power-law density model derived from a profile fit.
//!
//! Each ring j spans [r_inner, r_outer) and carries density
//! c_j * r^(a_j - 2). The exponents come from inverting fitted log-log
//! slopes (a_j = 1/slope_j), the ring radii from the fitted radii at the
//! breakpoints, and the coefficients from two facts: density is
//! continuous across shared radii, and the rings must integrate to the
//! total mass. Those two conditions have a closed-form solution, computed
//! here and then re-checked numerically on every constructed model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::RingFit;
use crate::vp::VpProfile;

const CONSISTENCY_TOL: f64 = 1e-9;
/// Fitted slopes at or below this cannot be inverted into a decaying,
/// integrable density exponent.
const MIN_SLOPE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub r_inner_km: f64,
    pub r_outer_km: f64,
    /// Power-law exponent: enclosed mass grows like r^a inside the ring.
    pub a: f64,
    /// Coefficient of the density c * r^(a-2), units mass * km^(-a).
    pub c: f64,
}

impl Ring {
    pub fn density_at(&self, r_km: f64) -> f64 {
        self.c * r_km.powf(self.a - 2.0)
    }

    /// Mass of the ring between its inner edge and `r_km`.
    fn partial_mass(&self, r_km: f64) -> f64 {
        std::f64::consts::TAU * self.c / self.a
            * (r_km.powf(self.a) - self.r_inner_km.powf(self.a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingModel {
    /// Contiguous rings from the centre outwards; first inner radius 0.
    pub rings: Vec<Ring>,
    pub total_mass: f64,
    pub outer_radius_km: f64,
    /// How far past the largest sampled radius the outer edge had to be
    /// extrapolated to reach f = 1 (0 when the profile reached it).
    pub extrapolated_km: f64,
}

impl RingModel {
    /// Build a model from ring outer radii and exponents; coefficients
    /// follow from density continuity plus mass closure.
    pub fn from_rings(outer_radii: &[f64], exponents: &[f64], total_mass: f64) -> Result<Self> {
        Self::from_rings_extrapolated(outer_radii, exponents, total_mass, 0.0)
    }

    fn from_rings_extrapolated(
        outer_radii: &[f64],
        exponents: &[f64],
        total_mass: f64,
        extrapolated_km: f64,
    ) -> Result<Self> {
        if outer_radii.is_empty() || outer_radii.len() != exponents.len() {
            return Err(Error::InvalidModel(format!(
                "need matching nonempty radius and exponent lists, got {} and {}",
                outer_radii.len(),
                exponents.len()
            )));
        }
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "total mass must be positive and finite, got {total_mass}"
            )));
        }
        let mut prev = 0.0;
        for &r in outer_radii {
            if !(r > prev && r.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "ring radii must be strictly increasing and positive, got {r} after {prev}"
                )));
            }
            prev = r;
        }
        for &a in exponents {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "ring exponents must be positive and finite, got {a}"
                )));
            }
        }

        // Relative coefficients from continuity at each shared radius:
        // c_{j+1} = c_j * r_j^(a_j - a_{j+1}).
        let n = outer_radii.len();
        let mut kappa = vec![1.0; n];
        for j in 1..n {
            kappa[j] = kappa[j - 1] * outer_radii[j - 1].powf(exponents[j - 1] - exponents[j]);
        }
        // Closure: P = 2 pi sum_j (c_j/a_j)(r_j^{a_j} - r_{j-1}^{a_j})
        // pins the one free coefficient.
        let mut integral = 0.0;
        let mut r_in = 0.0f64;
        for j in 0..n {
            integral += kappa[j] / exponents[j]
                * (outer_radii[j].powf(exponents[j]) - r_in.powf(exponents[j]));
            r_in = outer_radii[j];
        }
        if !(integral > 0.0 && integral.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "mass integral degenerate ({integral}); exponents or radii out of range"
            )));
        }
        let c1 = total_mass / (std::f64::consts::TAU * integral);

        let mut rings = Vec::with_capacity(n);
        let mut r_in = 0.0;
        for j in 0..n {
            let c = c1 * kappa[j];
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "ring {j} coefficient degenerate ({c})"
                )));
            }
            rings.push(Ring { r_inner_km: r_in, r_outer_km: outer_radii[j], a: exponents[j], c });
            r_in = outer_radii[j];
        }
        let model = RingModel {
            rings,
            total_mass,
            outer_radius_km: *outer_radii.last().unwrap(),
            extrapolated_km,
        };
        model.validate()?;
        Ok(model)
    }

    /// Re-check the continuity and closure conditions the constructor
    /// solved for; any violation means a numerical breakdown upstream.
    pub fn validate(&self) -> Result<()> {
        for w in self.rings.windows(2) {
            let r = w[0].r_outer_km;
            let inner = w[0].density_at(r);
            let outer = w[1].density_at(r);
            let err = (inner - outer).abs() / inner.abs().max(outer.abs());
            if !(err <= CONSISTENCY_TOL) {
                return Err(Error::ModelInconsistent {
                    kind: "density continuity".into(),
                    relative_error: err,
                });
            }
        }
        let mass: f64 = self.rings.iter().map(|r| r.partial_mass(r.r_outer_km)).sum();
        let err = (mass - self.total_mass).abs() / self.total_mass;
        if !(err <= CONSISTENCY_TOL) {
            return Err(Error::ModelInconsistent { kind: "mass closure".into(), relative_error: err });
        }
        Ok(())
    }

    /// Density at `r_km`; a shared radius belongs to the inner ring.
    pub fn density(&self, r_km: f64) -> Result<f64> {
        if !(r_km > 0.0 && r_km <= self.outer_radius_km) {
            return Err(Error::RadiusOutOfRange { r_km, outer_km: self.outer_radius_km });
        }
        let ring = self
            .rings
            .iter()
            .find(|ring| r_km <= ring.r_outer_km)
            .expect("radius bounded by the outer edge");
        Ok(ring.density_at(r_km))
    }

    /// Mass enclosed within radius `r_km` of the centre.
    pub fn mass_within(&self, r_km: f64) -> Result<f64> {
        if !(r_km >= 0.0 && r_km <= self.outer_radius_km) {
            return Err(Error::RadiusOutOfRange { r_km, outer_km: self.outer_radius_km });
        }
        let mut acc = 0.0;
        for ring in &self.rings {
            if r_km <= ring.r_outer_km {
                acc += ring.partial_mass(r_km);
                break;
            }
            acc += ring.partial_mass(ring.r_outer_km);
        }
        Ok(acc)
    }

    pub fn fraction_within(&self, r_km: f64) -> Result<f64> {
        Ok(self.mass_within(r_km)? / self.total_mass)
    }

    /// Ring whose outer edge is the LAST fitted breakpoint: the city-side
    /// ring of the final regime change. Falls back to the single ring
    /// when there are no breakpoints.
    pub fn default_threshold_ring(&self) -> usize {
        self.rings.len().saturating_sub(2)
    }
}

/// Convert a fit into a ring model using the profile's total mass.
pub fn model_from_fit(fit: &RingFit, profile: &VpProfile) -> Result<RingModel> {
    model_from_fit_with_mass(fit, profile.total_mass)
}

pub fn model_from_fit_with_mass(fit: &RingFit, total_mass: f64) -> Result<RingModel> {
    for (j, &s) in fit.slopes.iter().enumerate() {
        if s <= MIN_SLOPE {
            return Err(Error::NonpositiveSlope { segment: j, slope: s });
        }
    }
    let mut radii: Vec<f64> =
        fit.breakpoints_as_fractions().iter().map(|&(_, r_km)| r_km).collect();
    // Outer edge: fitted radius at f = 1, which extrapolates along the
    // last segment when the profile stopped short of f = 1.
    let outer = fit.eval_logf(0.0).exp();
    let sampled_top = fit.eval_logf(fit.fit_range_logf.1).exp();
    radii.push(outer);
    let exponents: Vec<f64> = fit.slopes.iter().map(|&s| 1.0 / s).collect();
    RingModel::from_rings_extrapolated(
        &radii,
        &exponents,
        total_mass,
        (outer - sampled_top).max(0.0),
    )
}

/// Boundary threshold density: the model density at ring `b`'s outer
/// edge, divided by that ring's exponent. With the default ring this is
/// the density scale at which the profile says city turns into country.
pub fn threshold_density(model: &RingModel, b: usize) -> Result<f64> {
    let ring = model
        .rings
        .get(b)
        .ok_or(Error::RingIndexOutOfBounds { index: b, rings: model.rings.len() })?;
    Ok(ring.c / ring.a * ring.r_outer_km.powf(ring.a - 2.0))
}

/// Same threshold radius, but using the country-side ring's exponent and
/// coefficient; reported alongside the default so the choice is visible.
pub fn threshold_density_outer(model: &RingModel, b: usize) -> Result<f64> {
    let r = model
        .rings
        .get(b)
        .ok_or(Error::RingIndexOutOfBounds { index: b, rings: model.rings.len() })?
        .r_outer_km;
    let ring = model
        .rings
        .get(b + 1)
        .ok_or(Error::RingIndexOutOfBounds { index: b + 1, rings: model.rings.len() })?;
    Ok(ring.c / ring.a * r.powf(ring.a - 2.0))
}
