//! Fanger's Predicted Mean Vote, the discomfort penalty derived from it, and
//! enumeration of comfortable grid cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::ThermalGrid;

pub const PMV_LIMIT: f64 = 3.0;
const TCL_TOLERANCE: f64 = 1e-5;
const TCL_MAX_ITER: usize = 200;

/// Where the mean radiant temperature comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiantTemp {
    /// Radiant temperature equals the air temperature (operative conditions).
    Air,
    /// A constant radiant temperature in °C.
    Fixed(f64),
}

impl RadiantTemp {
    pub fn resolve(self, air_temp: f64) -> f64 {
        match self {
            RadiantTemp::Air => air_temp,
            RadiantTemp::Fixed(t) => t,
        }
    }
}

/// Comfort parameters for one person.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComfortProfile {
    pub met_per_activity: [f64; 3],
    pub clo_per_activity: [f64; 3],
    pub band_halfwidth: f64,
    pub air_speed: f64,
    pub mean_radiant_temp: RadiantTemp,
}

/// Environment-wide comfort constants shared by every person in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComfortEnv {
    pub clo_per_activity: [f64; 3],
    pub air_speed: f64,
    pub mean_radiant_temp: RadiantTemp,
}

impl Default for ComfortEnv {
    fn default() -> Self {
        ComfortEnv {
            clo_per_activity: [0.5, 0.67, 0.36],
            air_speed: 0.0,
            mean_radiant_temp: RadiantTemp::Air,
        }
    }
}

impl ComfortEnv {
    pub fn profile(&self, met: [f64; 3], band_halfwidth: f64) -> ComfortProfile {
        ComfortProfile {
            met_per_activity: met,
            clo_per_activity: self.clo_per_activity,
            band_halfwidth,
            air_speed: self.air_speed,
            mean_radiant_temp: self.mean_radiant_temp,
        }
    }
}

impl ComfortProfile {
    pub fn validate(&self) -> Result<()> {
        for &m in &self.met_per_activity {
            if !(m > 0.5 && m <= 3.0) {
                return Err(Error::Config(format!("met value {m} outside (0.5, 3.0]")));
            }
        }
        for &c in &self.clo_per_activity {
            if !(0.0..=2.0).contains(&c) {
                return Err(Error::Config(format!("clo value {c} outside [0, 2]")));
            }
        }
        if !(self.band_halfwidth > 0.0) {
            return Err(Error::Config(format!(
                "comfort band half-width must be positive, got {}",
                self.band_halfwidth
            )));
        }
        if !(self.air_speed >= 0.0) {
            return Err(Error::Config("air speed must be non-negative".into()));
        }
        Ok(())
    }

    pub fn input(&self, activity: usize, air_temp: f64, rel_humidity: f64) -> PmvInput {
        PmvInput {
            air_temp,
            radiant_temp: self.mean_radiant_temp.resolve(air_temp),
            air_speed: self.air_speed,
            rel_humidity,
            met: self.met_per_activity[activity],
            clo: self.clo_per_activity[activity],
        }
    }

    /// PMV felt during `activity` at the given ambient.
    pub fn pmv_for(&self, activity: usize, air_temp: f64, rel_humidity: f64) -> Result<f64> {
        pmv(&self.input(activity, air_temp, rel_humidity))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmvInput {
    pub air_temp: f64,
    pub radiant_temp: f64,
    pub air_speed: f64,
    pub rel_humidity: f64,
    pub met: f64,
    pub clo: f64,
}

impl PmvInput {
    fn check(&self) -> Result<()> {
        let ok = self.air_temp.is_finite()
            && self.radiant_temp.is_finite()
            && self.air_speed >= 0.0
            && self.rel_humidity > 0.0
            && self.rel_humidity <= 100.0
            && self.met > 0.0
            && self.clo >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::domain("pmv", format!("{self:?}")))
        }
    }
}

/// Saturated water-vapour pressure in Pa.
fn saturation_pressure(t: f64) -> f64 {
    1000.0 * (16.6536 - 4030.183 / (t + 235.0)).exp()
}

/// Fanger PMV, clamped to [-3, 3]. The clothing surface temperature is
/// found by averaged fixed-point iteration.
pub fn pmv(input: &PmvInput) -> Result<f64> {
    input.check()?;
    let ta = input.air_temp;
    let tr = input.radiant_temp;
    let pa = input.rel_humidity / 100.0 * saturation_pressure(ta);
    let icl = 0.155 * input.clo;
    let m = input.met * 58.15;
    let mw = m; // no external work
    let fcl = if icl <= 0.078 { 1.0 + 1.29 * icl } else { 1.05 + 0.645 * icl };
    let hc_forced = 12.1 * input.air_speed.sqrt();
    let taa = ta + 273.0;
    let tra = tr + 273.0;
    let tra4 = (tra / 100.0).powi(4);

    let p1 = icl * fcl;
    let p2 = p1 * 3.96;
    let p3 = p1 * 100.0;
    let p4 = p1 * taa;
    let p5 = 308.7 - 0.028 * mw + p2 * tra4;

    // Work in hundreds of kelvin, as the classic algorithm does.
    let tcla = taa + (35.5 - ta) / (3.5 * icl + 0.1);
    let mut xn = tcla / 100.0;
    let mut xf = tcla / 50.0;
    let mut hc = hc_forced;
    let mut converged = false;
    for _ in 0..TCL_MAX_ITER {
        xf = (xf + xn) / 2.0;
        let hc_natural = 2.38 * (100.0 * xf - taa).abs().powf(0.25);
        hc = hc_forced.max(hc_natural);
        xn = (p5 + p4 * hc - p2 * xf.powi(4)) / (100.0 + p3 * hc);
        if 100.0 * (xn - xf).abs() <= TCL_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged || !xn.is_finite() {
        return Err(Error::PmvNoConvergence { iterations: TCL_MAX_ITER });
    }
    let tcl = 100.0 * xn - 273.0;

    let skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - pa);
    let sweat = if mw > 58.15 { 0.42 * (mw - 58.15) } else { 0.0 };
    let latent_resp = 1.7e-5 * m * (5867.0 - pa);
    let dry_resp = 0.0014 * m * (34.0 - ta);
    let radiation = 3.96 * fcl * (xn.powi(4) - tra4);
    let convection = fcl * hc * (tcl - ta);

    let load = mw - skin_diffusion - sweat - latent_resp - dry_resp - radiation - convection;
    let sensitivity = 0.303 * (-0.036 * m).exp() + 0.028;
    let value = sensitivity * load;
    if !value.is_finite() {
        return Err(Error::PmvNoConvergence { iterations: TCL_MAX_ITER });
    }
    Ok(value.clamp(-PMV_LIMIT, PMV_LIMIT))
}

/// Discomfort penalty: |pmv| outside the comfort band, zero inside.
pub fn discomfort(pmv_value: f64, band_halfwidth: f64) -> f64 {
    let a = pmv_value.abs();
    if a > band_halfwidth {
        a
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComfortCell {
    pub temp: f64,
    pub rh: f64,
    pub pmv: f64,
}

/// Grid cells whose PMV lies inside the profile's band, ordered by
/// temperature then humidity.
pub fn comfort_table(profile: &ComfortProfile, met: f64, clo: f64, grid: &ThermalGrid) -> Result<Vec<ComfortCell>> {
    let mut out = Vec::new();
    for (temp, rh) in grid.cells() {
        let input = PmvInput {
            air_temp: temp,
            radiant_temp: profile.mean_radiant_temp.resolve(temp),
            air_speed: profile.air_speed,
            rel_humidity: rh,
            met,
            clo,
        };
        let v = pmv(&input)?;
        if v.abs() <= profile.band_halfwidth {
            out.push(ComfortCell { temp, rh, pmv: v });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(ta: f64, tr: f64, v: f64, rh: f64, met: f64, clo: f64) -> PmvInput {
        PmvInput { air_temp: ta, radiant_temp: tr, air_speed: v, rel_humidity: rh, met, clo }
    }

    #[test]
    fn discomfort_band() {
        assert_eq!(discomfort(0.3, 0.5), 0.0);
        assert_eq!(discomfort(0.8, 0.5), 0.8);
        assert_eq!(discomfort(-0.3, 0.25), 0.3);
        assert_eq!(discomfort(0.5, 0.5), 0.0);
    }

    #[test]
    fn pmv_reference_point() {
        // Reference value -0.811 from an external ISO 7730 implementation.
        let v = pmv(&input(22.0, 22.0, 0.1, 50.0, 1.2, 0.5)).unwrap();
        assert!((v + 0.75).abs() <= 0.1, "{v}");
        assert!((v + 0.811).abs() <= 0.01, "{v}");
    }

    #[test]
    fn pmv_monotone_in_air_temperature() {
        let hot = pmv(&input(30.0, 22.0, 0.0, 30.0, 1.8, 0.36)).unwrap();
        let cold = pmv(&input(15.0, 22.0, 0.0, 30.0, 1.8, 0.36)).unwrap();
        assert!(hot > cold);
    }

    #[test]
    fn pmv_is_clamped() {
        let v = pmv(&input(10.0, 10.0, 0.0, 30.0, 1.0, 0.0)).unwrap();
        assert_eq!(v, -3.0);
        let v = pmv(&input(40.0, 40.0, 0.0, 90.0, 3.0, 2.0)).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn pmv_rejects_bad_input() {
        assert!(pmv(&input(22.0, 22.0, 0.0, 0.0, 1.0, 0.5)).is_err());
        assert!(pmv(&input(22.0, 22.0, 0.0, 50.0, -1.0, 0.5)).is_err());
        assert!(pmv(&input(f64::NAN, 22.0, 0.0, 50.0, 1.0, 0.5)).is_err());
    }

    #[test]
    fn table_with_wide_band_is_whole_grid() {
        let env = ComfortEnv::default();
        let p = env.profile([1.0, 1.3, 1.8], 3.0);
        let cells = comfort_table(&p, 1.0, 0.5, &ThermalGrid::default()).unwrap();
        assert_eq!(cells.len(), 144);
    }

    #[test]
    fn profile_validation() {
        let env = ComfortEnv::default();
        assert!(env.profile([1.0, 1.3, 1.8], 0.5).validate().is_ok());
        assert!(env.profile([0.4, 1.3, 1.8], 0.5).validate().is_err());
        assert!(env.profile([1.0, 1.3, 1.8], 0.0).validate().is_err());
    }
}
