//! Gas-law parameters and the effort / Hamiltonian maps of the isothermal
//! pipe model.
//!
//! With a constant compressibility the state equation collapses to
//! `p = c² ρ`, `c² = z R_s T`. The stored energy per unit cross-section is
//! the quadratic `∫ (c² ρ² / 2 + m² / 2) dx`, whose variational derivative is
//! the effort `e = [p; m]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant gas parameters. The sound speed is derived and cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGas", into = "RawGas")]
pub struct GasProperties {
    specific_gas_constant: f64,
    temperature: f64,
    compressibility: f64,
    isentropic_exponent: f64,
    sound_speed: f64,
}

impl GasProperties {
    pub fn new(
        specific_gas_constant: f64,
        temperature: f64,
        compressibility: f64,
        isentropic_exponent: f64,
    ) -> Result<Self> {
        if !(isentropic_exponent > 1.0) || !isentropic_exponent.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "isentropic exponent must exceed 1, got {isentropic_exponent}"
            )));
        }
        let sound_speed = sound_speed(specific_gas_constant, temperature, compressibility)?;
        Ok(Self {
            specific_gas_constant,
            temperature,
            compressibility,
            isentropic_exponent,
            sound_speed,
        })
    }

    /// Ideal natural gas used by the Yamal-Europe benchmark.
    pub fn benchmark() -> Self {
        Self::new(530.0, 276.25, 1.0, 1.4).expect("benchmark gas parameters are valid")
    }

    pub fn specific_gas_constant(&self) -> f64 {
        self.specific_gas_constant
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn compressibility(&self) -> f64 {
        self.compressibility
    }

    pub fn isentropic_exponent(&self) -> f64 {
        self.isentropic_exponent
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    /// `c² = z R_s T`, evaluated directly rather than by squaring the cached root.
    pub fn sound_speed_squared(&self) -> f64 {
        self.compressibility * self.specific_gas_constant * self.temperature
    }

    pub fn pressure(&self, density: f64) -> f64 {
        self.sound_speed_squared() * density
    }

    pub fn density(&self, pressure: f64) -> f64 {
        pressure / self.sound_speed_squared()
    }
}

#[derive(Serialize, Deserialize)]
struct RawGas {
    #[serde(rename = "Rs")]
    rs: f64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(default = "default_z")]
    z: f64,
    kappa: f64,
}

fn default_z() -> f64 {
    1.0
}

impl TryFrom<RawGas> for GasProperties {
    type Error = Error;

    fn try_from(raw: RawGas) -> Result<Self> {
        GasProperties::new(raw.rs, raw.t, raw.z, raw.kappa)
    }
}

impl From<GasProperties> for RawGas {
    fn from(g: GasProperties) -> Self {
        RawGas {
            rs: g.specific_gas_constant,
            t: g.temperature,
            z: g.compressibility,
            kappa: g.isentropic_exponent,
        }
    }
}

/// `√(z R_s T)`.
pub fn sound_speed(specific_gas_constant: f64, temperature: f64, compressibility: f64) -> Result<f64> {
    for (name, v) in [
        ("specific gas constant", specific_gas_constant),
        ("temperature", temperature),
        ("compressibility", compressibility),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((compressibility * specific_gas_constant * temperature).sqrt())
}

/// Discrete pipe state: densities and momenta at their grid locations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipeField {
    pub density: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl PipeField {
    pub fn new(density: Vec<f64>, momentum: Vec<f64>) -> Self {
        Self { density, momentum }
    }

    pub fn uniform(n: usize, density: f64, momentum: f64) -> Self {
        Self {
            density: vec![density; n],
            momentum: vec![momentum; n],
        }
    }

    pub fn min_density(&self) -> f64 {
        self.density.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Effort `e = [p; m]` associated with a [`PipeField`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EffortField {
    pub pressure: Vec<f64>,
    pub momentum: Vec<f64>,
}

pub fn effort(field: &PipeField, gas: &GasProperties) -> EffortField {
    let c2 = gas.sound_speed_squared();
    EffortField {
        pressure: field.density.iter().map(|rho| c2 * rho).collect(),
        momentum: field.momentum.clone(),
    }
}

/// Stored energy of a uniformly spaced field, `Σ Δx c²ρ²/2 + Σ Δx m²/2`.
pub fn hamiltonian(field: &PipeField, gas: &GasProperties, dx: f64) -> f64 {
    let c2 = gas.sound_speed_squared();
    let rho: f64 = field.density.iter().map(|r| 0.5 * c2 * r * r).sum();
    let m: f64 = field.momentum.iter().map(|m| 0.5 * m * m).sum();
    dx * (rho + m)
}

/// Stored energy with per-node quadrature weights (half cells at the ends).
pub fn weighted_hamiltonian(
    field: &PipeField,
    gas: &GasProperties,
    density_weights: &[f64],
    momentum_weights: &[f64],
) -> f64 {
    let c2 = gas.sound_speed_squared();
    let rho: f64 = field
        .density
        .iter()
        .zip(density_weights)
        .map(|(r, w)| 0.5 * w * c2 * r * r)
        .sum();
    let m: f64 = field
        .momentum
        .iter()
        .zip(momentum_weights)
        .map(|(m, w)| 0.5 * w * m * m)
        .sum();
    rho + m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn benchmark_sound_speed() {
        // √(530 · 276.25) evaluated independently.
        let c = sound_speed(530.0, 276.25, 1.0).unwrap();
        assert_relative_eq!(c, 382.638_863_682_193_2, max_relative = 1e-14);
        assert_relative_eq!(GasProperties::benchmark().sound_speed_squared(), 146_412.5);
    }

    #[test]
    fn unit_parameters_give_unit_speed() {
        assert_eq!(sound_speed(1.0, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn compressibility_scales_by_root() {
        let base = sound_speed(530.0, 276.25, 1.0).unwrap();
        let four = sound_speed(530.0, 276.25, 4.0).unwrap();
        assert_relative_eq!(four, 2.0 * base, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sound_speed(0.0, 276.25, 1.0).is_err());
        assert!(sound_speed(530.0, -1.0, 1.0).is_err());
        assert!(sound_speed(530.0, 276.25, f64::NAN).is_err());
        assert!(GasProperties::new(530.0, 276.25, 1.0, 1.0).is_err());
    }

    #[test]
    fn effort_of_benchmark_density() {
        let gas = GasProperties::benchmark();
        let e = effort(&PipeField::new(vec![54.64], vec![12.0]), &gas);
        // 54.64 · 146412.5
        assert_relative_eq!(e.pressure[0], 7_999_979.0, max_relative = 1e-14);
        assert_relative_eq!(e.pressure[0], 8.0e6, max_relative = 1e-5);
        assert_eq!(e.momentum, vec![12.0]);
    }

    #[test]
    fn effort_is_linear_through_origin() {
        let gas = GasProperties::benchmark();
        let f = PipeField::new(vec![1e-300, 3.0], vec![5.0, -2.0]);
        let f2 = PipeField::new(vec![2e-300, 6.0], vec![5.0, -2.0]);
        let (e, e2) = (effort(&f, &gas), effort(&f2, &gas));
        assert!(e.pressure[0] < 1e-290);
        assert_relative_eq!(e2.pressure[1], 2.0 * e.pressure[1]);
        assert_eq!(e.momentum, e2.momentum);
    }

    #[test]
    fn hamiltonian_basics() {
        let unit = GasProperties::new(1.0, 1.0, 1.0, 1.4).unwrap();
        assert_eq!(hamiltonian(&PipeField::uniform(4, 0.0, 0.0), &unit, 2.0), 0.0);
        assert_eq!(hamiltonian(&PipeField::new(vec![1.0], vec![0.0]), &unit, 1.0), 0.5);
    }

    fn field_strategy() -> impl Strategy<Value = PipeField> {
        (1usize..8).prop_flat_map(|n| {
            (
                proptest::collection::vec(1.0f64..80.0, n),
                proptest::collection::vec(-400.0f64..400.0, n),
            )
                .prop_map(|(d, m)| PipeField::new(d, m))
        })
    }

    proptest! {
        #[test]
        fn effort_is_gradient_of_hamiltonian(field in field_strategy(), dx in 10.0f64..1e4) {
            let gas = GasProperties::benchmark();
            let e = effort(&field, &gas);
            let n = field.density.len();
            let mut fd = Vec::with_capacity(2 * n);
            let mut exact = Vec::with_capacity(2 * n);
            // Central differences with step 1e-6 * scale.
            for i in 0..2 * n {
                let x = if i < n { field.density[i] } else { field.momentum[i - n] };
                let h = 1e-6 * x.abs().max(1.0);
                let mut plus = field.clone();
                let mut minus = field.clone();
                if i < n {
                    plus.density[i] += h;
                    minus.density[i] -= h;
                    exact.push(dx * e.pressure[i]);
                } else {
                    plus.momentum[i - n] += h;
                    minus.momentum[i - n] -= h;
                    exact.push(dx * e.momentum[i - n]);
                }
                fd.push((hamiltonian(&plus, &gas, dx) - hamiltonian(&minus, &gas, dx)) / (2.0 * h));
            }
            let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in fd.iter().zip(&exact) {
                prop_assert!((a - b).abs() <= 1e-6 * scale);
            }
        }

        #[test]
        fn hamiltonian_is_quadratic(field in field_strategy(), alpha in -5.0f64..5.0) {
            let gas = GasProperties::benchmark();
            let scaled = PipeField::new(
                field.density.iter().map(|r| alpha * r).collect(),
                field.momentum.iter().map(|m| alpha * m).collect(),
            );
            let h = hamiltonian(&field, &gas, 3.0);
            prop_assert!((hamiltonian(&scaled, &gas, 3.0) - alpha * alpha * h).abs() <= 1e-12 * h);
        }
    }
}
