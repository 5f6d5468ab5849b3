//! Staggered finite-difference discretization of one isothermal pipe in
//! input-output port-Hamiltonian form.
//!
//! The pipe `[0, L]` is split into `n` equal intervals of width `Δx = L/n`.
//! Densities live on the vertices `x_k = kΔx, k = 1..n` (the inlet vertex
//! carries the boundary pressure `p₀`, which is an input) and momenta live on
//! the interval midpoints `(k - ½)Δx, k = 1..n`. The outlet momentum `m_L`
//! sits on the last vertex and is an input.
//!
//! ```text
//!   p₀        ρ₀        ρ₁              ρₙ₋₁ = ρ(L)
//!   |----m₀----|----m₁----|  ...  |--mₙ₋₁--|  m_L
//!   0                                      L
//! ```
//!
//! With the quadrature weights `w_ρ = Δx` (half at the outlet vertex) and
//! `w_m = Δx` the semi-discrete system reads `E ż = (J - R) e + G u` with
//!
//! * `w_ρ,i ρ̇_i = m_i - m_{i+1}` (`m_n ≡ m_L`),
//! * `w_m ṁ_j = -(p_j - p_{j-1}) - Δx (λ/2D) m_j |m_j| / ρ̄_j` (`p_{-1} ≡ p₀`),
//!
//! and the conjugate outputs are `y = [m₀; p(L)]`. The transport part
//! telescopes so that `eᵀ E ż = p₀ m₀ - p(L) m_L - Σ Δx (λ/2D) m_j² |v_j|`
//! holds exactly.

use crate::error::{Error, Result};
use crate::gas::{weighted_hamiltonian, EffortField, GasProperties, PipeField};

#[derive(Debug, Clone, PartialEq)]
pub struct PipeSpec {
    pub id: String,
    /// m
    pub length: f64,
    /// m
    pub diameter: f64,
    /// Darcy friction factor λ.
    pub friction: f64,
    pub n_cells: usize,
}

impl PipeSpec {
    pub fn new(id: impl Into<String>, length: f64, diameter: f64, friction: f64, n_cells: usize) -> Self {
        Self {
            id: id.into(),
            length,
            diameter,
            friction,
            n_cells,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Error::InvalidParameter(format!("pipe `{}`: {what} is invalid ({v})", self.id));
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(bad("length", self.length));
        }
        if !(self.diameter > 0.0) || !self.diameter.is_finite() {
            return Err(bad("diameter", self.diameter));
        }
        if !(self.friction >= 0.0) || !self.friction.is_finite() {
            return Err(bad("friction factor", self.friction));
        }
        if self.n_cells < 2 {
            return Err(Error::Config(format!(
                "pipe `{}` needs at least 2 cells, got {}",
                self.id, self.n_cells
            )));
        }
        Ok(())
    }

    pub fn cross_section(&self) -> f64 {
        std::f64::consts::PI * self.diameter * self.diameter / 4.0
    }
}

/// Port input `u = [p₀; -m_L]`, stored with physical signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeInput {
    pub inlet_pressure: f64,
    pub outlet_momentum: f64,
}

impl PipeInput {
    pub fn new(inlet_pressure: f64, outlet_momentum: f64) -> Self {
        Self {
            inlet_pressure,
            outlet_momentum,
        }
    }

    pub fn port_vector(&self) -> [f64; 2] {
        [self.inlet_pressure, -self.outlet_momentum]
    }

    pub fn from_port_vector(u: [f64; 2]) -> Self {
        Self::new(u[0], -u[1])
    }
}

/// Port output `y = [m(0); p(L)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeOutput {
    pub inlet_momentum: f64,
    pub outlet_pressure: f64,
}

/// Decomposition of the stored-energy rate `eᵀ E ż`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerms {
    /// `eᵀ E ż` evaluated from the discrete right-hand side.
    pub storage_rate: f64,
    /// Contribution of the transport and port blocks, `eᵀ (J e + G u)`.
    pub transport: f64,
    /// Contribution of the friction block, `-eᵀ R e` (never positive).
    pub friction: f64,
    /// `p₀ m(0) - p(L) m_L`.
    pub boundary: f64,
}

/// One pipe after spatial discretization. Immutable once built.
#[derive(Debug, Clone)]
pub struct PipeSystem {
    spec: PipeSpec,
    gas: GasProperties,
    dx: f64,
    c2: f64,
    /// λ / 2D
    friction_coefficient: f64,
    density_weights: Vec<f64>,
    momentum_weights: Vec<f64>,
}

impl PipeSystem {
    pub fn new(spec: PipeSpec, gas: GasProperties) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_cells;
        let dx = spec.length / n as f64;
        let mut density_weights = vec![dx; n];
        density_weights[n - 1] = 0.5 * dx;
        Ok(Self {
            dx,
            c2: gas.sound_speed_squared(),
            friction_coefficient: spec.friction / (2.0 * spec.diameter),
            density_weights,
            momentum_weights: vec![dx; n],
            spec,
            gas,
        })
    }

    pub fn spec(&self) -> &PipeSpec {
        &self.spec
    }

    pub fn gas(&self) -> &GasProperties {
        &self.gas
    }

    pub fn n_cells(&self) -> usize {
        self.spec.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Differential state count `2n`.
    pub fn n_states(&self) -> usize {
        2 * self.spec.n_cells
    }

    pub fn density_weights(&self) -> &[f64] {
        &self.density_weights
    }

    pub fn momentum_weights(&self) -> &[f64] {
        &self.momentum_weights
    }

    pub fn density_positions(&self) -> Vec<f64> {
        (1..=self.n_cells()).map(|k| k as f64 * self.dx).collect()
    }

    pub fn momentum_positions(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|j| (j as f64 + 0.5) * self.dx).collect()
    }

    pub fn output(&self, density: &[f64], momentum: &[f64]) -> PipeOutput {
        PipeOutput {
            inlet_momentum: momentum[0],
            outlet_pressure: self.c2 * density[self.n_cells() - 1],
        }
    }

    /// Interface density used to form `|v| = |m| / ρ̄`; one-sided at the inlet.
    fn interface_density(&self, density: &[f64], j: usize) -> f64 {
        if j == 0 {
            density[0]
        } else {
            0.5 * (density[j] + density[j - 1])
        }
    }

    fn check_state(&self, density: &[f64], momentum: &[f64]) -> Result<()> {
        let n = self.n_cells();
        if density.len() != n || momentum.len() != n {
            return Err(Error::Config(format!(
                "pipe `{}` expects {n} densities and {n} momenta, got {} and {}",
                self.spec.id,
                density.len(),
                momentum.len()
            )));
        }
        if let Some((i, rho)) = density.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::NonPhysicalState(format!(
                "pipe `{}`: density {rho} at node {i}",
                self.spec.id
            )));
        }
        Ok(())
    }

    /// Transport and port part `J e + G u` of the weighted right-hand side.
    fn transport_into(
        &self,
        density: &[f64],
        momentum: &[f64],
        input: &PipeInput,
        f_density: &mut [f64],
        f_momentum: &mut [f64],
    ) {
        let n = self.n_cells();
        for i in 0..n {
            let downstream = if i + 1 < n {
                momentum[i + 1]
            } else {
                input.outlet_momentum
            };
            f_density[i] = momentum[i] - downstream;
        }
        for j in 0..n {
            let upstream = if j == 0 {
                input.inlet_pressure
            } else {
                self.c2 * density[j - 1]
            };
            f_momentum[j] = -(self.c2 * density[j] - upstream);
        }
    }

    /// Friction force per momentum node, weighted: `Δx (λ/2D) m |m| / ρ̄`.
    fn friction_force(&self, density: &[f64], momentum: &[f64], j: usize) -> f64 {
        let m = momentum[j];
        self.momentum_weights[j] * self.friction_coefficient * m * m.abs() / self.interface_density(density, j)
    }

    /// Weighted right-hand side `f = (J - R) e + G u`, so that `E ż = f`.
    pub fn flux_balance_into(
        &self,
        density: &[f64],
        momentum: &[f64],
        input: &PipeInput,
        f_density: &mut [f64],
        f_momentum: &mut [f64],
    ) -> Result<()> {
        self.check_state(density, momentum)?;
        self.transport_into(density, momentum, input, f_density, f_momentum);
        if self.friction_coefficient > 0.0 {
            for (j, f) in f_momentum.iter_mut().enumerate() {
                *f -= self.friction_force(density, momentum, j);
            }
        }
        Ok(())
    }

    /// Time derivatives of the state and the port output.
    pub fn rhs(&self, field: &PipeField, input: &PipeInput) -> Result<(PipeField, PipeOutput)> {
        let n = self.n_cells();
        let mut rate = PipeField::new(vec![0.0; n], vec![0.0; n]);
        self.flux_balance_into(
            &field.density,
            &field.momentum,
            input,
            &mut rate.density,
            &mut rate.momentum,
        )?;
        for (r, w) in rate.density.iter_mut().zip(&self.density_weights) {
            *r /= w;
        }
        for (r, w) in rate.momentum.iter_mut().zip(&self.momentum_weights) {
            *r /= w;
        }
        Ok((rate, self.output(&field.density, &field.momentum)))
    }

    pub fn effort(&self, field: &PipeField) -> EffortField {
        crate::gas::effort(field, &self.gas)
    }

    pub fn hamiltonian(&self, field: &PipeField) -> f64 {
        weighted_hamiltonian(field, &self.gas, &self.density_weights, &self.momentum_weights)
    }

    /// Gas content per unit cross-section, `Σ w ρ`.
    pub fn mass(&self, density: &[f64]) -> f64 {
        density.iter().zip(&self.density_weights).map(|(r, w)| r * w).sum()
    }

    /// Friction dissipation `Σ Δx (λ/2D) m_j² |v_j|` (non-negative).
    pub fn dissipation(&self, density: &[f64], momentum: &[f64]) -> f64 {
        (0..self.n_cells())
            .map(|j| momentum[j] * self.friction_force(density, momentum, j))
            .sum()
    }

    pub fn power_terms(&self, field: &PipeField, input: &PipeInput) -> Result<PowerTerms> {
        self.check_state(&field.density, &field.momentum)?;
        let n = self.n_cells();
        let (mut fd, mut fm) = (vec![0.0; n], vec![0.0; n]);
        self.transport_into(&field.density, &field.momentum, input, &mut fd, &mut fm);
        let transport = self.effort_dot(field, &fd, &fm);
        let friction = -self.dissipation(&field.density, &field.momentum);

        let (rate, out) = self.rhs(field, input)?;
        let weighted_d: Vec<f64> = rate
            .density
            .iter()
            .zip(&self.density_weights)
            .map(|(r, w)| r * w)
            .collect();
        let weighted_m: Vec<f64> = rate
            .momentum
            .iter()
            .zip(&self.momentum_weights)
            .map(|(r, w)| r * w)
            .collect();
        Ok(PowerTerms {
            storage_rate: self.effort_dot(field, &weighted_d, &weighted_m),
            transport,
            friction,
            boundary: input.inlet_pressure * out.inlet_momentum - out.outlet_pressure * input.outlet_momentum,
        })
    }

    fn effort_dot(&self, field: &PipeField, f_density: &[f64], f_momentum: &[f64]) -> f64 {
        let p: f64 = field.density.iter().zip(f_density).map(|(r, f)| self.c2 * r * f).sum();
        let m: f64 = field.momentum.iter().zip(f_momentum).map(|(m, f)| m * f).sum();
        p + m
    }
}

/// Closed-form steady outlet pressure, `p(L) = √(p₀² - (λc²/D) m|m| L)`.
///
/// With `∂t = 0` the momentum is constant along the pipe and
/// `p dp/dx = -(λ c² / 2D) m |m|`, which integrates exactly.
pub fn steady_outlet_pressure(spec: &PipeSpec, gas: &GasProperties, inlet_pressure: f64, momentum: f64) -> Result<f64> {
    steady_pressure_at(spec, gas, inlet_pressure, momentum, spec.length)
}

/// Closed-form steady pressure at distance `x` from the inlet.
pub fn steady_pressure_at(
    spec: &PipeSpec,
    gas: &GasProperties,
    inlet_pressure: f64,
    momentum: f64,
    x: f64,
) -> Result<f64> {
    let c2 = gas.sound_speed_squared();
    let discriminant =
        inlet_pressure * inlet_pressure - spec.friction * c2 / spec.diameter * momentum * momentum.abs() * x;
    if discriminant < 0.0 {
        return Err(Error::InfeasibleFlow { discriminant });
    }
    Ok(discriminant.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn yamal(n: usize) -> PipeSpec {
        PipeSpec::new("yamal", 363_000.0, 1.422, 0.0018, n)
    }

    fn system(spec: PipeSpec) -> PipeSystem {
        PipeSystem::new(spec, GasProperties::benchmark()).unwrap()
    }

    #[test]
    fn benchmark_layout() {
        let sys = system(yamal(32));
        assert_eq!(sys.dx(), 11_343.75);
        assert_eq!(sys.n_states(), 64);
        assert_eq!(*sys.density_positions().last().unwrap(), 363_000.0);
        assert_eq!(sys.momentum_positions()[0], 0.5 * 11_343.75);
    }

    #[test]
    fn rejects_coarse_or_invalid_pipes() {
        let gas = GasProperties::benchmark();
        assert!(matches!(PipeSystem::new(yamal(1), gas), Err(Error::Config(_))));
        let mut spec = yamal(4);
        spec.diameter = 0.0;
        assert!(PipeSystem::new(spec.clone(), gas).is_err());
        spec.diameter = 1.0;
        spec.friction = -0.1;
        assert!(PipeSystem::new(spec, gas).is_err());
    }

    #[test]
    fn equilibrium_has_zero_rates() {
        let sys = system(yamal(16));
        let rho0 = 54.0;
        let field = PipeField::uniform(16, rho0, 0.0);
        let input = PipeInput::new(sys.gas().pressure(rho0), 0.0);
        let (rate, out) = sys.rhs(&field, &input).unwrap();
        assert!(rate.density.iter().chain(&rate.momentum).all(|r| *r == 0.0));
        assert_eq!(out.inlet_momentum, 0.0);
        assert_relative_eq!(out.outlet_pressure, sys.gas().pressure(rho0));
    }

    #[test]
    fn frictionless_uniform_flow_is_stationary() {
        let mut spec = yamal(8);
        spec.friction = 0.0;
        let sys = system(spec);
        let field = PipeField::uniform(8, 50.0, 250.0);
        let input = PipeInput::new(sys.gas().pressure(50.0), 250.0);
        let (rate, _) = sys.rhs(&field, &input).unwrap();
        assert!(rate.density.iter().chain(&rate.momentum).all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn closed_frictionless_pipe_is_lossless() {
        let mut spec = yamal(12);
        spec.friction = 0.0;
        let sys = system(spec);
        let mut field = PipeField::uniform(12, 50.0, 0.0);
        for (i, r) in field.density.iter_mut().enumerate() {
            *r += (i as f64 * 0.7).sin();
        }
        for (j, m) in field.momentum.iter_mut().enumerate().skip(1) {
            *m = 30.0 * (j as f64).cos();
        }
        // m₀ = 0 and m_L = 0 close both ports.
        let terms = sys.power_terms(&field, &PipeInput::new(8e6, 0.0)).unwrap();
        assert_eq!(terms.boundary, 0.0);
        let scale = sys.gas().pressure(51.0) * field.momentum.iter().map(|m| m.abs()).sum::<f64>();
        assert!(terms.storage_rate.abs() <= 1e-13 * scale);
        assert!(terms.transport.abs() <= 1e-13 * scale);
        assert_eq!(terms.friction, 0.0);
    }

    #[test]
    fn negative_density_is_rejected() {
        let sys = system(yamal(4));
        let mut field = PipeField::uniform(4, 50.0, 0.0);
        field.density[2] = -1.0;
        assert!(matches!(
            sys.rhs(&field, &PipeInput::new(8e6, 0.0)),
            Err(Error::NonPhysicalState(_))
        ));
    }

    #[test]
    fn steady_oracle_values() {
        let gas = GasProperties::benchmark();
        let spec = yamal(32);
        assert_eq!(steady_outlet_pressure(&spec, &gas, 8e6, 0.0).unwrap(), 8e6);
        // √(p₀² - (λc²/D) m² L) evaluated independently: 76.12 bar.
        let pl = steady_outlet_pressure(&spec, &gas, 8e6, 300.0).unwrap();
        assert_relative_eq!(pl, 7_612_174.095_619_813, max_relative = 1e-12);
        let reversed = steady_outlet_pressure(&spec, &gas, 8e6, -300.0).unwrap();
        assert_relative_eq!(reversed * reversed - 64e12, 64e12 - pl * pl, max_relative = 1e-12);
        assert!(matches!(
            steady_outlet_pressure(&spec, &gas, 1e5, 300.0),
            Err(Error::InfeasibleFlow { .. })
        ));
    }

    /// Weighted momentum-row residual of the analytic steady profile.
    fn steady_profile_residual(n: usize) -> f64 {
        let gas = GasProperties::benchmark();
        let spec = yamal(n);
        let sys = system(spec.clone());
        let (p0, m) = (8e6, 300.0);
        let density: Vec<f64> = sys
            .density_positions()
            .iter()
            .map(|x| gas.density(steady_pressure_at(&spec, &gas, p0, m, *x).unwrap()))
            .collect();
        let momentum = vec![m; n];
        let (mut fd, mut fm) = (vec![0.0; n], vec![0.0; n]);
        sys.flux_balance_into(&density, &momentum, &PipeInput::new(p0, m), &mut fd, &mut fm)
            .unwrap();
        assert!(fd.iter().all(|f| *f == 0.0));
        fm.iter().fold(0.0f64, |a, f| a.max(f.abs()))
    }

    #[test]
    fn steady_profile_residual_is_second_order() {
        let r16 = steady_profile_residual(16);
        let r32 = steady_profile_residual(32);
        let r64 = steady_profile_residual(64);
        for ratio in [r16 / r32, r32 / r64] {
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    fn random_state() -> impl Strategy<Value = (usize, PipeField, PipeInput, f64)> {
        (2usize..24).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(20.0f64..80.0, n),
                proptest::collection::vec(-500.0f64..500.0, n),
                4e6f64..1e7,
                -500.0f64..500.0,
                0.0f64..0.01,
            )
                .prop_map(|(n, d, m, p0, ml, lam)| (n, PipeField::new(d, m), PipeInput::new(p0, ml), lam))
        })
    }

    proptest! {
        #[test]
        fn power_identity((n, field, input, lam) in random_state()) {
            let sys = system(PipeSpec::new("p", 50_000.0, 0.9, lam, n));
            let t = sys.power_terms(&field, &input).unwrap();
            let rhs = t.boundary - sys.dissipation(&field.density, &field.momentum);
            let scale = t.boundary.abs().max(t.friction.abs()).max(t.storage_rate.abs());
            prop_assert!((t.storage_rate - rhs).abs() <= 1e-12 * scale);
            // Skew-symmetry: transport reduces to the boundary terms alone.
            prop_assert!((t.transport - t.boundary).abs() <= 1e-12 * scale);
            prop_assert!(t.friction <= 0.0);
            if lam == 0.0 {
                prop_assert_eq!(t.friction, 0.0);
            }
        }

        #[test]
        fn mass_balance_telescopes((n, field, input, lam) in random_state()) {
            let sys = system(PipeSpec::new("p", 50_000.0, 0.9, lam, n));
            let (rate, out) = sys.rhs(&field, &input).unwrap();
            let dmass = sys.mass(&rate.density);
            let expected = out.inlet_momentum - input.outlet_momentum;
            prop_assert!((dmass - expected).abs() <= 1e-9 * (1.0 + expected.abs() + field.momentum.iter().map(|m| m.abs()).sum::<f64>()));
        }
    }
}
