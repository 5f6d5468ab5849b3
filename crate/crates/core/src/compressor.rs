//! Compressor stations modelled as jump conditions between two pipe ports.
//!
//! A model pairs a framework (fixed compression ratio `FC` or fixed outlet
//! pressure `FP`) with an assumption on the momentum across the station
//! (constant velocity `AV` or constant momentum `AM`). In a two-pipe system the
//! station enters only through the state-dependent input matrix `Ĝ(ẑ)` and
//! the boundary vector `û`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::GasProperties;

/// 6×4 input matrix of the two-pipe system. Rows: pipe-1 state block,
/// pipe-1 inlet port, pipe-1 outlet port, pipe-2 state block, pipe-2 inlet
/// port, pipe-2 outlet port.
pub type CouplingMatrix = SMatrix<f64, 6, 4>;
pub type BoundaryVector = SVector<f64, 4>;

pub mod rows {
    pub const UPSTREAM_STATE: usize = 0;
    pub const UPSTREAM_INLET: usize = 1;
    pub const UPSTREAM_OUTLET: usize = 2;
    pub const DOWNSTREAM_STATE: usize = 3;
    pub const DOWNSTREAM_INLET: usize = 4;
    pub const DOWNSTREAM_OUTLET: usize = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Framework {
    /// Compression ratio `c̃ = p_out / p_in` is prescribed.
    #[serde(rename = "FC")]
    FixedRatio,
    /// Outlet pressure `p_out` is prescribed.
    #[serde(rename = "FP")]
    FixedPressure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Assumption {
    /// `m_out = c̃^{1/κ} m_in`
    #[serde(rename = "AV")]
    ConstantVelocity,
    /// `m_out = m_in`
    #[serde(rename = "AM")]
    ConstantMomentum,
}

impl Framework {
    pub fn code(self) -> &'static str {
        match self {
            Framework::FixedRatio => "FC",
            Framework::FixedPressure => "FP",
        }
    }
}

impl Assumption {
    pub fn code(self) -> &'static str {
        match self {
            Assumption::ConstantVelocity => "AV",
            Assumption::ConstantMomentum => "AM",
        }
    }
}

/// Framework and assumption pair, written `fc-av`, `fp-am`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelKind {
    pub framework: Framework,
    pub assumption: Assumption,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::new(Framework::FixedRatio, Assumption::ConstantVelocity),
        ModelKind::new(Framework::FixedRatio, Assumption::ConstantMomentum),
        ModelKind::new(Framework::FixedPressure, Assumption::ConstantVelocity),
        ModelKind::new(Framework::FixedPressure, Assumption::ConstantMomentum),
    ];

    pub const fn new(framework: Framework, assumption: Assumption) -> Self {
        Self { framework, assumption }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}",
            self.framework.code().to_lowercase(),
            self.assumption.code().to_lowercase()
        )
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (fw, asm) = lower
            .split_once(['-', '_'])
            .ok_or_else(|| Error::Config(format!("unknown compressor model `{s}`")))?;
        let framework = match fw {
            "fc" => Framework::FixedRatio,
            "fp" => Framework::FixedPressure,
            _ => return Err(Error::Config(format!("unknown compressor framework in `{s}`"))),
        };
        let assumption = match asm {
            "av" => Assumption::ConstantVelocity,
            "am" => Assumption::ConstantMomentum,
            _ => return Err(Error::Config(format!("unknown compressor assumption in `{s}`"))),
        };
        Ok(Self::new(framework, assumption))
    }
}

/// A compressor model together with its current setpoint: the ratio `c̃`
/// under `FC`, the outlet pressure in Pa under `FP`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressorModel {
    pub kind: ModelKind,
    pub setpoint: f64,
    pub kappa: f64,
}

/// Boundary efforts seen by the station in a two-pipe arrangement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressorPortState {
    /// `p₁(L)`, the station inlet pressure.
    pub inlet_pressure: f64,
    /// `m₂(0)`, the momentum fed into the downstream pipe.
    pub outlet_momentum: f64,
    /// `p₂(L)`, diagnostic only.
    pub downstream_outlet_pressure: f64,
}

/// External energy exchange of a two-pipe system with a station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalPower {
    pub total: f64,
    /// Power added by the station itself (per unit cross-section).
    pub compressor: f64,
}

impl CompressorModel {
    pub fn new(kind: ModelKind, setpoint: f64, kappa: f64) -> Self {
        Self { kind, setpoint, kappa }
    }

    pub fn fixed_ratio(assumption: Assumption, ratio: f64, gas: &GasProperties) -> Self {
        Self::new(
            ModelKind::new(Framework::FixedRatio, assumption),
            ratio,
            gas.isentropic_exponent(),
        )
    }

    pub fn fixed_pressure(assumption: Assumption, outlet_pressure: f64, gas: &GasProperties) -> Self {
        Self::new(
            ModelKind::new(Framework::FixedPressure, assumption),
            outlet_pressure,
            gas.isentropic_exponent(),
        )
    }

    pub fn framework(&self) -> Framework {
        self.kind.framework
    }

    pub fn assumption(&self) -> Assumption {
        self.kind.assumption
    }

    pub fn with_setpoint(mut self, setpoint: f64) -> Self {
        self.setpoint = setpoint;
        self
    }

    /// Checks the setpoint. Expansion under `FC` (`c̃ < 1`) is allowed but
    /// reported back as a warning.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !self.setpoint.is_finite() {
            return Err(Error::Config(format!(
                "non-finite compressor setpoint {}",
                self.setpoint
            )));
        }
        match self.framework() {
            Framework::FixedRatio if self.setpoint <= 0.0 => Err(Error::Config(format!(
                "compression ratio must be positive, got {}",
                self.setpoint
            ))),
            Framework::FixedRatio if self.setpoint < 1.0 => {
                Ok(vec![format!("compression ratio {} < 1 expands the gas", self.setpoint)])
            }
            Framework::FixedPressure if self.setpoint <= 0.0 => Err(Error::Config(format!(
                "compressor outlet pressure must be positive, got {}",
                self.setpoint
            ))),
            _ => Ok(Vec::new()),
        }
    }

    /// Ratio `p_out / p_in` realised for a given inlet pressure.
    pub fn effective_ratio(&self, inlet_pressure: f64) -> f64 {
        match self.framework() {
            Framework::FixedRatio => self.setpoint,
            Framework::FixedPressure => self.setpoint / inlet_pressure,
        }
    }

    pub fn outlet_pressure(&self, inlet_pressure: f64) -> f64 {
        match self.framework() {
            Framework::FixedRatio => self.setpoint * inlet_pressure,
            Framework::FixedPressure => self.setpoint,
        }
    }

    /// Momentum leaving the station for a given inflow. `inlet_pressure` is
    /// needed only to form the ratio under `FP`.
    pub fn momentum_jump(&self, inflow: f64, inlet_pressure: f64) -> f64 {
        match self.assumption() {
            Assumption::ConstantMomentum => inflow,
            Assumption::ConstantVelocity => self.effective_ratio(inlet_pressure).powf(1.0 / self.kappa) * inflow,
        }
    }

    /// `u_C`, the station's share of the boundary vector.
    pub fn compressor_input(&self) -> [f64; 2] {
        let first = match self.assumption() {
            Assumption::ConstantMomentum => 1.0,
            Assumption::ConstantVelocity => self.setpoint.powf(-1.0 / self.kappa),
        };
        [first, self.setpoint]
    }

    /// Boundary vector `û = [p₀; u_C; -m_L]`.
    pub fn setpoint_input(&self, inlet_pressure: f64, outlet_momentum: f64) -> Result<BoundaryVector> {
        if self.framework() == Framework::FixedPressure && !(self.setpoint > 0.0) {
            return Err(Error::Config(format!(
                "compressor outlet pressure must be positive, got {}",
                self.setpoint
            )));
        }
        let [uc0, uc1] = self.compressor_input();
        Ok(BoundaryVector::new(inlet_pressure, uc0, uc1, -outlet_momentum))
    }

    /// State-dependent factor multiplying `u_C[0]` in the momentum coupling.
    pub fn momentum_coupling(&self, inlet_pressure: f64) -> f64 {
        match self.kind {
            ModelKind {
                framework: Framework::FixedPressure,
                assumption: Assumption::ConstantVelocity,
            } => inlet_pressure.powf(1.0 / self.kappa),
            _ => 1.0,
        }
    }

    /// State-dependent factor multiplying `u_C[1]` in the pressure coupling.
    pub fn pressure_coupling(&self, inlet_pressure: f64) -> f64 {
        match self.framework() {
            Framework::FixedRatio => inlet_pressure,
            Framework::FixedPressure => 1.0,
        }
    }

    /// The input matrix `Ĝ(ẑ)` of the two-pipe system.
    pub fn coupling_matrix(&self, ports: &CompressorPortState) -> CouplingMatrix {
        let mut g = CouplingMatrix::zeros();
        g[(rows::UPSTREAM_INLET, 0)] = 1.0;
        g[(rows::UPSTREAM_OUTLET, 1)] = -ports.outlet_momentum * self.momentum_coupling(ports.inlet_pressure);
        g[(rows::DOWNSTREAM_INLET, 2)] = self.pressure_coupling(ports.inlet_pressure);
        g[(rows::DOWNSTREAM_OUTLET, 3)] = 1.0;
        g
    }

    /// `ŷ = Ĝᵀ ê`, with `ê` holding the port efforts
    /// `[m₁(0), p₁(L), m₂(0), p₂(L)]` (state-block rows carry no weight).
    pub fn port_output(&self, ports: &CompressorPortState, upstream_inlet_momentum: f64) -> BoundaryVector {
        let mut e = SVector::<f64, 6>::zeros();
        e[rows::UPSTREAM_INLET] = upstream_inlet_momentum;
        e[rows::UPSTREAM_OUTLET] = ports.inlet_pressure;
        e[rows::DOWNSTREAM_INLET] = ports.outlet_momentum;
        e[rows::DOWNSTREAM_OUTLET] = ports.downstream_outlet_pressure;
        self.coupling_matrix(ports).transpose() * e
    }

    /// External energy exchange given the two boundary powers `p₀ m₁(0)`
    /// and `p₂(L) m₂(L)`.
    pub fn external_power(
        &self,
        ports: &CompressorPortState,
        inlet_boundary_power: f64,
        outlet_boundary_power: f64,
    ) -> ExternalPower {
        let p_in = ports.inlet_pressure;
        let m = ports.outlet_momentum;
        let k = self.kappa;
        let compressor = match (self.framework(), self.assumption()) {
            (Framework::FixedRatio, Assumption::ConstantVelocity) => {
                let c = self.setpoint;
                (c - c.powf(-1.0 / k)) * p_in * m
            }
            (Framework::FixedRatio, Assumption::ConstantMomentum) => (self.setpoint - 1.0) * p_in * m,
            (Framework::FixedPressure, Assumption::ConstantVelocity) => {
                let p_out = self.setpoint;
                (p_out - p_in * (p_in / p_out).powf(1.0 / k)) * m
            }
            (Framework::FixedPressure, Assumption::ConstantMomentum) => (self.setpoint - p_in) * m,
        };
        ExternalPower {
            total: inlet_boundary_power - outlet_boundary_power + compressor,
            compressor,
        }
    }
}

/// Specific enthalpy added by ideal adiabatic compression, J/kg.
pub fn adiabatic_enthalpy(
    gas: &GasProperties,
    inlet_pressure: f64,
    outlet_pressure: f64,
    inlet_temperature: f64,
) -> Result<f64> {
    for (name, v) in [
        ("inlet pressure", inlet_pressure),
        ("outlet pressure", outlet_pressure),
        ("inlet temperature", inlet_temperature),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let k = gas.isentropic_exponent();
    Ok(gas.compressibility()
        * inlet_temperature
        * gas.specific_gas_constant()
        * (k / (k - 1.0))
        * ((outlet_pressure / inlet_pressure).powf((k - 1.0) / k) - 1.0))
}
