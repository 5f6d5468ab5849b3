//! Network simulation driver: steady initialization, stepping, recording.

use super::integrate::{integrate, steady_state, RunStats};
use super::solver::{NewtonStats, Pattern, SolverConfig};
use super::DaeSystem;
use crate::error::{Error, Result};
use crate::network::{GlobalSystem, NetworkInputs, PortRecord};
use crate::schedule::InputSchedule;

/// A [`GlobalSystem`] driven by an input schedule.
#[derive(Debug, Clone)]
pub struct NetworkDae<'a> {
    system: &'a GlobalSystem,
    schedule: &'a InputSchedule,
    reference_pressure: f64,
    reference_momentum: f64,
    scales: Vec<f64>,
    pattern: Pattern,
}

impl<'a> NetworkDae<'a> {
    pub fn new(system: &'a GlobalSystem, schedule: &'a InputSchedule) -> Result<Self> {
        let counts = (
            schedule.supply_pressure.len(),
            schedule.demand.len(),
            schedule.setpoints.len(),
        );
        let expected = (
            system.supply_ids().len(),
            system.demand_ids().len(),
            system.compressors().len(),
        );
        if counts != expected {
            return Err(Error::Config(format!(
                "schedule provides {counts:?} (supply, demand, setpoint) profiles, network needs {expected:?}"
            )));
        }
        let reference_pressure = schedule
            .reference_pressure()
            .or(system.nominal_pressure())
            .filter(|p| *p > 0.0)
            .ok_or_else(|| Error::Config("no positive reference pressure".into()))?;
        let reference_momentum = schedule.reference_momentum();
        let scales = system.row_scales(reference_pressure, reference_momentum);

        let mut probe = system.initial_guess(reference_pressure, reference_momentum);
        for (i, v) in probe.iter_mut().enumerate() {
            *v *= 1.0 + 0.01 * ((i + 1) as f64).sin();
        }
        let inputs = schedule.inputs_at(0.0);
        let zdot = vec![0.0; system.n_differential()];
        let n = system.n_unknowns();
        let pattern = Pattern::detect(|x, out| system.residual(x, &zdot, &inputs, out), &probe, n)?;

        Ok(Self {
            system,
            schedule,
            reference_pressure,
            reference_momentum,
            scales,
            pattern,
        })
    }

    pub fn system(&self) -> &GlobalSystem {
        self.system
    }

    pub fn inputs_at(&self, t: f64) -> NetworkInputs {
        self.schedule.inputs_at(t)
    }

    pub fn reference_pressure(&self) -> f64 {
        self.reference_pressure
    }

    pub fn reference_momentum(&self) -> f64 {
        self.reference_momentum
    }

    /// Flat start: uniform reference pressure, momentum at the net demand.
    pub fn initial_guess(&self) -> Vec<f64> {
        let net: f64 = self.schedule.inputs_at(0.0).demand.iter().sum();
        self.system.initial_guess(self.reference_pressure, net)
    }

    pub fn sample(&self, x: &[f64], t: f64) -> Sample {
        Sample {
            time: t,
            ports: self.system.port_records(x),
            hamiltonian: self.system.hamiltonian(x),
            compressor_power: (0..self.system.compressors().len())
                .map(|c| self.system.compressor_power(c, x))
                .collect(),
        }
    }
}

impl DaeSystem for NetworkDae<'_> {
    fn n_differential(&self) -> usize {
        self.system.n_differential()
    }

    fn n_unknowns(&self) -> usize {
        self.system.n_unknowns()
    }

    fn residual(&self, x: &[f64], zdot: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        self.system.residual(x, zdot, &self.schedule.inputs_at(t), out)
    }

    fn row_scales(&self) -> Vec<f64> {
        self.scales.clone()
    }

    fn sparsity(&self) -> Option<Pattern> {
        Some(self.pattern.clone())
    }
}

/// Port quantities, stored energy and compressor power at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    /// One record per pipe, in pipe order.
    pub ports: Vec<PortRecord>,
    pub hamiltonian: f64,
    pub compressor_power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub pipe_ids: Vec<String>,
    pub compressor_ids: Vec<String>,
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn new(pipe_ids: Vec<String>, compressor_ids: Vec<String>) -> Self {
        Self {
            pipe_ids,
            compressor_ids,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec!["time_s".to_string()];
        for p in &self.pipe_ids {
            for end in ["in", "out"] {
                names.push(format!("{p}.{end}.p_Pa"));
                names.push(format!("{p}.{end}.m"));
            }
        }
        names.push("H_total".into());
        names.extend(self.compressor_ids.iter().map(|c| format!("{c}.power")));
        names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        let s = &self.samples[i];
        let mut row = Vec::with_capacity(2 + 4 * s.ports.len() + s.compressor_power.len());
        row.push(s.time);
        for p in &s.ports {
            row.extend([p.inlet_pressure, p.inlet_momentum, p.outlet_pressure, p.outlet_momentum]);
        }
        row.push(s.hamiltonian);
        row.extend(&s.compressor_power);
        row
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_names().iter().position(|c| c == name)?;
        Some((0..self.len()).map(|i| self.row(i)[j]).collect())
    }
}

/// Mass bookkeeping over a run, per pipe and for the network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MassLedger {
    pub initial_mass: Vec<f64>,
    pub final_mass: Vec<f64>,
    /// `Σ dt (m₀ - m_L)` at step midpoints, per pipe.
    pub boundary_flux: Vec<f64>,
    /// Gas delivered by the supply nodes, `Σ dt |supply outflow|` at midpoints.
    pub throughput: f64,
}

impl MassLedger {
    /// `|Δ(Σ w ρ) - Σ dt (net boundary flux)|` for the whole network.
    pub fn network_discrepancy(&self) -> f64 {
        let change: f64 = self.final_mass.iter().sum::<f64>() - self.initial_mass.iter().sum::<f64>();
        (change - self.boundary_flux.iter().sum::<f64>()).abs()
    }

    pub fn max_pipe_discrepancy(&self) -> f64 {
        (0..self.final_mass.len())
            .map(|e| (self.final_mass[e] - self.initial_mass[e] - self.boundary_flux[e]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub series: TimeSeries,
    pub stats: RunStats,
    pub ledger: MassLedger,
    pub warnings: Vec<String>,
    pub final_state: Vec<f64>,
}

/// Relative density floor below which a warning is raised.
const LOW_DENSITY_FRACTION: f64 = 0.05;

struct Watch {
    reverse_flow: Vec<bool>,
    low_density: bool,
    warnings: Vec<String>,
}

impl Watch {
    fn check(&mut self, dae: &NetworkDae<'_>, x: &[f64], t: f64) {
        let sys = dae.system();
        for (c, flagged) in self.reverse_flow.iter_mut().enumerate() {
            if !*flagged && sys.compressor_flows(c, x).0 < 0.0 {
                *flagged = true;
                self.warnings.push(format!(
                    "reverse flow through compressor `{}` at t = {t} s",
                    sys.compressors()[c].id
                ));
            }
        }
        let floor = LOW_DENSITY_FRACTION * sys.gas().density(dae.reference_pressure());
        let min = sys.min_density(x);
        if !self.low_density && min < floor {
            self.low_density = true;
            self.warnings.push(format!(
                "density {min:.4e} kg/m³ near zero at t = {t} s (floor {floor:.4e})"
            ));
        }
    }
}

/// Steady state for the inputs at `t = 0`.
pub fn steady_solution(
    system: &GlobalSystem,
    schedule: &InputSchedule,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Sample, NewtonStats)> {
    let dae = NetworkDae::new(system, schedule)?;
    let (x, stats) = steady_state(&dae, dae.initial_guess(), 0.0, cfg)?;
    let sample = dae.sample(&x, 0.0);
    Ok((x, sample, stats))
}

pub fn simulate(system: &GlobalSystem, schedule: &InputSchedule, cfg: &SolverConfig) -> Result<Simulation> {
    cfg.validate()?;
    let dae = NetworkDae::new(system, schedule)?;
    let (x0, steady) = steady_state(&dae, dae.initial_guess(), 0.0, cfg)?;

    let mut series = TimeSeries::new(system.pipe_ids(), system.compressor_ids());
    series.samples.push(dae.sample(&x0, 0.0));
    let mut watch = Watch {
        reverse_flow: vec![false; system.compressors().len()],
        low_density: false,
        warnings: Vec::new(),
    };
    watch.check(&dae, &x0, 0.0);

    let n_pipes = system.pipes().len();
    let supply_nodes: Vec<usize> = system
        .supply_ids()
        .iter()
        .map(|id| system.node_index(id).expect("supply node is assembled"))
        .collect();
    let mut ledger = MassLedger {
        initial_mass: system.pipe_masses(&x0),
        final_mass: Vec::new(),
        boundary_flux: vec![0.0; n_pipes],
        throughput: 0.0,
    };

    let (x_end, mut stats) = integrate(&dae, x0, cfg, |info| {
        let dt = info.t - info.t_prev;
        let mid = info.midpoint;
        for (e, flux) in ledger.boundary_flux.iter_mut().enumerate() {
            let range = system.pipe_state_range(e);
            let m0 = mid[range.start + system.pipes()[e].n_cells()];
            let m_l = -mid[system.mu_index(2 * e + 1)];
            *flux += dt * (m0 - m_l);
        }
        let supplied: f64 = supply_nodes
            .iter()
            .flat_map(|v| system.node_ports(*v))
            .map(|p| system.port_inflow(*p, mid))
            .sum();
        ledger.throughput += dt * supplied.abs();
        series.samples.push(dae.sample(info.x, info.t));
        watch.check(&dae, info.x, info.t);
        Ok(())
    })?;
    stats.steady_iterations = steady.iterations;
    ledger.final_mass = system.pipe_masses(&x_end);
    if stats.projection_fallbacks > 0 {
        watch.warnings.push(format!(
            "algebraic recovery fell back to extrapolation in {} step(s)",
            stats.projection_fallbacks
        ));
    }
    Ok(Simulation {
        series,
        stats,
        ledger,
        warnings: watch.warnings,
        final_state: x_end,
    })
}
