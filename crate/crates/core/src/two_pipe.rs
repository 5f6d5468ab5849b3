//! Two pipes joined by a compressor, written directly through the station's
//! coupling matrix `Ĝ(ẑ)` and boundary vector `û` instead of by network
//! assembly. The station relations are explicit in the states, so this is
//! a plain ODE.

use crate::compressor::{rows, CompressorModel, CompressorPortState, ModelKind};
use crate::error::{Error, Result};
use crate::gas::GasProperties;
use crate::network::PortRecord;
use crate::pipe::{PipeInput, PipeSpec, PipeSystem};
use crate::schedule::Profile;
use crate::timeloop::{integrate, steady_state, DaeSystem, NewtonStats, Sample, SolverConfig, TimeSeries};

#[derive(Debug, Clone)]
pub struct TwoPipeSystem {
    upstream: PipeSystem,
    downstream: PipeSystem,
    kind: ModelKind,
    supply_pressure: Profile,
    demand: Profile,
    setpoint: Profile,
    compressor_id: String,
}

/// Pipe inputs and station state derived from the differential states.
struct Coupled {
    upstream: PipeInput,
    downstream: PipeInput,
    ports: CompressorPortState,
}

impl TwoPipeSystem {
    pub fn new(
        upstream: PipeSpec,
        downstream: PipeSpec,
        gas: GasProperties,
        kind: ModelKind,
        supply_pressure: Profile,
        demand: Profile,
        setpoint: Profile,
    ) -> Result<Self> {
        Ok(Self {
            upstream: PipeSystem::new(upstream, gas)?,
            downstream: PipeSystem::new(downstream, gas)?,
            kind,
            supply_pressure,
            demand,
            setpoint,
            compressor_id: "compressor".into(),
        })
    }

    pub fn with_compressor_id(mut self, id: impl Into<String>) -> Self {
        self.compressor_id = id.into();
        self
    }

    fn split<'x>(&self, x: &'x [f64]) -> [&'x [f64]; 4] {
        let n1 = self.upstream.n_cells();
        let n2 = self.downstream.n_cells();
        let (a, rest) = x.split_at(n1);
        let (b, rest) = rest.split_at(n1);
        let (c, d) = rest.split_at(n2);
        [a, b, c, &d[..n2]]
    }

    fn model(&self, t: f64) -> CompressorModel {
        CompressorModel::new(
            self.kind,
            self.setpoint.value_at(t),
            self.upstream.gas().isentropic_exponent(),
        )
    }

    fn couple(&self, x: &[f64], t: f64) -> Result<Coupled> {
        let [d1, _, d2, m2] = self.split(x);
        let gas = self.upstream.gas();
        let ports = CompressorPortState {
            inlet_pressure: gas.pressure(d1[d1.len() - 1]),
            outlet_momentum: m2[0],
            downstream_outlet_pressure: gas.pressure(d2[d2.len() - 1]),
        };
        let model = self.model(t);
        let u_hat = model.setpoint_input(self.supply_pressure.value_at(t), self.demand.value_at(t))?;
        let u = model.coupling_matrix(&ports) * u_hat;
        Ok(Coupled {
            upstream: PipeInput::from_port_vector([u[rows::UPSTREAM_INLET], u[rows::UPSTREAM_OUTLET]]),
            downstream: PipeInput::from_port_vector([u[rows::DOWNSTREAM_INLET], u[rows::DOWNSTREAM_OUTLET]]),
            ports,
        })
    }

    pub fn initial_guess(&self) -> Vec<f64> {
        let gas = self.upstream.gas();
        let rho = gas.density(self.supply_pressure.value_at(0.0));
        let m = self.demand.value_at(0.0);
        let mut x = Vec::with_capacity(self.n_unknowns());
        for p in [&self.upstream, &self.downstream] {
            x.extend(std::iter::repeat_n(rho, p.n_cells()));
            x.extend(std::iter::repeat_n(m, p.n_cells()));
        }
        x
    }

    pub fn sample(&self, x: &[f64], t: f64) -> Result<Sample> {
        let [d1, m1, d2, m2] = self.split(x);
        let c = self.couple(x, t)?;
        let up = self.upstream.output(d1, m1);
        let down = self.downstream.output(d2, m2);
        let ports = vec![
            PortRecord {
                inlet_pressure: c.upstream.inlet_pressure,
                inlet_momentum: up.inlet_momentum,
                outlet_pressure: up.outlet_pressure,
                outlet_momentum: c.upstream.outlet_momentum,
            },
            PortRecord {
                inlet_pressure: c.downstream.inlet_pressure,
                inlet_momentum: down.inlet_momentum,
                outlet_pressure: down.outlet_pressure,
                outlet_momentum: c.downstream.outlet_momentum,
            },
        ];
        let power =
            c.downstream.inlet_pressure * c.ports.outlet_momentum - c.ports.inlet_pressure * c.upstream.outlet_momentum;
        let hamiltonian = self
            .upstream
            .hamiltonian(&crate::gas::PipeField::new(d1.to_vec(), m1.to_vec()))
            + self
                .downstream
                .hamiltonian(&crate::gas::PipeField::new(d2.to_vec(), m2.to_vec()));
        Ok(Sample {
            time: t,
            ports,
            hamiltonian,
            compressor_power: vec![power],
        })
    }

    pub fn steady(&self, cfg: &SolverConfig) -> Result<(Vec<f64>, NewtonStats)> {
        steady_state(self, self.initial_guess(), 0.0, cfg)
    }

    pub fn simulate(&self, cfg: &SolverConfig) -> Result<TimeSeries> {
        let (x0, _) = self.steady(cfg)?;
        let mut series = TimeSeries::new(
            vec![self.upstream.spec().id.clone(), self.downstream.spec().id.clone()],
            vec![self.compressor_id.clone()],
        );
        series.samples.push(self.sample(&x0, 0.0)?);
        integrate(self, x0, cfg, |info| {
            series.samples.push(self.sample(info.x, info.t)?);
            Ok(())
        })?;
        Ok(series)
    }
}

impl DaeSystem for TwoPipeSystem {
    fn n_differential(&self) -> usize {
        self.upstream.n_states() + self.downstream.n_states()
    }

    fn n_unknowns(&self) -> usize {
        self.n_differential()
    }

    fn residual(&self, x: &[f64], zdot: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        if x.len() != self.n_unknowns() || out.len() != x.len() || zdot.len() != x.len() {
            return Err(Error::Config("two-pipe residual called with mismatched lengths".into()));
        }
        let c = self.couple(x, t)?;
        let [d1, m1, d2, m2] = self.split(x);
        let n1 = self.upstream.n_states();
        let (out1, out2) = out.split_at_mut(n1);
        for (pipe, (d, m), input, out, zdot) in [
            (&self.upstream, (d1, m1), &c.upstream, out1, &zdot[..n1]),
            (&self.downstream, (d2, m2), &c.downstream, out2, &zdot[n1..]),
        ] {
            let (fd, fm) = out.split_at_mut(pipe.n_cells());
            pipe.flux_balance_into(d, m, input, fd, fm)?;
            let weights = pipe.density_weights().iter().chain(pipe.momentum_weights());
            for ((f, w), zd) in out.iter_mut().zip(weights).zip(zdot) {
                *f = w * zd - *f;
            }
        }
        Ok(())
    }

    fn row_scales(&self) -> Vec<f64> {
        let p_ref = self.supply_pressure.value_at(0.0);
        let m_ref = self.demand.max_abs().max(1.0);
        let mut s = Vec::with_capacity(self.n_unknowns());
        for p in [&self.upstream, &self.downstream] {
            s.extend(std::iter::repeat_n(1.0 / m_ref, p.n_cells()));
            s.extend(std::iter::repeat_n(1.0 / p_ref, p.n_cells()));
        }
        s
    }
}
