#![allow(dead_code)]

use std::path::PathBuf;

use phgas::app::{load_network, load_scenario, Scenario};
use phgas::pipe::{PipeInput, PipeSpec, PipeSystem};
use phgas::timeloop::DaeSystem;
use phgas::{GasProperties, NetworkSpec, Result};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn benchmark() -> (NetworkSpec, Scenario) {
    let spec = load_network(data("yamal.net.json")).expect("shipped network parses");
    let scenario = load_scenario(data("day.scn.json"), &spec).expect("shipped scenario parses");
    (spec, scenario)
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// A single pipe with both ends closed: the outlet momentum input is zero
/// and the inlet pressure is an algebraic unknown enforcing `m(0) = 0`.
pub struct ClosedPipe {
    pub pipe: PipeSystem,
    pub reference_pressure: f64,
    pub reference_momentum: f64,
}

impl ClosedPipe {
    pub fn new(length: f64, friction: f64, n: usize) -> Self {
        Self {
            pipe: PipeSystem::new(
                PipeSpec::new("closed", length, 1.422, friction, n),
                GasProperties::benchmark(),
            )
            .unwrap(),
            reference_pressure: 8e6,
            reference_momentum: 100.0,
        }
    }

    /// A sloshing initial state: a density bump and momenta that vanish at the inlet node.
    pub fn sloshing_state(&self) -> Vec<f64> {
        let n = self.pipe.n_cells();
        let gas = self.pipe.gas();
        let mut x = Vec::with_capacity(2 * n + 1);
        let xs = self.pipe.density_positions();
        let len = self.pipe.spec().length;
        for &pos in &xs {
            let s = pos / len;
            x.push(gas.density(self.reference_pressure * (1.0 + 0.05 * (std::f64::consts::PI * s).cos())));
        }
        x.extend((0..n).map(|j| if j == 0 { 0.0 } else { 80.0 * (j as f64 / n as f64) }));
        x.push(self.reference_pressure);
        x
    }

    pub fn hamiltonian(&self, x: &[f64]) -> f64 {
        let n = self.pipe.n_cells();
        self.pipe
            .hamiltonian(&phgas::gas::PipeField::new(x[..n].to_vec(), x[n..2 * n].to_vec()))
    }
}

impl DaeSystem for ClosedPipe {
    fn n_differential(&self) -> usize {
        self.pipe.n_states()
    }

    fn n_unknowns(&self) -> usize {
        self.pipe.n_states() + 1
    }

    fn residual(&self, x: &[f64], zdot: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        let n = self.pipe.n_cells();
        let input = PipeInput::new(x[2 * n], 0.0);
        let (fd, rest) = out.split_at_mut(n);
        let fm = &mut rest[..n];
        self.pipe.flux_balance_into(&x[..n], &x[n..2 * n], &input, fd, fm)?;
        let weights = self.pipe.density_weights().iter().chain(self.pipe.momentum_weights());
        for ((f, w), zd) in out[..2 * n].iter_mut().zip(weights).zip(zdot) {
            *f = w * zd - *f;
        }
        out[2 * n] = x[n];
        Ok(())
    }

    fn row_scales(&self) -> Vec<f64> {
        let n = self.pipe.n_cells();
        let mut s = vec![1.0 / self.reference_momentum; n];
        s.extend(std::iter::repeat_n(1.0 / self.reference_pressure, n));
        s.push(1.0 / self.reference_momentum);
        s
    }
}
