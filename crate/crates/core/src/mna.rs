//! Complex-phasor modified nodal analysis.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per inductor and per voltage source. Coupled inductors share the branch
//! equations `v = jω [La M; M Lb] i` with `M = k·sqrt(La·Lb)`.
//!
//! Element currents are reported in the direction terminal 1 → element →
//! terminal 2 (`out_p → out_n` for a VCCS).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::netlist::{polar_deg, validate_netlist, ElementKind, Netlist, NodeId};
use crate::response::{FrequencyGrid, FrequencyResponse};

pub const BOLTZMANN: f64 = 1.380649e-23;

/// Temperature used when none is given, in kelvin.
pub const DEFAULT_TEMPERATURE: f64 = 300.0;

/// `k = 1` is replaced by `1 - PERFECT_COUPLING_EPSILON`; the branch inductance
/// matrix is singular at exactly one.
pub const PERFECT_COUPLING_EPSILON: f64 = 1e-9;

/// Fraction of the network's largest current below which a node's own
/// current scale is not trusted in KCL checks.
pub const KCL_SCALE_FLOOR: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MnaOptions {
    pub coupling_epsilon: f64,
}

impl Default for MnaOptions {
    fn default() -> Self {
        Self {
            coupling_epsilon: PERFECT_COUPLING_EPSILON,
        }
    }
}

/// Quantity read out of a solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Probe {
    Node(String),
    Diff(String, String),
    Current(String),
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probe::Node(n) => write!(f, "v({n})"),
            Probe::Diff(a, b) => write!(f, "v({a},{b})"),
            Probe::Current(e) => write!(f, "i({e})"),
        }
    }
}

impl FromStr for Probe {
    type Err = Error;

    /// `v(node)`, `v(a,b)` or `i(element)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse probe `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let inner = &s[open + 1..s.len() - 1];
        let args: Vec<&str> = inner.split(',').map(str::trim).collect();
        if args.iter().any(|a| a.is_empty()) {
            return Err(bad());
        }
        match (s[..open].to_ascii_lowercase().as_str(), args.as_slice()) {
            ("v", [n]) => Ok(Probe::Node(n.to_string())),
            ("v", [a, b]) => Ok(Probe::Diff(a.to_string(), b.to_string())),
            ("i", [e]) => Ok(Probe::Current(e.to_string())),
            _ => Err(bad()),
        }
    }
}

/// Solution of the nodal system at one frequency.
#[derive(Debug, Clone)]
pub struct AcSolution {
    pub frequency: f64,
    /// Indexed by node id; entry 0 is ground and always zero.
    pub node_voltages: Vec<Complex64>,
    /// Indexed like the netlist elements; zero for mutual couplings.
    pub element_currents: Vec<Complex64>,
    node_names: Arc<[String]>,
    element_names: Arc<[String]>,
}

impl AcSolution {
    pub fn voltage(&self, node: &str) -> Result<Complex64> {
        let i = if node == "0" || node.eq_ignore_ascii_case("gnd") {
            0
        } else {
            self.node_names
                .iter()
                .position(|n| n == node)
                .ok_or_else(|| Error::Unknown {
                    kind: "node",
                    name: node.to_string(),
                })?
        };
        Ok(self.node_voltages[i])
    }

    pub fn current(&self, element: &str) -> Result<Complex64> {
        self.element_names
            .iter()
            .position(|n| n == element)
            .map(|i| self.element_currents[i])
            .ok_or_else(|| Error::Unknown {
                kind: "element",
                name: element.to_string(),
            })
    }

    pub fn probe(&self, probe: &Probe) -> Result<Complex64> {
        match probe {
            Probe::Node(n) => self.voltage(n),
            Probe::Diff(a, b) => Ok(self.voltage(a)? - self.voltage(b)?),
            Probe::Current(e) => self.current(e),
        }
    }

    /// Per node: `(|Σ currents leaving|, largest incident current magnitude)`.
    ///
    /// A transconductor counts as incident on its control nodes as well: a
    /// node that only carries roundoff-level current but steers a VCCS is
    /// judged against the current it steers.
    pub fn kcl_residuals(&self, net: &Netlist) -> Vec<(f64, f64)> {
        let n = net.node_count();
        let mut sum = vec![ZERO; n];
        let mut scale = vec![0.0f64; n];
        for (e, i) in net.elements().iter().zip(&self.element_currents) {
            if let Some((a, b)) = e.terminals() {
                sum[a.0] += i;
                sum[b.0] -= i;
            }
            for node in e.all_nodes() {
                scale[node.0] = scale[node.0].max(i.norm());
            }
        }
        sum.iter()
            .zip(scale)
            .skip(1)
            .map(|(s, m)| (s.norm(), m))
            .collect()
    }

    /// Largest KCL residual relative to the incident current scale at its node.
    ///
    /// The local scale is floored at `KCL_SCALE_FLOOR` times the largest
    /// current anywhere in the network, so nodes whose currents are all
    /// roundoff do not divide noise by noise.
    pub fn max_kcl_ratio(&self, net: &Netlist) -> f64 {
        let res = self.kcl_residuals(net);
        let global = res.iter().map(|&(_, m)| m).fold(0.0, f64::max);
        let floor = global * KCL_SCALE_FLOOR;
        res.into_iter()
            .map(|(r, m)| {
                let m = m.max(floor);
                if m > 0.0 {
                    r / m
                } else if r > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
enum Sources {
    /// Every independent source at its netlist amplitude.
    All,
    /// Only the given element index; the rest are zeroed.
    Only(usize),
    None,
}

/// Netlist compiled into a fixed unknown ordering, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct MnaSystem<'a> {
    net: &'a Netlist,
    /// Element index → branch unknown (inductors and voltage sources).
    branch_of: Vec<Option<usize>>,
    couplings: Vec<(usize, usize, f64)>,
    unknowns: usize,
    node_names: Arc<[String]>,
    element_names: Arc<[String]>,
}

impl<'a> MnaSystem<'a> {
    pub fn new(net: &'a Netlist) -> Result<Self> {
        Self::with_options(net, MnaOptions::default())
    }

    pub fn with_options(net: &'a Netlist, options: MnaOptions) -> Result<Self> {
        let violations = validate_netlist(net);
        if !violations.is_empty() {
            let reasons: Vec<_> = violations.iter().map(|v| v.reason.as_str()).collect();
            return Err(Error::InvalidNetlist(reasons.join("; ")));
        }
        let nodes = net.node_count() - 1;
        let mut branch_of = vec![None; net.elements().len()];
        let mut next = nodes;
        for (i, e) in net.elements().iter().enumerate() {
            if matches!(
                e.kind,
                ElementKind::Inductor { .. } | ElementKind::VSource { .. }
            ) {
                branch_of[i] = Some(next);
                next += 1;
            }
        }
        let kmax = 1.0 - options.coupling_epsilon;
        let mut couplings = Vec::new();
        for e in net.elements() {
            if let ElementKind::MutualCoupling { la, lb, k } = &e.kind {
                let lookup = |name: &str| {
                    let i = net.element_index(name).expect("validated coupling");
                    let l = match net.elements()[i].kind {
                        ElementKind::Inductor { henries, .. } => henries,
                        _ => unreachable!("validated coupling"),
                    };
                    (branch_of[i].expect("inductor branch"), l)
                };
                let (ba, l_a) = lookup(la);
                let (bb, l_b) = lookup(lb);
                let k_eff = k.min(kmax);
                couplings.push((ba, bb, k_eff * (l_a * l_b).sqrt()));
            }
        }
        Ok(Self {
            net,
            branch_of,
            couplings,
            unknowns: next,
            node_names: net.node_names().to_vec().into(),
            element_names: net.elements().iter().map(|e| e.name.clone()).collect(),
        })
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.net
    }

    /// Row/column of a node voltage unknown; `None` for ground.
    fn row(node: NodeId) -> Option<usize> {
        (!node.is_ground()).then(|| node.0 - 1)
    }

    pub fn matrix(&self, freq: f64) -> DenseMatrix {
        let w = 2.0 * std::f64::consts::PI * freq;
        let mut a = DenseMatrix::zeros(self.unknowns);
        let admittance = |a: &mut DenseMatrix, n1: NodeId, n2: NodeId, y: Complex64| {
            let (r1, r2) = (Self::row(n1), Self::row(n2));
            if let Some(i) = r1 {
                a.add(i, i, y);
            }
            if let Some(j) = r2 {
                a.add(j, j, y);
            }
            if let (Some(i), Some(j)) = (r1, r2) {
                a.add(i, j, -y);
                a.add(j, i, -y);
            }
        };
        for (idx, e) in self.net.elements().iter().enumerate() {
            match e.kind {
                ElementKind::Resistor { n1, n2, ohms, .. } => {
                    admittance(&mut a, n1, n2, Complex64::new(1.0 / ohms, 0.0))
                }
                ElementKind::Capacitor { n1, n2, farads } => {
                    admittance(&mut a, n1, n2, Complex64::new(0.0, w * farads))
                }
                ElementKind::Inductor { n1, n2, henries } => {
                    let b = self.branch_of[idx].expect("inductor branch");
                    self.stamp_branch(&mut a, b, n1, n2);
                    a.add(b, b, Complex64::new(0.0, -w * henries));
                }
                ElementKind::VSource { n1, n2, .. } => {
                    let b = self.branch_of[idx].expect("source branch");
                    self.stamp_branch(&mut a, b, n1, n2);
                }
                ElementKind::Vccs {
                    out_p,
                    out_n,
                    ctrl_p,
                    ctrl_n,
                    gm,
                    ..
                } => {
                    let g = Complex64::new(gm, 0.0);
                    for (out, so) in [(out_p, 1.0), (out_n, -1.0)] {
                        for (ctrl, sc) in [(ctrl_p, 1.0), (ctrl_n, -1.0)] {
                            if let (Some(r), Some(c)) = (Self::row(out), Self::row(ctrl)) {
                                a.add(r, c, g * (so * sc));
                            }
                        }
                    }
                }
                ElementKind::ISource { .. } | ElementKind::MutualCoupling { .. } => {}
            }
        }
        for &(ba, bb, m) in &self.couplings {
            let z = Complex64::new(0.0, -w * m);
            a.add(ba, bb, z);
            a.add(bb, ba, z);
        }
        a
    }

    fn stamp_branch(&self, a: &mut DenseMatrix, b: usize, n1: NodeId, n2: NodeId) {
        if let Some(i) = Self::row(n1) {
            a.add(i, b, ONE);
            a.add(b, i, ONE);
        }
        if let Some(j) = Self::row(n2) {
            a.add(j, b, -ONE);
            a.add(b, j, -ONE);
        }
    }

    fn rhs(&self, sources: Sources) -> Vec<Complex64> {
        let mut b = vec![ZERO; self.unknowns];
        for (idx, e) in self.net.elements().iter().enumerate() {
            let active = match sources {
                Sources::All => true,
                Sources::Only(i) => i == idx,
                Sources::None => false,
            };
            if !active {
                continue;
            }
            match e.kind {
                ElementKind::VSource {
                    magnitude,
                    phase_deg,
                    ..
                } => {
                    b[self.branch_of[idx].expect("source branch")] += polar_deg(magnitude, phase_deg);
                }
                ElementKind::ISource {
                    n1,
                    n2,
                    magnitude,
                    phase_deg,
                } => {
                    let i = polar_deg(magnitude, phase_deg);
                    if let Some(r) = Self::row(n1) {
                        b[r] -= i;
                    }
                    if let Some(r) = Self::row(n2) {
                        b[r] += i;
                    }
                }
                _ => {}
            }
        }
        b
    }

    pub fn factor(&self, freq: f64) -> Result<LuFactors> {
        if !(freq.is_finite() && freq > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "frequency must be positive, got {freq}"
            )));
        }
        LuFactors::factor(self.matrix(freq)).map_err(|p| {
            let nodes = self.net.node_count() - 1;
            let hint = if p.column < nodes {
                format!(
                    "pivot {:.3e} below {:.3e} at node `{}` (floating node?)",
                    p.magnitude,
                    p.threshold,
                    self.net.node_name(NodeId(p.column + 1))
                )
            } else {
                let element = self
                    .branch_of
                    .iter()
                    .position(|b| *b == Some(p.column))
                    .map(|i| self.net.elements()[i].name.as_str())
                    .unwrap_or("?");
                format!(
                    "pivot {:.3e} below {:.3e} at branch `{element}` (inductor loop or perfect-coupling degeneracy?)",
                    p.magnitude, p.threshold
                )
            };
            Error::Singular {
                freq_hz: freq,
                hint,
            }
        })
    }

    fn assemble_solution(&self, freq: f64, x: &[Complex64]) -> AcSolution {
        let w = 2.0 * std::f64::consts::PI * freq;
        let mut v = Vec::with_capacity(self.net.node_count());
        v.push(ZERO);
        v.extend_from_slice(&x[..self.net.node_count() - 1]);
        let currents = self
            .net
            .elements()
            .iter()
            .enumerate()
            .map(|(idx, e)| match e.kind {
                ElementKind::Resistor { n1, n2, ohms, .. } => (v[n1.0] - v[n2.0]) / ohms,
                ElementKind::Capacitor { n1, n2, farads } => {
                    (v[n1.0] - v[n2.0]) * Complex64::new(0.0, w * farads)
                }
                ElementKind::Inductor { .. } | ElementKind::VSource { .. } => {
                    x[self.branch_of[idx].expect("branch")]
                }
                ElementKind::Vccs {
                    ctrl_p, ctrl_n, gm, ..
                } => (v[ctrl_p.0] - v[ctrl_n.0]) * gm,
                ElementKind::ISource {
                    magnitude,
                    phase_deg,
                    ..
                } => polar_deg(magnitude, phase_deg),
                ElementKind::MutualCoupling { .. } => ZERO,
            })
            .collect();
        AcSolution {
            frequency: freq,
            node_voltages: v,
            element_currents: currents,
            node_names: self.node_names.clone(),
            element_names: self.element_names.clone(),
        }
    }

    /// Solve with every independent source at its netlist amplitude.
    pub fn solve(&self, freq: f64) -> Result<AcSolution> {
        let lu = self.factor(freq)?;
        let x = lu.solve(&self.rhs(Sources::All));
        Ok(self.assemble_solution(freq, &x))
    }

    /// Solve with only the named independent source active.
    pub fn solve_single_source(&self, freq: f64, source: &str) -> Result<AcSolution> {
        let idx = self
            .net
            .element_index(source)
            .filter(|&i| self.net.elements()[i].is_independent_source())
            .ok_or_else(|| Error::Unknown {
                kind: "source",
                name: source.to_string(),
            })?;
        let lu = self.factor(freq)?;
        Ok(self.solve_only(&lu, freq, idx))
    }

    fn solve_only(&self, lu: &LuFactors, freq: f64, source: usize) -> AcSolution {
        let x = lu.solve(&self.rhs(Sources::Only(source)));
        let mut sol = self.assemble_solution(freq, &x);
        for (i, e) in self.net.elements().iter().enumerate() {
            if i != source && matches!(e.kind, ElementKind::ISource { .. }) {
                sol.element_currents[i] = ZERO;
            }
        }
        sol
    }

    /// Solve with all independent sources zeroed and a unit current injected
    /// into `into` and drawn from `from`.
    pub fn solve_injection(
        &self,
        lu: &LuFactors,
        freq: f64,
        into: NodeId,
        from: NodeId,
    ) -> AcSolution {
        let mut b = self.rhs(Sources::None);
        if let Some(r) = Self::row(into) {
            b[r] += ONE;
        }
        if let Some(r) = Self::row(from) {
            b[r] -= ONE;
        }
        let x = lu.solve(&b);
        let mut sol = self.assemble_solution(freq, &x);
        for (i, e) in self.net.elements().iter().enumerate() {
            if matches!(e.kind, ElementKind::ISource { .. }) {
                sol.element_currents[i] = ZERO;
            }
        }
        sol
    }
}

/// Single-frequency solve of a netlist with its sources as written.
pub fn ac_solve(net: &Netlist, freq: f64) -> Result<AcSolution> {
    MnaSystem::new(net)?.solve(freq)
}

/// Evaluate `f` at every grid point in parallel; results come back in grid
/// order and the lowest-frequency failure wins.
fn par_grid<T, F>(freqs: &[f64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = freqs.par_iter().map(|&fr| f(fr)).collect();
    results.into_iter().collect()
}

/// Solve at every grid point and read out each probe.
pub fn ac_sweep(
    net: &Netlist,
    grid: &FrequencyGrid,
    probes: &[Probe],
) -> Result<Vec<FrequencyResponse>> {
    let freqs = grid.frequencies()?;
    if freqs.len() < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least 2 points".into()));
    }
    let sys = MnaSystem::new(net)?;
    let rows = par_grid(&freqs, |f| {
        let sol = sys.solve(f)?;
        probes.iter().map(|p| sol.probe(p)).collect::<Result<Vec<_>>>()
    })?;
    Ok(probes
        .iter()
        .enumerate()
        .map(|(k, p)| {
            FrequencyResponse::new(
                p.to_string(),
                freqs.iter().zip(&rows).map(|(f, r)| (*f, r[k])).collect(),
            )
        })
        .collect())
}

/// Output phasor divided by the input source amplitude, with every other
/// independent source zeroed.
pub fn transfer_function(
    net: &Netlist,
    input: &str,
    output: &Probe,
    grid: &FrequencyGrid,
) -> Result<FrequencyResponse> {
    let freqs = grid.frequencies()?;
    let idx = net.element_index(input).ok_or_else(|| Error::Unknown {
        kind: "source",
        name: input.to_string(),
    })?;
    let amplitude = match net.elements()[idx].kind {
        ElementKind::VSource {
            magnitude,
            phase_deg,
            ..
        }
        | ElementKind::ISource {
            magnitude,
            phase_deg,
            ..
        } => polar_deg(magnitude, phase_deg),
        _ => {
            return Err(Error::Unknown {
                kind: "source",
                name: input.to_string(),
            })
        }
    };
    if amplitude == ZERO {
        return Err(Error::InvalidArgument(format!(
            "source `{input}` has zero amplitude"
        )));
    }
    let sys = MnaSystem::new(net)?;
    let values = par_grid(&freqs, |f| {
        let lu = sys.factor(f)?;
        let sol = sys.solve_only(&lu, f, idx);
        Ok(sol.probe(output)? / amplitude)
    })?;
    Ok(FrequencyResponse::new(
        format!("{output}/{input}"),
        freqs.into_iter().zip(values).collect(),
    ))
}

fn resolve_node(net: &Netlist, name: &str) -> Result<NodeId> {
    net.find_node(name).ok_or_else(|| Error::Unknown {
        kind: "node",
        name: name.to_string(),
    })
}

/// Impedance seen by a 1 A test current injected into `port.0` and returned
/// from `port.1`, with all independent sources zeroed.
pub fn input_impedance(
    net: &Netlist,
    port: (&str, &str),
    grid: &FrequencyGrid,
) -> Result<FrequencyResponse> {
    let freqs = grid.frequencies()?;
    let (p, n) = (resolve_node(net, port.0)?, resolve_node(net, port.1)?);
    if p == n {
        return Err(Error::InvalidArgument("port nodes must differ".into()));
    }
    let shorted = net.elements().iter().any(|e| {
        matches!(e.kind, ElementKind::VSource { n1, n2, .. }
            if (n1 == p && n2 == n) || (n1 == n && n2 == p))
    });
    if shorted {
        return Err(Error::InvalidArgument(format!(
            "a voltage source sits across port ({}, {})",
            port.0, port.1
        )));
    }
    let sys = MnaSystem::new(net)?;
    let values = par_grid(&freqs, |f| {
        let lu = sys.factor(f)?;
        let sol = sys.solve_injection(&lu, f, p, n);
        Ok(sol.node_voltages[p.0] - sol.node_voltages[n.0])
    })?;
    Ok(FrequencyResponse::new(
        format!("z({},{})", port.0, port.1),
        freqs.into_iter().zip(values).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseContribution {
    pub element: String,
    pub v2_per_hz: f64,
}

/// Output noise PSD split by source. Sources are uncorrelated, so powers add.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseBudget {
    #[serde(rename = "freq_hz")]
    pub frequency: f64,
    #[serde(rename = "temperature_k")]
    pub temperature: f64,
    #[serde(rename = "total_v2_per_hz")]
    pub total: f64,
    pub contributions: Vec<NoiseContribution>,
}

impl NoiseBudget {
    pub fn contribution(&self, element: &str) -> Option<f64> {
        self.contributions
            .iter()
            .find(|c| c.element == element)
            .map(|c| c.v2_per_hz)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("noise budget serializes")
    }
}

/// Thermal and channel noise at `output`: `4kT/R` across every noisy resistor
/// and `4kT·γ·|gm|` across every noisy VCCS output.
pub fn output_noise(net: &Netlist, output: &str, freq: f64, temperature: f64) -> Result<NoiseBudget> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let out = resolve_node(net, output)?;
    let sys = MnaSystem::new(net)?;
    let lu = sys.factor(freq)?;
    let four_kt = 4.0 * BOLTZMANN * temperature;
    let mut contributions = Vec::new();
    for e in net.elements() {
        let (psd, a, b) = match e.kind {
            ElementKind::Resistor {
                n1,
                n2,
                ohms,
                noisy: true,
            } => (four_kt / ohms, n1, n2),
            ElementKind::Vccs {
                out_p,
                out_n,
                gm,
                gamma,
                noisy: true,
                ..
            } => (four_kt * gamma * gm.abs(), out_p, out_n),
            _ => continue,
        };
        let sol = sys.solve_injection(&lu, freq, a, b);
        let z = sol.node_voltages[out.0];
        contributions.push(NoiseContribution {
            element: e.name.clone(),
            v2_per_hz: psd * z.norm_sqr(),
        });
    }
    let total = contributions.iter().map(|c| c.v2_per_hz).sum();
    Ok(NoiseBudget {
        frequency: freq,
        temperature,
        total,
        contributions,
    })
}
