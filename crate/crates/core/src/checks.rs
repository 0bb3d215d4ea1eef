//! Headline numbers and pass/fail checks gathered into one report.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mna::{output_noise, MnaSystem, NoiseBudget, BOLTZMANN};
use crate::netlist::{ElementKind, Netlist, NodeId};
use crate::oscillator::{
    build_loop_netlist, combined_q, detune_sweep, evaluate_aligned, extract_q, gain_av1_av2,
    loop_gain_report, lphi_bounds, plan_tank, CombinedQ, DetunePoint, Gains, LoopBreak,
    LoopGainReport, LphiBounds, OscDesign, NODE_Y,
};
use crate::phase_noise::{
    design_pn, fom, leeson_pn, lumped_noise_power, noise_factor, FomResult, LumpedNoise,
    NoiseFactor, PhaseNoiseResult, PnOptions,
};
use crate::resonator::{resonator_phase_at, synthesize_motional, MotionalBranch};
use crate::response::FrequencyResponse;

/// Seed of the randomized network checks.
pub const FUZZ_SEED: u64 = 0x6d656d73;
pub const KCL_FUZZ_CASES: usize = 1000;
const PROPERTY_CASES: usize = 200;

/// Detuning points of the monotonicity check, Hz.
pub const DETUNE_CHECK_DELTAS: [f64; 5] = [0.0, 1e9, 2e9, 3e9, 3.7e9];
/// Pulling bound in resonator half-bandwidths.
pub const PULLING_HALF_BANDWIDTHS: f64 = 3.0;
/// Soft reference for the detuned phase noise, dBc/Hz.
pub const DETUNE_SOFT_PN: f64 = -140.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn node_name(i: usize) -> String {
    if i == 0 {
        "0".into()
    } else {
        format!("n{i}")
    }
}

/// Random valid netlist. Every node has a resistor to ground; extra R, C, L,
/// couplings and (unless `rlc_only`) transconductors, current sources and one
/// voltage source are scattered on top.
pub fn random_netlist<R: Rng>(rng: &mut R, rlc_only: bool) -> Netlist {
    let n = rng.random_range(2..=7usize);
    let mut net = Netlist::new("random network");
    for i in 1..=n {
        let r = log_uniform(rng, 10.0, 1e4);
        net.resistor(&format!("Rg{i}"), &node_name(i), "0", r);
    }
    let kinds = if rlc_only { 3 } else { 5 };
    let mut inductors = Vec::new();
    for k in 0..rng.random_range(n..3 * n) {
        let a = rng.random_range(0..=n);
        let b = (a + rng.random_range(1..=n)) % (n + 1);
        let (a, b) = (node_name(a), node_name(b));
        match rng.random_range(0..kinds) {
            0 => {
                net.resistor(&format!("R{k}"), &a, &b, log_uniform(rng, 1.0, 1e4));
            }
            1 => {
                net.capacitor(&format!("C{k}"), &a, &b, log_uniform(rng, 1e-15, 1e-11));
            }
            2 => {
                let name = format!("L{k}");
                net.inductor(&name, &a, &b, log_uniform(rng, 1e-11, 1e-8));
                inductors.push(name);
            }
            3 => {
                let cp = rng.random_range(0..=n);
                let cn = (cp + rng.random_range(1..=n)) % (n + 1);
                let gm = log_uniform(rng, 1e-5, 1e-2);
                net.vccs(&format!("G{k}"), &a, &b, &node_name(cp), &node_name(cn), gm, true, 1.0);
            }
            _ => {
                net.isource(&format!("I{k}"), &a, &b, log_uniform(rng, 1e-4, 1e-1));
                if let Some(e) = net.elements_mut().last_mut() {
                    if let ElementKind::ISource { phase_deg, .. } = &mut e.kind {
                        *phase_deg = rng.random_range(-180.0..180.0);
                    }
                }
            }
        }
    }
    for (k, pair) in inductors.windows(2).enumerate() {
        if rng.random_bool(0.5) {
            let kc = rng.random_range(0.0..0.95);
            net.coupling(&format!("K{k}"), &pair[0], &pair[1], kc);
        }
    }
    if !rlc_only && rng.random_bool(0.5) {
        net.vsource("Vs", &node_name(1), "0", log_uniform(rng, 1e-2, 1.0));
    }
    net
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Worst `residual / incident` KCL ratio over `cases` random netlists that
/// solve without a singular pivot, and the number of those netlists.
pub fn kcl_fuzz(seed: u64, cases: usize) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut solved, mut tries) = (0.0f64, 0usize, 0usize);
    while solved < cases && tries < 10 * cases {
        tries += 1;
        let net = random_netlist(&mut rng, false);
        let f = log_uniform(&mut rng, 1e8, 1e11);
        let Ok(sys) = MnaSystem::new(&net) else { continue };
        let Ok(sol) = sys.solve(f) else { continue };
        worst = worst.max(sol.max_kcl_ratio(&net));
        solved += 1;
    }
    (worst, solved)
}

/// Worst superposition error over random netlists with two extra current sources.
pub fn superposition_error(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let mut net = random_netlist(&mut rng, true);
        let n = net.node_count() - 1;
        net.isource("Ia", "0", &node_name(1), 1e-3)
            .isource("Ib", &node_name(n), "0", 2e-3);
        let f = log_uniform(&mut rng, 1e8, 1e11);
        let Ok(sys) = MnaSystem::new(&net) else { continue };
        let (Ok(all), Ok(a), Ok(b)) = (
            sys.solve(f),
            sys.solve_single_source(f, "Ia"),
            sys.solve_single_source(f, "Ib"),
        ) else {
            continue;
        };
        let scale = all.node_voltages.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..all.node_voltages.len() {
            let e = (all.node_voltages[i] - a.node_voltages[i] - b.node_voltages[i]).norm();
            worst = worst.max(e / scale);
        }
    }
    worst
}

/// Worst `|Z_ab − Z_ba| / |Z_ab|` over random RLC networks.
pub fn reciprocity_error(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let net = random_netlist(&mut rng, true);
        let n = net.node_count() - 1;
        let (a, b) = (NodeId(1), NodeId(n));
        let f = log_uniform(&mut rng, 1e8, 1e11);
        let Ok(sys) = MnaSystem::new(&net) else { continue };
        let Ok(lu) = sys.factor(f) else { continue };
        let zab = sys.solve_injection(&lu, f, a, NodeId::GROUND).node_voltages[b.0];
        let zba = sys.solve_injection(&lu, f, b, NodeId::GROUND).node_voltages[a.0];
        worst = worst.max(rel(zba, zab));
    }
    worst
}

/// Most negative `Re Z / |Z|` seen at a random port of random RLC networks.
pub fn passivity_margin(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..cases {
        let net = random_netlist(&mut rng, true);
        let n = net.node_count() - 1;
        let p = NodeId(rng.random_range(1..=n));
        let Ok(sys) = MnaSystem::new(&net) else { continue };
        for _ in 0..4 {
            let f = log_uniform(&mut rng, 1e8, 1e11);
            let Ok(lu) = sys.factor(f) else { continue };
            let z = sys.solve_injection(&lu, f, p, NodeId::GROUND).node_voltages[p.0];
            worst = worst.min(z.re / z.norm());
        }
    }
    worst
}

/// Worst difference between netlists with `k = 0` couplings and the same
/// netlists with the couplings removed.
pub fn zero_coupling_error(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let mut base = random_netlist(&mut rng, true);
        let n = base.node_count() - 1;
        base.inductor("La", &node_name(1), "0", 1e-9)
            .inductor("Lb", &node_name(n), "0", 2e-9)
            .isource("Iz", "0", &node_name(1), 1e-3);
        let mut coupled = base.clone();
        coupled.coupling("Kz", "La", "Lb", 0.0);
        let f = log_uniform(&mut rng, 1e8, 1e11);
        let (Ok(a), Ok(b)) = (MnaSystem::new(&base), MnaSystem::new(&coupled)) else {
            continue;
        };
        let (Ok(sa), Ok(sb)) = (a.solve(f), b.solve(f)) else { continue };
        let scale = sa.node_voltages.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (x, y) in sa.node_voltages.iter().zip(&sb.node_voltages) {
            worst = worst.max((x - y).norm() / scale);
        }
    }
    worst
}

/// Worst relative error of series and parallel RLC responses, and of their
/// phase-slope Q, against closed forms.
pub fn rlc_closed_form_error() -> Result<f64> {
    let mut worst = 0.0f64;
    for &(r, q, f0) in &[(332.0, 1e4, 30e9), (50.0, 50.0, 1e9), (13.0, 10.0, 30e9)] {
        let w0 = 2.0 * PI * f0;
        let l = q * r / w0;
        let c = 1.0 / (w0 * w0 * l);
        let mut series = Netlist::new("series rlc");
        series
            .vsource("V1", "a", "0", 1.0)
            .resistor("R1", "a", "b", r)
            .inductor("L1", "b", "c", l)
            .capacitor("C1", "c", "0", c);
        let rp = q * w0 * l;
        let mut shunt = Netlist::new("parallel rlc");
        shunt
            .isource("I1", "0", "a", 1.0)
            .resistor("R1", "a", "0", rp)
            .inductor("L1", "a", "0", l)
            .capacitor("C1", "a", "0", c);
        let (ss, ps) = (MnaSystem::new(&series)?, MnaSystem::new(&shunt)?);
        let y_series = |f: f64| {
            let w = 2.0 * PI * f;
            1.0 / Complex64::new(r, w * l - 1.0 / (w * c))
        };
        let z_shunt = |f: f64| {
            let w = 2.0 * PI * f;
            1.0 / Complex64::new(1.0 / rp, w * c - 1.0 / (w * l))
        };
        for x in [0.5, 0.999, 1.0, 1.0 + 0.5 / q, 2.0] {
            let f = f0 * x;
            worst = worst.max(rel(ss.solve(f)?.current("R1")?, y_series(f)));
            worst = worst.max(rel(ps.solve(f)?.voltage("a")?, z_shunt(f)));
        }
        // Two three-point estimates combined by Richardson extrapolation.
        let h = 2e-3 * f0 / q;
        let q_at = |sys: &MnaSystem<'_>, series: bool, h: f64| -> Result<f64> {
            let samples = [f0 - h, f0, f0 + h]
                .iter()
                .map(|&f| {
                    let s = sys.solve(f)?;
                    Ok((f, if series { s.current("R1")? } else { s.voltage("a")? }))
                })
                .collect::<Result<Vec<_>>>()?;
            extract_q(&FrequencyResponse::new("h", samples), f0)
        };
        let richardson = |series: bool, sys: &MnaSystem<'_>| -> Result<f64> {
            Ok((4.0 * q_at(sys, series, h / 2.0)? - q_at(sys, series, h)?) / 3.0)
        };
        let qs = richardson(true, &ss)?;
        let qp = richardson(false, &ps)?;
        worst = worst.max((qs / q - 1.0).abs()).max((qp / q - 1.0).abs());
    }
    Ok(worst)
}

/// Everything the `report` command prints.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub design: OscDesign,
    pub options: PnOptions,
    pub offset_hz: f64,
    pub motional: MotionalBranch,
    pub lphi: LphiBounds,
    pub gains: Gains,
    pub loop_gain: LoopGainReport,
    pub resonator_phase_deg: f64,
    pub noise_factor: NoiseFactor,
    pub phase_noise: PhaseNoiseResult,
    pub fom: FomResult,
    pub fom_reference_30ghz: FomResult,
    pub fom_reference_17ghz: FomResult,
    pub combined_q: CombinedQ,
    pub lumped_noise: LumpedNoise,
    pub mna_noise: NoiseBudget,
    /// MNA total over lumped total.
    pub noise_ratio: f64,
    pub detune: Vec<DetunePoint>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.motional;
        let _ = writeln!(s, "motional branch: Lm = {:.4e} H, Cm = {:.4e} F, C0 = {:.4e} F", m.lm, m.cm, m.c0);
        let _ = writeln!(
            s,
            "phase shifter: f_phi = {:.3} GHz, L_phi bounds [{:.3e}, {:.3e}] H",
            self.lphi.f_phi / 1e9,
            self.lphi.l_min,
            self.lphi.l_max
        );
        let _ = writeln!(
            s,
            "gains: R0 = {:.2} ohm, Av1 = {:.3}, Av2 = {:.2}, Av1*Av2 = {:.1}",
            self.gains.r0,
            self.gains.av1,
            self.gains.av2,
            self.gains.loop_estimate()
        );
        let lg = &self.loop_gain;
        let _ = writeln!(
            s,
            "open loop at {:.4} GHz: |T| = {:.2}, phase = {:.3} deg, margin = {:.2}, |T|/(Av1*Av2) = {:.3}",
            lg.f_eval / 1e9,
            lg.magnitude,
            lg.phase_deg,
            lg.startup_margin,
            lg.agreement_factor
        );
        let _ = writeln!(s, "resonator phase at f0: {:.3} deg", self.resonator_phase_deg);
        let _ = writeln!(
            s,
            "noise factor F = {:.3}; PN({:.0} Hz) = {:.2} dBc/Hz, floor = {:.2} dBc/Hz; FoM = {:.2} dB",
            self.noise_factor.f,
            self.offset_hz,
            self.phase_noise.pn_dbchz,
            self.phase_noise.pn_min_dbchz,
            self.fom.fom_dbchz
        );
        let c = &self.combined_q;
        let _ = writeln!(s, "Q: tank {:.3}, resonator {:.1}, cascade {:.1}", c.q_l0, c.q_mems, c.q_osc);
        let _ = writeln!(
            s,
            "noise at Y: MNA {:.4e} V^2/Hz, lumped {:.4e} V^2/Hz, ratio {:.3}",
            self.mna_noise.total, self.lumped_noise.total, self.noise_ratio
        );
        for p in &self.detune {
            match (p.f_osc_hz, p.pn_dbchz, p.startup_margin) {
                (Some(f), Some(pn), Some(mg)) => {
                    let _ = writeln!(
                        s,
                        "detune {:+.2} GHz: f_osc = {:.6} GHz, margin = {:.1}, PN = {:.2} dBc/Hz",
                        p.delta_hz / 1e9,
                        f / 1e9,
                        mg,
                        pn
                    );
                }
                _ => {
                    let _ = writeln!(s, "detune {:+.2} GHz: oscillation lost", p.delta_hz / 1e9);
                }
            }
        }
        for ch in &self.checks {
            let _ = writeln!(
                s,
                "[{}] {:>2} {}: {}",
                if ch.passed { "PASS" } else { "FAIL" },
                ch.id,
                ch.name,
                ch.detail
            );
        }
        s
    }
}

/// Compute every headline number and run the checks against the design.
pub fn build_report(d: &OscDesign, opts: &PnOptions, offset_hz: f64, deltas: &[f64]) -> Result<Report> {
    d.validate()?;
    let p = &d.resonator;
    let motional = synthesize_motional(p)?;
    let lphi = lphi_bounds(d)?;
    let gains = gain_av1_av2(d)?;
    let loop_gain = loop_gain_report(d)?;
    let resonator_phase_deg = resonator_phase_at(p, p.f0)?;
    let nf = noise_factor(d)?;
    let pn = design_pn(d, offset_hz, opts)?;
    let floor = leeson_pn(d, offset_hz, opts.q_osc.unwrap_or(p.q_mems), 1.0, opts)?;
    let fom_design = fom(pn.pn_dbchz, p.f0, offset_hz, d.p_dc)?;
    let fom30 = fom(-147.8, 30e9, 1e6, 5.7e-3)?;
    let fom17 = fom(-105.0, 17e9, 1e6, 7.2e-3)?;
    let cq = combined_q(d)?;
    let lumped = lumped_noise_power(d, opts.temperature)?;
    let tank = plan_tank(d)?;
    let noise_net = build_loop_netlist(d, &tank, LoopBreak::SenseControl)?;
    let mna_noise = output_noise(&noise_net, NODE_Y, p.f0, opts.temperature)?;
    let mna_noise_hot = output_noise(&noise_net, NODE_Y, p.f0, 2.0 * opts.temperature)?;
    let noise_ratio = mna_noise.total / lumped.total;
    let detune = detune_sweep(d, deltas, offset_hz, opts)?;
    let check_points = detune_sweep(d, &DETUNE_CHECK_DELTAS, offset_hz, opts)?;
    let aligned = evaluate_aligned(d, offset_hz, opts)?;

    let mut checks = Vec::new();
    checks.push(Check::new(
        1,
        "phase-noise floor with F = 1",
        (floor.pn_dbchz - -167.0).abs() <= 0.5,
        format!("{:.3} dBc/Hz, target -167 +/- 0.5", floor.pn_dbchz),
    ));
    checks.push(Check::new(
        2,
        "noise factor and phase noise",
        (nf.f - 32.3).abs() <= 0.5 && (pn.pn_dbchz - -152.0).abs() <= 1.0,
        format!(
            "F = {:.3} (32.3 +/- 0.5), PN = {:.3} dBc/Hz (-152.0 +/- 1.0)",
            nf.f, pn.pn_dbchz
        ),
    ));
    checks.push(Check::new(
        3,
        "phase-shifter design point",
        (lphi.f_phi / 88e9 - 1.0).abs() <= 0.01 && lphi.satisfied && lphi.l_min < 1e-12,
        format!(
            "f_phi = {:.3} GHz (88 +/- 1%), l_min = {:.3e} H (< 1 pH), within bounds: {}",
            lphi.f_phi / 1e9,
            lphi.l_min,
            lphi.satisfied
        ),
    ));
    checks.push(Check::new(
        4,
        "figure of merit",
        (fom30.fom_dbchz - 229.8).abs() <= 0.2 && (fom17.fom_dbchz - 182.0).abs() <= 1.0,
        format!(
            "{:.3} dB (229.8 +/- 0.2), 17 GHz row {:.3} dB (182 +/- 1)",
            fom30.fom_dbchz, fom17.fom_dbchz
        ),
    ));
    let q_sum = d.q_l0 + p.q_mems;
    checks.push(Check::new(
        5,
        "Q additivity",
        (cq.q_osc / q_sum - 1.0).abs() <= 0.01 && (cq.q_osc - p.q_mems).abs() / p.q_mems <= 0.002,
        format!(
            "Q_OSC = {:.2} ({:.0} +/- 1%), |Q_OSC - Q_MEMS|/Q_MEMS = {:.3e} (<= 2e-3)",
            cq.q_osc,
            q_sum,
            (cq.q_osc - p.q_mems).abs() / p.q_mems
        ),
    ));
    checks.push(Check::new(
        6,
        "270 degree resonator phase",
        (resonator_phase_deg - 270.0).abs() <= 2.0,
        format!("{resonator_phase_deg:.4} deg (270 +/- 2)"),
    ));
    checks.push(Check::new(
        7,
        "Barkhausen criteria",
        loop_gain.phase_deg.abs() <= 5.0 && loop_gain.magnitude > 1.0,
        format!(
            "phase {:.4} deg (0 +/- 5), |T| = {:.2} (> 1)",
            loop_gain.phase_deg, loop_gain.magnitude
        ),
    ));
    let rlc = rlc_closed_form_error()?;
    let (kcl, solved) = kcl_fuzz(FUZZ_SEED, KCL_FUZZ_CASES);
    let sup = superposition_error(FUZZ_SEED + 1, PROPERTY_CASES);
    let rec = reciprocity_error(FUZZ_SEED + 2, PROPERTY_CASES);
    let pas = passivity_margin(FUZZ_SEED + 3, PROPERTY_CASES);
    let k0 = zero_coupling_error(FUZZ_SEED + 4, PROPERTY_CASES);
    checks.push(Check::new(
        8,
        "nodal analysis oracle suite",
        rlc <= 1e-9
            && kcl < 1e-9
            && solved == KCL_FUZZ_CASES
            && sup <= 1e-9
            && rec <= 1e-9
            && pas >= -1e-9
            && k0 <= 1e-12,
        format!(
            "RLC {rlc:.1e}, KCL {kcl:.1e} over {solved}, superposition {sup:.1e}, reciprocity {rec:.1e}, min Re(Z)/|Z| {pas:.2e}, k=0 {k0:.1e}"
        ),
    ));
    let t_lin = (mna_noise_hot.total / mna_noise.total / 2.0 - 1.0).abs();
    checks.push(Check::new(
        9,
        "noise cross-check",
        (noise_ratio - 1.0).abs() <= 0.10 && t_lin <= 1e-12,
        format!(
            "MNA/lumped = {noise_ratio:.4} (1 +/- 0.10), temperature linearity error {t_lin:.1e}"
        ),
    ));
    let detune_ok = detune_properties(d, &check_points, &aligned);
    checks.push(Check::new(10, "detuning properties", detune_ok.0, detune_ok.1));

    Ok(Report {
        design: d.clone(),
        options: opts.clone(),
        offset_hz,
        motional,
        lphi,
        gains,
        loop_gain,
        resonator_phase_deg,
        noise_factor: nf,
        phase_noise: pn,
        fom: fom_design,
        fom_reference_30ghz: fom30,
        fom_reference_17ghz: fom17,
        combined_q: cq,
        lumped_noise: lumped,
        mna_noise,
        noise_ratio,
        detune,
        checks,
    })
}

fn detune_properties(d: &OscDesign, pts: &[DetunePoint], aligned: &DetunePoint) -> (bool, String) {
    let f0 = d.resonator.f0;
    let bound = PULLING_HALF_BANDWIDTHS * f0 / (2.0 * d.resonator.q_mems);
    let pns: Option<Vec<f64>> = pts.iter().map(|p| p.pn_dbchz).collect();
    let pulls: Option<Vec<f64>> = pts.iter().map(|p| p.f_osc_hz.map(|f| (f - f0).abs())).collect();
    let (Some(pns), Some(pulls)) = (pns, pulls) else {
        return (false, "oscillation lost inside the checked detuning range".into());
    };
    let monotone = pns.windows(2).all(|w| w[1] >= w[0]);
    let max_pull = pulls.iter().cloned().fold(0.0, f64::max);
    let consistent = pts.first() == Some(aligned);
    let worst = pns.last().copied().unwrap_or(f64::NAN);
    (
        monotone && max_pull <= bound && consistent,
        format!(
            "PN non-improving: {monotone}, max pulling {max_pull:.3e} Hz (<= {bound:.3e}), zero-detune consistent: {consistent}; PN at {:.1} GHz = {worst:.2} dBc/Hz (soft reference {DETUNE_SOFT_PN})",
            DETUNE_CHECK_DELTAS[DETUNE_CHECK_DELTAS.len() - 1] / 1e9
        ),
    )
}

/// Noise total per unit `4kT`, handy for printing budgets.
pub fn in_units_of_4kt(v2: f64, temperature: f64) -> f64 {
    v2 / (4.0 * BOLTZMANN * temperature)
}

/// Guard used by callers that need the report to have passed.
pub fn require_pass(report: &Report) -> Result<()> {
    let failed: Vec<_> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.id.to_string())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidDesign(format!(
            "checks failed: {}",
            failed.join(", ")
        )))
    }
}
