//! Oscillator loop: design equations, loop netlist, open-loop analysis,
//! Q extraction and tank detuning.
//!
//! The half-circuit loop reuses the RFT node names: the gain-stage output
//! `Y` is the RFT `drive` node and the gate `X` is the RFT `sense` node.
//!
//! ```text
//!  drive (Y) ── RFT ── sense (X) ── G1 ──┐
//!     │                   │              │
//!  L0+RL0, Ctrim, Ro    Cin, Lphi+RLphi  │
//!     └──────────────────────────────────┘
//! ```
//!
//! In the differential circuit the cross-coupled pair cancels the
//! common-source inversion, so the half-circuit `G1` injects `+gm·v(X)` into `Y`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mna::{input_impedance, transfer_function, MnaSystem, Probe};
use crate::netlist::{ElementKind, Netlist};
use crate::phase_noise::{leeson_pn_with_r0, leeson_r0, noise_factor, LeesonR0, PnOptions};
use crate::resonator::{
    add_rft_half, drive_port_impedance, sense_transadmittance, synthesize_motional,
    MotionalBranch, ResonatorParams, DRIVE, SENSE,
};
use crate::response::{wrap_deg_signed, FrequencyGrid, FrequencyResponse};

pub const NODE_X: &str = SENSE;
pub const NODE_Y: &str = DRIVE;
/// Test node driving the gain stage when the loop is broken at the gate.
pub const NODE_TEST: &str = "xt";

/// How `A_V1` is formed from `g_m1·R_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainConvention {
    /// `(g_m1·R_0)²`.
    #[default]
    AsPrinted,
    /// `g_m1·R_0`.
    SingleStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscDesign {
    pub resonator: ResonatorParams,
    pub l_phi: f64,
    pub r_lphi: f64,
    pub c_in: f64,
    pub l0: f64,
    pub q_l0: f64,
    /// Tank loss used by the lumped formulas.
    pub r_l0: f64,
    pub gm_m1: f64,
    pub ro_m1: f64,
    pub vdd: f64,
    pub v_osc: f64,
    pub p_dc: f64,
    /// Channel-noise factor of both transconductors.
    pub gamma: f64,
    pub av1_convention: GainConvention,
}

impl Default for OscDesign {
    fn default() -> Self {
        Self {
            resonator: ResonatorParams::default(),
            l_phi: 650e-12,
            r_lphi: 10.0,
            c_in: 5e-15,
            l0: 650e-12,
            q_l0: 10.0,
            r_l0: 13.0,
            gm_m1: 15e-3,
            ro_m1: 2e3,
            vdd: 0.8,
            v_osc: 0.8,
            p_dc: 5.7e-3,
            gamma: 1.0,
            av1_convention: GainConvention::AsPrinted,
        }
    }
}

impl OscDesign {
    pub fn validate(&self) -> Result<()> {
        self.resonator.validate()?;
        let positive = [
            ("l_phi", self.l_phi),
            ("r_lphi", self.r_lphi),
            ("c_in", self.c_in),
            ("l0", self.l0),
            ("q_l0", self.q_l0),
            ("r_l0", self.r_l0),
            ("gm_m1", self.gm_m1),
            ("ro_m1", self.ro_m1),
            ("vdd", self.vdd),
            ("v_osc", self.v_osc),
            ("p_dc", self.p_dc),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidDesign(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidDesign(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if self.v_osc > self.vdd {
            return Err(Error::InvalidDesign(format!(
                "v_osc {} exceeds vdd {}",
                self.v_osc, self.vdd
            )));
        }
        Ok(())
    }

    /// Series loss of `L0` that gives the tank its `Q_L0` at `f0`.
    pub fn r_l0_series(&self) -> f64 {
        self.resonator.omega0() * self.l0 / self.q_l0
    }
}

fn parallel(rs: &[f64]) -> f64 {
    1.0 / rs.iter().map(|r| 1.0 / r).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gains {
    pub av1: f64,
    pub av2: f64,
    pub r0: f64,
}

impl Gains {
    pub fn loop_estimate(&self) -> f64 {
        self.av1 * self.av2
    }
}

/// `R_0 = R_m ∥ Q_L0²·R_L0 ∥ r_o`, `A_V1` from `g_m1·R_0` per the design's
/// convention, `A_V2 = g_mech·L_φ/(C_m·R_m)`.
pub fn gain_av1_av2(d: &OscDesign) -> Result<Gains> {
    d.validate()?;
    let m = synthesize_motional(&d.resonator)?;
    let r0 = parallel(&[d.resonator.rm, d.q_l0 * d.q_l0 * d.r_l0, d.ro_m1]);
    let g = d.gm_m1 * r0;
    let av1 = match d.av1_convention {
        GainConvention::AsPrinted => g * g,
        GainConvention::SingleStage => g,
    };
    let av2 = d.resonator.gm_mech * d.l_phi / (m.cm * d.resonator.rm);
    Ok(Gains { av1, av2, r0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LphiBounds {
    pub l_min: f64,
    pub l_max: f64,
    /// Resonance of `L_φ` with `C_in`.
    pub f_phi: f64,
    pub satisfied: bool,
}

/// `l_max = 1/(4π²·f0²·C_in)`, `l_min = R_m·C_m/(g_mech·A_V1)`.
pub fn lphi_bounds(d: &OscDesign) -> Result<LphiBounds> {
    let g = gain_av1_av2(d)?;
    let m = synthesize_motional(&d.resonator)?;
    let f0 = d.resonator.f0;
    let l_max = 1.0 / (4.0 * PI * PI * f0 * f0 * d.c_in);
    let l_min = d.resonator.rm * m.cm / (d.resonator.gm_mech * g.av1);
    if l_min >= l_max {
        return Err(Error::Infeasible(format!(
            "L_phi lower bound {l_min:.3e} H is not below upper bound {l_max:.3e} H"
        )));
    }
    Ok(LphiBounds {
        l_min,
        l_max,
        f_phi: 1.0 / (2.0 * PI * (d.l_phi * d.c_in).sqrt()),
        satisfied: l_min < d.l_phi && d.l_phi < l_max,
    })
}

/// Where the loop is opened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopBreak {
    Closed,
    /// `G1` is driven by a 1 V source at `xt`; `X` keeps its `C_in` load.
    Gate,
    /// The sense transconductor is controlled by a grounded dummy node, so
    /// every noise source reaches `Y` without recirculating.
    SenseControl,
}

/// Load tank at `Y`: `L0` with series loss, plus a trim capacitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TankPlan {
    pub l0: f64,
    pub r_l0_series: f64,
    pub c_trim: f64,
    /// `1/(2π·sqrt((L0 ∥ L1)·(C0 + C_trim)))`.
    pub f_nominal: f64,
}

fn tank_resonance(l0: f64, l1: f64, c: f64) -> f64 {
    1.0 / (2.0 * PI * (parallel(&[l0, l1]) * c).sqrt())
}

fn admittance_x(d: &OscDesign, f: f64) -> Complex64 {
    let w = 2.0 * PI * f;
    let j = Complex64::i();
    j * w * (d.c_in + d.resonator.c_out)
        + 1.0 / Complex64::new(d.r_lphi, w * d.l_phi)
        + 1.0 / d.resonator.r_out
}

/// Trim capacitance that puts `arg Z_Y(f0)` at `target` radians.
fn plan_for_phase(d: &OscDesign, target: f64) -> Result<TankPlan> {
    d.validate()?;
    let f0 = d.resonator.f0;
    let w = 2.0 * PI * f0;
    let m = synthesize_motional(&d.resonator)?;
    let grid = FrequencyGrid::List { freqs: vec![f0] };
    let y_port = 1.0 / drive_port_impedance(&d.resonator, &grid)?.samples[0].1;
    let r_s = d.r_l0_series();
    let y = y_port + 1.0 / d.ro_m1 + 1.0 / Complex64::new(r_s, w * d.l0);
    // arg Y_Y = -target with Y_Y = y + jωC_trim.
    let c_trim = (y.re * (-target).tan() - y.im) / w;
    if !(c_trim.is_finite() && c_trim > 0.0) {
        return Err(Error::Infeasible(format!(
            "tank needs a trim capacitance of {c_trim:.3e} F"
        )));
    }
    Ok(TankPlan {
        l0: d.l0,
        r_l0_series: r_s,
        c_trim,
        f_nominal: tank_resonance(d.l0, d.resonator.l_couple, m.c0 + c_trim),
    })
}

/// Tank trimmed so the open-loop phase is zero at `f0`.
pub fn plan_tank(d: &OscDesign) -> Result<TankPlan> {
    let f0 = d.resonator.f0;
    let ys = sense_transadmittance(&d.resonator, f0)?;
    let zx = 1.0 / admittance_x(d, f0);
    let target = wrap_deg_signed(-(ys.arg() + zx.arg()).to_degrees());
    if target.abs() >= 89.0 {
        return Err(Error::Infeasible(format!(
            "gain-stage load would need a {target:.1} degree phase"
        )));
    }
    plan_for_phase(d, target.to_radians())
}

/// Tank trimmed so `Z_Y` is real at `f0`.
pub fn plan_aligned_tank(d: &OscDesign) -> Result<TankPlan> {
    plan_for_phase(d, 0.0)
}

/// Tank retuned by `delta_hz` from its nominal resonance through `L0`, with
/// the tank Q held.
pub fn detuned_tank(d: &OscDesign, base: &TankPlan, delta_hz: f64) -> Result<TankPlan> {
    if delta_hz == 0.0 {
        return Ok(*base);
    }
    let f_t = base.f_nominal + delta_hz;
    if !(f_t.is_finite() && f_t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "detuning {delta_hz} Hz moves the tank below zero"
        )));
    }
    let m = synthesize_motional(&d.resonator)?;
    let c = m.c0 + base.c_trim;
    let l_par = 1.0 / ((2.0 * PI * f_t).powi(2) * c);
    let inv = 1.0 / l_par - 1.0 / d.resonator.l_couple;
    if inv <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no positive L0 tunes the tank to {f_t:.4e} Hz"
        )));
    }
    let l0 = 1.0 / inv;
    Ok(TankPlan {
        l0,
        r_l0_series: base.r_l0_series * (f_t * l0) / (base.f_nominal * base.l0),
        c_trim: base.c_trim,
        f_nominal: f_t,
    })
}

pub fn build_loop_netlist(d: &OscDesign, tank: &TankPlan, brk: LoopBreak) -> Result<Netlist> {
    d.validate()?;
    let m = synthesize_motional(&d.resonator)?;
    let mut net = Netlist::new(match brk {
        LoopBreak::Closed => "MEMS oscillator loop",
        LoopBreak::Gate => "MEMS oscillator loop, broken at the gate",
        LoopBreak::SenseControl => "MEMS oscillator loop, sense control grounded",
    });
    add_rft_half(&mut net, &d.resonator, &m, "");
    if brk == LoopBreak::SenseControl {
        let dummy = net.node("mt");
        for e in net.elements_mut() {
            if let ElementKind::Vccs { ctrl_p, .. } = &mut e.kind {
                if e.name == "Gmech" {
                    *ctrl_p = dummy;
                }
            }
        }
        net.resistor_with_noise("Rmt", "mt", "0", 1.0, false);
    }
    let gate = if brk == LoopBreak::Gate {
        net.vsource("Vt", NODE_TEST, "0", 1.0);
        NODE_TEST
    } else {
        NODE_X
    };
    net.capacitor("Cin", NODE_X, "0", d.c_in)
        .inductor("Lphi", NODE_X, "p1", d.l_phi)
        .resistor("RLphi", "p1", "0", d.r_lphi)
        .vccs("G1", "0", NODE_Y, gate, "0", d.gm_m1, true, d.gamma)
        .resistor_with_noise("Ro", NODE_Y, "0", d.ro_m1, false)
        .inductor("L0", NODE_Y, "t1", tank.l0)
        .resistor("RL0", "t1", "0", tank.r_l0_series);
    if tank.c_trim > 0.0 {
        net.capacitor("Ctrim", NODE_Y, "0", tank.c_trim);
    }
    Ok(net)
}

/// Open-loop gain `v(X)/v(xt)` at `f`.
pub fn loop_gain_at(net: &MnaSystem<'_>, f: f64) -> Result<Complex64> {
    let sol = net.solve(f)?;
    Ok(sol.voltage(NODE_X)? / sol.voltage(NODE_TEST)?)
}

/// Open-loop gain over a grid.
pub fn loop_gain_response(
    d: &OscDesign,
    tank: &TankPlan,
    grid: &FrequencyGrid,
) -> Result<FrequencyResponse> {
    let net = build_loop_netlist(d, tank, LoopBreak::Gate)?;
    transfer_function(&net, "Vt", &Probe::Node(NODE_X.into()), grid)
}

/// `|v(Y)/v(X)|` of the gain stage at `f0` with the tank trimmed real there.
pub fn stage_gain_mna(d: &OscDesign) -> Result<f64> {
    let tank = plan_aligned_tank(d)?;
    let net = build_loop_netlist(d, &tank, LoopBreak::Gate)?;
    let sol = MnaSystem::new(&net)?.solve(d.resonator.f0)?;
    Ok((sol.voltage(NODE_Y)? / sol.voltage(NODE_TEST)?).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopGainReport {
    pub f_eval: f64,
    pub magnitude: f64,
    pub phase_deg: f64,
    pub startup_margin: f64,
    pub av1: f64,
    pub av2: f64,
    pub r0: f64,
    /// `av1·av2`.
    pub analytic_loop_gain: f64,
    /// `magnitude / analytic_loop_gain`.
    pub agreement_factor: f64,
    /// `|v(Y)/v(X)|` from the nodal solve with a real tank load.
    pub av1_mna: f64,
    pub tank: TankPlan,
}

pub fn loop_gain_report(d: &OscDesign) -> Result<LoopGainReport> {
    let g = gain_av1_av2(d)?;
    let tank = plan_tank(d)?;
    let net = build_loop_netlist(d, &tank, LoopBreak::Gate)?;
    let t = loop_gain_at(&MnaSystem::new(&net)?, d.resonator.f0)?;
    let analytic = g.loop_estimate();
    Ok(LoopGainReport {
        f_eval: d.resonator.f0,
        magnitude: t.norm(),
        phase_deg: wrap_deg_signed(t.arg().to_degrees()),
        startup_margin: t.norm() - 1.0,
        av1: g.av1,
        av2: g.av2,
        r0: g.r0,
        analytic_loop_gain: analytic,
        agreement_factor: t.norm() / analytic,
        av1_mna: stage_gain_mna(d)?,
        tank,
    })
}

/// `Q = (f/2)·|dφ/df|` from a three-point difference of the unwrapped phase
/// at the sample nearest `f0`.
pub fn extract_q(resp: &FrequencyResponse, f0: f64) -> Result<f64> {
    if resp.len() < 3 {
        return Err(Error::Extraction("need at least 3 samples".into()));
    }
    let freqs = resp.frequencies();
    if !(f0 >= freqs[0] && f0 <= freqs[freqs.len() - 1]) {
        return Err(Error::Extraction(format!(
            "{f0} Hz lies outside the sampled band"
        )));
    }
    let i = resp.nearest_index(f0).expect("non-empty");
    if i == 0 || i + 1 == resp.len() {
        return Err(Error::Extraction(format!(
            "{f0} Hz sits at the edge of the grid"
        )));
    }
    let phase = resp.unwrapped_phase();
    let (p0, p1, p2) = (phase[i - 1], phase[i], phase[i + 1]);
    if (p1 - p0).abs() > PI / 2.0 || (p2 - p1).abs() > PI / 2.0 {
        return Err(Error::Extraction(
            "phase wraps across the stencil; refine the grid".into(),
        ));
    }
    let (h1, h2) = (freqs[i] - freqs[i - 1], freqs[i + 1] - freqs[i]);
    let slope = -h2 / (h1 * (h1 + h2)) * p0 + (h2 - h1) / (h1 * h2) * p1
        + h1 / (h2 * (h1 + h2)) * p2;
    Ok(freqs[i] / 2.0 * slope.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombinedQ {
    pub q_osc: f64,
    pub q_l0: f64,
    pub q_mems: f64,
    /// `|q_osc − (q_l0 + q_mems)| / (q_l0 + q_mems)`.
    pub additivity_error: f64,
}

/// Load tank driven by a current: `L` with series `R`, resonated at `f0`.
fn tank_netlist(f0: f64, l: f64, q: f64) -> Netlist {
    let w = 2.0 * PI * f0;
    let r = w * l / q;
    // C puts the zero-phase point of the lossy tank exactly at f0.
    let c = l / (r * r + w * w * l * l);
    let mut net = Netlist::new("load tank");
    net.inductor("L0", "t", "t1", l)
        .resistor("RL0", "t1", "0", r)
        .capacitor("C0", "t", "0", c);
    net
}

/// Series motional branch driven by a voltage source.
fn motional_netlist(m: &MotionalBranch, rm: f64) -> Netlist {
    let mut net = Netlist::new("motional branch");
    net.vsource("V1", "a", "0", 1.0)
        .resistor("Rm", "a", "b", rm)
        .inductor("Lm", "b", "c", m.lm)
        .capacitor("Cm", "c", "0", m.cm);
    net
}

/// Responses `H1` (tank impedance) and `H2` (motional admittance), both
/// resonant at the resonator frequency, on a grid fine enough for the higher Q.
pub fn tank_responses(d: &OscDesign) -> Result<(FrequencyResponse, FrequencyResponse)> {
    d.validate()?;
    let p = &d.resonator;
    let m = synthesize_motional(p)?;
    let step = p.f0 / (100.0 * p.q_mems.max(d.q_l0));
    let grid = FrequencyGrid::centered(p.f0, step, 50);
    let h1 = input_impedance(&tank_netlist(p.f0, d.l0, d.q_l0), ("t", "0"), &grid)?;
    let h2 = transfer_function(
        &motional_netlist(&m, p.rm),
        "V1",
        &Probe::Current("Rm".into()),
        &grid,
    )?;
    Ok((h1, h2))
}

/// Q of each tank and of the cascade `H1·H2` at `f0`.
pub fn combined_q_of(h1: &FrequencyResponse, h2: &FrequencyResponse, f0: f64) -> Result<CombinedQ> {
    for h in [h1, h2] {
        let i = h.nearest_index(f0).ok_or_else(|| Error::Extraction("empty response".into()))?;
        let ph = h.samples[i].1.arg().to_degrees();
        if ph.abs() > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "`{}` is not resonant at {f0} Hz (phase {ph:.2} degrees); use the detuning sweep",
                h.quantity
            )));
        }
    }
    let h = h1.product(h2, "h1*h2")?;
    let q_l0 = extract_q(h1, f0)?;
    let q_mems = extract_q(h2, f0)?;
    let q_osc = extract_q(&h, f0)?;
    Ok(CombinedQ {
        q_osc,
        q_l0,
        q_mems,
        additivity_error: (q_osc - (q_l0 + q_mems)).abs() / (q_l0 + q_mems),
    })
}

pub fn combined_q(d: &OscDesign) -> Result<CombinedQ> {
    let (h1, h2) = tank_responses(d)?;
    combined_q_of(&h1, &h2, d.resonator.f0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetunePoint {
    pub delta_hz: f64,
    /// `None` when no open-loop zero-phase crossing exists near `f0`.
    pub f_osc_hz: Option<f64>,
    pub startup_margin: Option<f64>,
    pub pn_dbchz: Option<f64>,
    /// Q of the tank and motional cascade at `f_osc`.
    pub q_osc: Option<f64>,
    /// Phase-slope Q of the loaded open loop, for reference.
    pub q_loop: Option<f64>,
    pub r0: Option<f64>,
}

impl DetunePoint {
    pub fn oscillating(&self) -> bool {
        self.f_osc_hz.is_some()
    }

    fn lost(delta_hz: f64) -> Self {
        Self {
            delta_hz,
            f_osc_hz: None,
            startup_margin: None,
            pn_dbchz: None,
            q_osc: None,
            q_loop: None,
            r0: None,
        }
    }
}

const CROSSING_TOLERANCE_HZ: f64 = 1e3;

/// Zero crossing of the open-loop phase nearest `f0`, within `±f0/Q_L0`.
fn find_crossing(sys: &MnaSystem<'_>, d: &OscDesign) -> Result<Option<f64>> {
    let f0 = d.resonator.f0;
    let phase = |f: f64| -> Result<f64> { Ok(loop_gain_at(sys, f)?.arg().to_degrees()) };
    let p0 = phase(f0)?;
    if p0 == 0.0 {
        return Ok(Some(f0));
    }
    let step = f0 / (2.0 * d.resonator.q_mems);
    let reach = f0 / d.q_l0;
    let steps = (reach / step).ceil() as usize;
    let crosses = |a: f64, b: f64| a.abs() < 90.0 && b.abs() < 90.0 && a.signum() != b.signum();
    let (mut lo_prev, mut hi_prev) = (p0, p0);
    let mut bracket = None;
    for k in 1..=steps {
        let off = (k as f64 * step).min(reach);
        let (f_hi, f_lo) = (f0 + off, f0 - off);
        let (p_hi, p_lo) = (phase(f_hi)?, phase(f_lo)?);
        let prev_off = (k - 1) as f64 * step;
        if crosses(hi_prev, p_hi) {
            bracket = Some((f0 + prev_off, f_hi));
        } else if crosses(p_lo, lo_prev) {
            bracket = Some((f_lo, f0 - prev_off));
        }
        if bracket.is_some() {
            break;
        }
        hi_prev = p_hi;
        lo_prev = p_lo;
    }
    let Some((mut a, mut b)) = bracket else {
        return Ok(None);
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (phase(c)?.abs(), phase(e)?.abs());
    while b - a > CROSSING_TOLERANCE_HZ {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = phase(c)?.abs();
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = phase(e)?.abs();
        }
    }
    Ok(Some((a + b) / 2.0))
}

/// Impedance of the detuned load: `L0` with loss, trim plus `C0`, and `L1`.
fn tank_impedance(d: &OscDesign, tank: &TankPlan, f: f64) -> Result<Complex64> {
    let m = synthesize_motional(&d.resonator)?;
    let w = 2.0 * PI * f;
    let y = 1.0 / Complex64::new(tank.r_l0_series, w * tank.l0)
        + Complex64::new(0.0, w * (m.c0 + tank.c_trim))
        + 1.0 / Complex64::new(0.0, w * d.resonator.l_couple);
    Ok(1.0 / y)
}

fn motional_admittance(m: &MotionalBranch, rm: f64, f: f64) -> Complex64 {
    let w = 2.0 * PI * f;
    1.0 / Complex64::new(rm, w * m.lm - 1.0 / (w * m.cm))
}

/// Oscillation point and phase noise with the tank moved `delta_hz` from its
/// nominal resonance.
pub fn evaluate_detuned(
    d: &OscDesign,
    base: &TankPlan,
    delta_hz: f64,
    offset_hz: f64,
    opts: &PnOptions,
) -> Result<DetunePoint> {
    let tank = detuned_tank(d, base, delta_hz)?;
    let net = build_loop_netlist(d, &tank, LoopBreak::Gate)?;
    let sys = MnaSystem::new(&net)?;
    let Some(f_osc) = find_crossing(&sys, d)? else {
        return Ok(DetunePoint::lost(delta_hz));
    };
    let t = loop_gain_at(&sys, f_osc)?;
    let h = d.resonator.f0 / (100.0 * d.resonator.q_mems);
    let stencil = [f_osc - h, f_osc, f_osc + h];
    let m = synthesize_motional(&d.resonator)?;
    let combined = stencil
        .iter()
        .map(|&f| Ok((f, tank_impedance(d, &tank, f)? * motional_admittance(&m, d.resonator.rm, f))))
        .collect::<Result<Vec<_>>>()?;
    let q_osc = extract_q(&FrequencyResponse::new("h1*h2", combined), f_osc)?;
    let open_loop = stencil
        .iter()
        .map(|&f| Ok((f, loop_gain_at(&sys, f)?)))
        .collect::<Result<Vec<_>>>()?;
    let q_loop = extract_q(&FrequencyResponse::new("T", open_loop), f_osc)?;
    let r0 = match opts.r0 {
        LeesonR0::ResonatorLoss => leeson_r0(d, opts)?,
        LeesonR0::Loaded => {
            parallel(&[tank_impedance(d, &tank, f_osc)?.norm(), d.resonator.rm, d.ro_m1])
        }
    };
    let f = noise_factor(d)?.f;
    let pn = leeson_pn_with_r0(d, offset_hz, q_osc, f, r0, opts)?;
    Ok(DetunePoint {
        delta_hz,
        f_osc_hz: Some(f_osc),
        startup_margin: Some(t.norm() - 1.0),
        pn_dbchz: Some(pn.pn_dbchz),
        q_osc: Some(q_osc),
        q_loop: Some(q_loop),
        r0: Some(r0),
    })
}

/// Aligned oscillator: the detuning pipeline at zero detuning.
pub fn evaluate_aligned(d: &OscDesign, offset_hz: f64, opts: &PnOptions) -> Result<DetunePoint> {
    evaluate_detuned(d, &plan_tank(d)?, 0.0, offset_hz, opts)
}

pub fn detune_sweep(
    d: &OscDesign,
    deltas: &[f64],
    offset_hz: f64,
    opts: &PnOptions,
) -> Result<Vec<DetunePoint>> {
    let base = plan_tank(d)?;
    let results: Vec<Result<DetunePoint>> = deltas
        .par_iter()
        .map(|&df| evaluate_detuned(d, &base, df, offset_hz, opts))
        .collect();
    results.into_iter().collect()
}

/// CSV `delta_hz,f_osc_hz,startup_margin,pn_dbchz`; lost points leave the
/// last three fields empty.
pub fn write_detune_csv<W: Write>(points: &[DetunePoint], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        delta_hz: f64,
        f_osc_hz: Option<f64>,
        startup_margin: Option<f64>,
        pn_dbchz: Option<f64>,
    }
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(Row {
            delta_hz: p.delta_hz,
            f_osc_hz: p.f_osc_hz,
            startup_margin: p.startup_margin,
            pn_dbchz: p.pn_dbchz,
        })
        .map_err(|e| Error::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}
