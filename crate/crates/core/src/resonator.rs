//! Electrical model of the active-mode resonant fin transistor (RFT).
//!
//! Half-circuit nodes:
//!
//! | node    | role                                                   |
//! |---------|--------------------------------------------------------|
//! | `drive` | drive port: `C0` and the coupling primary `L1` to ground |
//! | `m1`    | coupling secondary `L2` to ground, start of `Rm`       |
//! | `m2`    | between `Rm` and `Lm`                                  |
//! | `m3`    | between `Lm` and `Cm`; `Cm` goes to ground             |
//! | `sense` | sensed drain current, loaded by `Rout` and `Cout`      |
//!
//! `Gmech` injects `gm_mech · v(m3)` into `sense`. At resonance `v(m3)` lags
//! the drive by 90° and is `Q` times larger, which gives the 270° sensed
//! current. The differential build mirrors every element with `_p` / `_n`
//! suffixes on names and nodes.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mna::{input_impedance, MnaSystem};
use crate::netlist::Netlist;
use crate::response::{wrap_deg_positive, FrequencyGrid, FrequencyResponse};

pub const DRIVE: &str = "drive";
pub const SENSE: &str = "sense";
pub const MOTIONAL_CAP_NODE: &str = "m3";

/// Largest accepted `C_m / C_0`.
pub const MAX_COUPLING_RATIO: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonatorParams {
    pub f0: f64,
    pub q_mems: f64,
    pub rm: f64,
    /// `C_m / C_0`.
    pub coupling_ratio: f64,
    pub gm_mech: f64,
    pub r_out: f64,
    pub c_out: f64,
    /// `L_1 = L_2`.
    pub l_couple: f64,
    pub k: f64,
}

impl Default for ResonatorParams {
    fn default() -> Self {
        Self {
            f0: 30e9,
            q_mems: 1e4,
            rm: 332.0,
            coupling_ratio: 1e-4,
            gm_mech: 100e-6,
            r_out: 2e3,
            c_out: 5e-15,
            l_couple: 10e-9,
            k: 1.0,
        }
    }
}

impl ResonatorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f0", self.f0),
            ("q_mems", self.q_mems),
            ("rm", self.rm),
            ("coupling_ratio", self.coupling_ratio),
            ("gm_mech", self.gm_mech),
            ("r_out", self.r_out),
            ("l_couple", self.l_couple),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidDesign(format!(
                    "resonator.{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.c_out.is_finite() && self.c_out >= 0.0) {
            return Err(Error::InvalidDesign(format!(
                "resonator.c_out must be non-negative, got {}",
                self.c_out
            )));
        }
        if self.coupling_ratio > MAX_COUPLING_RATIO {
            return Err(Error::InvalidDesign(format!(
                "resonator.coupling_ratio {} exceeds {MAX_COUPLING_RATIO}",
                self.coupling_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.k) {
            return Err(Error::InvalidDesign(format!(
                "resonator.k must lie in [0, 1], got {}",
                self.k
            )));
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionalBranch {
    pub lm: f64,
    pub cm: f64,
    pub c0: f64,
}

pub fn synthesize_motional(p: &ResonatorParams) -> Result<MotionalBranch> {
    p.validate()?;
    let w0 = p.omega0();
    let lm = p.q_mems * p.rm / w0;
    let cm = 1.0 / (w0 * w0 * lm);
    Ok(MotionalBranch {
        lm,
        cm,
        c0: cm / p.coupling_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RftMode {
    Half,
    Differential,
}

/// Append one RFT half to `net`; `tag` suffixes element and node names.
pub(crate) fn add_rft_half(net: &mut Netlist, p: &ResonatorParams, m: &MotionalBranch, tag: &str) {
    let n = |s: &str| format!("{s}{tag}");
    net.capacitor(&n("C0"), &n(DRIVE), "0", m.c0)
        .inductor(&n("L1"), &n(DRIVE), "0", p.l_couple)
        .inductor(&n("L2"), &n("m1"), "0", p.l_couple)
        .coupling(&n("K1"), &n("L1"), &n("L2"), p.k)
        .resistor(&n("Rm"), &n("m1"), &n("m2"), p.rm)
        .inductor(&n("Lm"), &n("m2"), &n(MOTIONAL_CAP_NODE), m.lm)
        .capacitor(&n("Cm"), &n(MOTIONAL_CAP_NODE), "0", m.cm)
        .vccs(
            &n("Gmech"),
            "0",
            &n(SENSE),
            &n(MOTIONAL_CAP_NODE),
            "0",
            p.gm_mech,
            true,
            1.0,
        )
        .resistor_with_noise(&n("Rout"), &n(SENSE), "0", p.r_out, false);
    if p.c_out > 0.0 {
        net.capacitor(&n("Cout"), &n(SENSE), "0", p.c_out);
    }
}

/// RFT model without any source. `Rout` is a load model and is noiseless.
pub fn build_rft_netlist(p: &ResonatorParams, mode: RftMode) -> Result<Netlist> {
    let m = synthesize_motional(p)?;
    let mut net = Netlist::new(match mode {
        RftMode::Half => "active-mode RFT, half circuit",
        RftMode::Differential => "active-mode RFT, differential",
    });
    match mode {
        RftMode::Half => add_rft_half(&mut net, p, &m, ""),
        RftMode::Differential => {
            add_rft_half(&mut net, p, &m, "_p");
            add_rft_half(&mut net, p, &m, "_n");
        }
    }
    Ok(net)
}

/// Half circuit driven by `Vdrive` (1 V, 0°) at the drive port.
pub fn build_driven_half(p: &ResonatorParams) -> Result<Netlist> {
    let mut net = build_rft_netlist(p, RftMode::Half)?;
    net.vsource("Vdrive", DRIVE, "0", 1.0);
    Ok(net)
}

/// Sensed current over drive voltage at `f`.
pub fn sense_transadmittance(p: &ResonatorParams, f: f64) -> Result<Complex64> {
    let net = build_driven_half(p)?;
    let sol = MnaSystem::new(&net)?.solve(f)?;
    Ok(sol.current("Gmech")? / sol.voltage(DRIVE)?)
}

/// Phase of the sensed output current relative to the drive voltage, in `[0, 360)`.
pub fn resonator_phase_at(p: &ResonatorParams, f: f64) -> Result<f64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {f}"
        )));
    }
    let y = sense_transadmittance(p, f)?;
    Ok(wrap_deg_positive(y.arg().to_degrees()))
}

/// Motional branch current per volt of drive.
pub fn motional_current_response(
    p: &ResonatorParams,
    grid: &FrequencyGrid,
) -> Result<FrequencyResponse> {
    let net = build_driven_half(p)?;
    let mut resp = crate::mna::transfer_function(
        &net,
        "Vdrive",
        &crate::mna::Probe::Current("Rm".into()),
        grid,
    )?;
    resp.quantity = "i(Rm)/v(drive)".into();
    Ok(resp)
}

pub fn drive_port_impedance(p: &ResonatorParams, grid: &FrequencyGrid) -> Result<FrequencyResponse> {
    let net = build_rft_netlist(p, RftMode::Half)?;
    input_impedance(&net, (DRIVE, "0"), grid)
}

/// Motional impedance seen through the coupling: the inverse of the port
/// admittance with coupling minus the port admittance at `k = 0`. This strips
/// the shunt `C0` and the magnetizing inductance `L1` from the port.
pub fn reflected_motional_impedance(p: &ResonatorParams, f: f64) -> Result<Complex64> {
    let grid = FrequencyGrid::List { freqs: vec![f] };
    let coupled = drive_port_impedance(p, &grid)?.samples[0].1;
    let open = drive_port_impedance(&ResonatorParams { k: 0.0, ..p.clone() }, &grid)?.samples[0].1;
    Ok(1.0 / (1.0 / coupled - 1.0 / open))
}

/// `|v(L1)| / |v(Lm)|` at `f` under a 1 V drive.
pub fn coupling_drop_ratio(p: &ResonatorParams, f: f64) -> Result<f64> {
    let net = build_driven_half(p)?;
    let sol = MnaSystem::new(&net)?.solve(f)?;
    let v_l1 = sol.voltage(DRIVE)?;
    let v_lm = sol.voltage("m2")? - sol.voltage(MOTIONAL_CAP_NODE)?;
    Ok(v_l1.norm() / v_lm.norm())
}
