//! Lumped noise model, noise factor, Leeson phase noise and figure of merit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mna::{BOLTZMANN, DEFAULT_TEMPERATURE};
use crate::oscillator::{gain_av1_av2, OscDesign};

/// Which resistance plays `R_0` in the Leeson expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeesonR0 {
    /// `R_0 = R_m`.
    #[default]
    ResonatorLoss,
    /// `R_0 = R_m ∥ Q_L0²·R_L0 ∥ r_o` (the gain-stage load).
    Loaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PnOptions {
    pub temperature: f64,
    /// Carrier power `V_OSC²/2` instead of `V_OSC²`.
    pub carrier_halved: bool,
    pub r0: LeesonR0,
    /// Loaded oscillator Q; `None` uses the resonator Q.
    pub q_osc: Option<f64>,
}

impl Default for PnOptions {
    fn default() -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            carrier_halved: false,
            r0: LeesonR0::ResonatorLoss,
            q_osc: None,
        }
    }
}

/// Noise sources included in the lumped model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSelection {
    pub rm: bool,
    pub r_l0: bool,
    pub gm_m1: bool,
    pub gm_mech: bool,
    pub r_lphi: bool,
}

impl Default for NoiseSelection {
    fn default() -> Self {
        Self::all()
    }
}

impl NoiseSelection {
    pub fn all() -> Self {
        Self {
            rm: true,
            r_l0: true,
            gm_m1: true,
            gm_mech: true,
            r_lphi: true,
        }
    }

    pub fn only_rm() -> Self {
        Self {
            rm: true,
            r_l0: false,
            gm_m1: false,
            gm_mech: false,
            r_lphi: false,
        }
    }
}

/// The five lumped noise terms, in the order `R_m, R_L0, M1 channel,
/// sense channel, R_Lφ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseTerms {
    pub rm: f64,
    pub r_l0: f64,
    pub gm_m1: f64,
    pub gm_mech: f64,
    pub r_lphi: f64,
}

impl NoiseTerms {
    pub fn as_array(&self) -> [f64; 5] {
        [self.rm, self.r_l0, self.gm_m1, self.gm_mech, self.r_lphi]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseFactor {
    pub f: f64,
    /// `1` followed by the four excess addends.
    pub addends: NoiseTerms,
}

pub fn noise_factor(d: &OscDesign) -> Result<NoiseFactor> {
    noise_factor_with(d, NoiseSelection::all())
}

/// `F = 1 + R_m/R_L0 + γ·g_m1·R_m + γ·g_mech·g_m1²·R_m·R_Lφ² + g_m1²·R_m·R_Lφ`.
pub fn noise_factor_with(d: &OscDesign, sel: NoiseSelection) -> Result<NoiseFactor> {
    d.validate()?;
    let rm = d.resonator.rm;
    let g1 = d.gm_m1;
    let on = |b: bool, v: f64| if b { v } else { 0.0 };
    let addends = NoiseTerms {
        rm: 1.0,
        r_l0: on(sel.r_l0, rm / d.r_l0),
        gm_m1: on(sel.gm_m1, d.gamma * g1 * rm),
        gm_mech: on(
            sel.gm_mech,
            d.gamma * d.resonator.gm_mech * g1 * g1 * rm * d.r_lphi * d.r_lphi,
        ),
        r_lphi: on(sel.r_lphi, g1 * g1 * rm * d.r_lphi),
    };
    Ok(NoiseFactor {
        f: addends.total(),
        addends,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LumpedNoise {
    pub temperature: f64,
    pub r0: f64,
    pub av1: f64,
    /// V²/Hz per source.
    pub terms: NoiseTerms,
    pub total: f64,
}

impl LumpedNoise {
    /// Terms divided by `4kT·R_0²/R_m`; these line up with the noise-factor addends.
    pub fn normalized(&self, rm: f64) -> NoiseTerms {
        let unit = 4.0 * BOLTZMANN * self.temperature * self.r0 * self.r0 / rm;
        let t = self.terms;
        NoiseTerms {
            rm: t.rm / unit,
            r_l0: t.r_l0 / unit,
            gm_m1: t.gm_m1 / unit,
            gm_mech: t.gm_mech / unit,
            r_lphi: t.r_lphi / unit,
        }
    }
}

pub fn lumped_noise_power(d: &OscDesign, temperature: f64) -> Result<LumpedNoise> {
    lumped_noise_power_with(d, temperature, NoiseSelection::all())
}

/// `P_n = (4kT/R_m + 4kT/R_L0 + 4kTγ·g_m1)·R_0² + A_v1²·(4kTγ·g_mech + 4kT/R_Lφ)·R_Lφ²`.
pub fn lumped_noise_power_with(
    d: &OscDesign,
    temperature: f64,
    sel: NoiseSelection,
) -> Result<LumpedNoise> {
    check_temperature(temperature)?;
    let g = gain_av1_av2(d)?;
    let four_kt = 4.0 * BOLTZMANN * temperature;
    let r0_sq = g.r0 * g.r0;
    let x_side = g.av1 * g.av1 * d.r_lphi * d.r_lphi;
    let on = |b: bool, v: f64| if b { v } else { 0.0 };
    let terms = NoiseTerms {
        rm: on(sel.rm, four_kt / d.resonator.rm * r0_sq),
        r_l0: on(sel.r_l0, four_kt / d.r_l0 * r0_sq),
        gm_m1: on(sel.gm_m1, four_kt * d.gamma * d.gm_m1 * r0_sq),
        gm_mech: on(sel.gm_mech, four_kt * d.gamma * d.resonator.gm_mech * x_side),
        r_lphi: on(sel.r_lphi, four_kt / d.r_lphi * x_side),
    };
    Ok(LumpedNoise {
        temperature,
        r0: g.r0,
        av1: g.av1,
        total: terms.total(),
        terms,
    })
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {t}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseNoiseResult {
    pub f0: f64,
    pub delta_f: f64,
    pub noise_factor_f: f64,
    pub pn_dbchz: f64,
    pub pn_min_dbchz: f64,
    /// In-loop noise power `F·4kT·R_0²/R_m`, V²/Hz.
    pub p_n_total: f64,
    pub temperature: f64,
    pub q_osc: f64,
    pub r0: f64,
}

/// `R_0` for the Leeson expression under `opts`.
pub fn leeson_r0(d: &OscDesign, opts: &PnOptions) -> Result<f64> {
    Ok(match opts.r0 {
        LeesonR0::ResonatorLoss => d.resonator.rm,
        LeesonR0::Loaded => gain_av1_av2(d)?.r0,
    })
}

/// `10·log10(F·4kT·R_0²/(R_m·V_OSC²)·(f_0/(2·Q·Δf))²)`.
pub fn leeson_pn(
    d: &OscDesign,
    delta_f: f64,
    q_osc: f64,
    f: f64,
    opts: &PnOptions,
) -> Result<PhaseNoiseResult> {
    let r0 = leeson_r0(d, opts)?;
    leeson_pn_with_r0(d, delta_f, q_osc, f, r0, opts)
}

pub fn leeson_pn_with_r0(
    d: &OscDesign,
    delta_f: f64,
    q_osc: f64,
    f: f64,
    r0: f64,
    opts: &PnOptions,
) -> Result<PhaseNoiseResult> {
    d.validate()?;
    check_temperature(opts.temperature)?;
    for (name, v) in [("offset", delta_f), ("q_osc", q_osc), ("r0", r0)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if !(f.is_finite() && f >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "noise factor must be at least 1, got {f}"
        )));
    }
    let f0 = d.resonator.f0;
    let rm = d.resonator.rm;
    let carrier = if opts.carrier_halved {
        d.v_osc * d.v_osc / 2.0
    } else {
        d.v_osc * d.v_osc
    };
    let p_n_min = 4.0 * BOLTZMANN * opts.temperature * r0 * r0 / rm;
    let leeson = (f0 / (2.0 * q_osc * delta_f)).powi(2);
    let pn_min = 10.0 * (p_n_min / carrier * leeson).log10();
    Ok(PhaseNoiseResult {
        f0,
        delta_f,
        noise_factor_f: f,
        pn_dbchz: pn_min + 10.0 * f.log10(),
        pn_min_dbchz: pn_min,
        p_n_total: f * p_n_min,
        temperature: opts.temperature,
        q_osc,
        r0,
    })
}

/// Leeson phase noise of the design with its own noise factor and
/// `opts.q_osc` (resonator Q when unset).
pub fn design_pn(d: &OscDesign, delta_f: f64, opts: &PnOptions) -> Result<PhaseNoiseResult> {
    let f = noise_factor(d)?.f;
    leeson_pn(d, delta_f, opts.q_osc.unwrap_or(d.resonator.q_mems), f, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FomResult {
    pub fom_dbchz: f64,
    pub pn_dbchz: f64,
    pub p_dc: f64,
    pub f0: f64,
    pub delta_f: f64,
}

/// `FoM = −PN + 20·log10(f0/Δf) − 10·log10(P_DC / 1 mW)`.
pub fn fom(pn_dbchz: f64, f0: f64, delta_f: f64, p_dc: f64) -> Result<FomResult> {
    for (name, v) in [("f0", f0), ("offset", delta_f), ("p_dc", p_dc)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if !pn_dbchz.is_finite() {
        return Err(Error::InvalidArgument("phase noise must be finite".into()));
    }
    Ok(FomResult {
        fom_dbchz: -pn_dbchz + 20.0 * (f0 / delta_f).log10() - 10.0 * (p_dc / 1e-3).log10(),
        pn_dbchz,
        p_dc,
        f0,
        delta_f,
    })
}

/// CSV `offset_hz,pn_dbchz` of the design phase noise at each offset.
pub fn write_pn_curve<W: Write>(
    d: &OscDesign,
    offsets: &[f64],
    opts: &PnOptions,
    out: W,
) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        offset_hz: f64,
        pn_dbchz: f64,
    }
    let mut w = csv::Writer::from_writer(out);
    for &off in offsets {
        let r = design_pn(d, off, opts)?;
        w.serialize(Row {
            offset_hz: off,
            pn_dbchz: r.pn_dbchz,
        })
        .map_err(|e| Error::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}
