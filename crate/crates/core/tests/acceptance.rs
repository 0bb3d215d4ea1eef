//! Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
//! when any criterion misses its tolerance.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use memsosc::checks::{
    kcl_fuzz, passivity_margin, reciprocity_error, superposition_error, zero_coupling_error,
    DETUNE_CHECK_DELTAS, FUZZ_SEED, KCL_FUZZ_CASES, PULLING_HALF_BANDWIDTHS,
};
use memsosc::mna::{output_noise, MnaSystem};
use memsosc::oscillator::{
    build_loop_netlist, combined_q, detune_sweep, evaluate_aligned, extract_q, lphi_bounds,
    loop_gain_report, plan_tank, LoopBreak, OscDesign, NODE_Y,
};
use memsosc::phase_noise::{design_pn, fom, leeson_pn, lumped_noise_power, noise_factor, PnOptions};
use memsosc::resonator::resonator_phase_at;
use memsosc::{FrequencyResponse, Netlist, BOLTZMANN};

const OFFSET: f64 = 1e6;
const T: f64 = 300.0;

// Targets and tolerances.
const PN_FLOOR_TARGET: f64 = -167.0;
const PN_FLOOR_TOL_DB: f64 = 0.5;
const F_TARGET: f64 = 32.3;
const F_TOL: f64 = 0.5;
const PN_TARGET: f64 = -152.0;
const PN_TOL_DB: f64 = 1.0;
const F_PHI_TARGET: f64 = 88e9;
const F_PHI_REL_TOL: f64 = 0.01;
const L_MIN_CEILING: f64 = 1e-12;
const FOM30_TARGET: f64 = 229.8;
const FOM30_TOL_DB: f64 = 0.2;
const FOM17_TARGET: f64 = 182.0;
const FOM17_TOL_DB: f64 = 1.0;
const Q_SUM_REL_TOL: f64 = 0.01;
const Q_MEMS_REL_TOL: f64 = 0.002;
const PHASE_270_TOL_DEG: f64 = 2.0;
const BARKHAUSEN_PHASE_TOL_DEG: f64 = 5.0;
const MNA_ORACLE_REL_TOL: f64 = 1e-9;
const PASSIVITY_FLOOR: f64 = -1e-9;
const K0_TOL: f64 = 1e-12;
const PROPERTY_CASES: usize = 200;
const NOISE_REL_TOL: f64 = 0.10;
const T_LINEARITY_TOL: f64 = 1e-12;
// Oracle agreement for quantities recomputed in closed form here.
const ORACLE_REL_TOL: f64 = 1e-12;
const ORACLE_DB_TOL: f64 = 1e-9;
const REPORT_BUDGET_S: f64 = 10.0;

struct Line {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// Leeson in closed form with the carrier taken as `V_OSC²`.
fn leeson_db(f: f64, r0: f64, rm: f64, v: f64, f0: f64, q: f64, df: f64) -> f64 {
    let pn = f * 4.0 * BOLTZMANN * T * r0 * r0 / (rm * v * v) * (f0 / (2.0 * q * df)).powi(2);
    10.0 * pn.log10()
}

fn fom_db(pn: f64, f0: f64, df: f64, p_dc: f64) -> f64 {
    -pn + 20.0 * (f0 / df).log10() - 10.0 * (p_dc / 1e-3).log10()
}

fn criterion_1(d: &OscDesign, o: &PnOptions) -> Line {
    let p = &d.resonator;
    let oracle = leeson_db(1.0, p.rm, p.rm, d.v_osc, p.f0, p.q_mems, OFFSET);
    let got = leeson_pn(d, OFFSET, p.q_mems, 1.0, o).unwrap().pn_dbchz;
    Line {
        id: 1,
        name: "theoretical phase-noise floor",
        passed: (got - PN_FLOOR_TARGET).abs() <= PN_FLOOR_TOL_DB
            && (got - oracle).abs() <= ORACLE_DB_TOL,
        detail: format!("{got:.3} dBc/Hz (closed form {oracle:.3}), target {PN_FLOOR_TARGET} +/- {PN_FLOOR_TOL_DB}"),
    }
}

fn criterion_2(d: &OscDesign, o: &PnOptions) -> Line {
    let p = &d.resonator;
    let (rm, g1) = (p.rm, d.gm_m1);
    let f_oracle = 1.0
        + rm / d.r_l0
        + d.gamma * g1 * rm
        + d.gamma * p.gm_mech * g1 * g1 * rm * d.r_lphi * d.r_lphi
        + g1 * g1 * rm * d.r_lphi;
    let f = noise_factor(d).unwrap().f;
    let pn = design_pn(d, OFFSET, o).unwrap().pn_dbchz;
    let pn_oracle = leeson_db(f_oracle, rm, rm, d.v_osc, p.f0, p.q_mems, OFFSET);
    Line {
        id: 2,
        name: "noise factor and phase noise",
        passed: (f - F_TARGET).abs() <= F_TOL
            && (pn - PN_TARGET).abs() <= PN_TOL_DB
            && rel(f, f_oracle) <= ORACLE_REL_TOL
            && (pn - pn_oracle).abs() <= ORACLE_DB_TOL,
        detail: format!(
            "F = {f:.3} (oracle {f_oracle:.3}, {F_TARGET} +/- {F_TOL}), PN = {pn:.3} dBc/Hz ({PN_TARGET} +/- {PN_TOL_DB})"
        ),
    }
}

fn criterion_3(d: &OscDesign) -> Line {
    let b = lphi_bounds(d).unwrap();
    let f_phi = 1.0 / (2.0 * PI * (d.l_phi * d.c_in).sqrt());
    let l_max = 1.0 / ((2.0 * PI * d.resonator.f0).powi(2) * d.c_in);
    Line {
        id: 3,
        name: "phase-shifter design point",
        passed: rel(b.f_phi, F_PHI_TARGET) <= F_PHI_REL_TOL
            && rel(b.f_phi, f_phi) <= ORACLE_REL_TOL
            && rel(b.l_max, l_max) <= ORACLE_REL_TOL
            && b.l_min < d.l_phi
            && d.l_phi < b.l_max
            && b.l_min < L_MIN_CEILING,
        detail: format!(
            "f_phi = {:.3} GHz (88 +/- 1%), bounds [{:.3e}, {:.3e}] H around L_phi = {:.3e} H",
            b.f_phi / 1e9,
            b.l_min,
            b.l_max,
            d.l_phi
        ),
    }
}

fn criterion_4() -> Line {
    let a = fom(-147.8, 30e9, 1e6, 5.7e-3).unwrap().fom_dbchz;
    let b = fom(-105.0, 17e9, 1e6, 7.2e-3).unwrap().fom_dbchz;
    let (oa, ob) = (fom_db(-147.8, 30e9, 1e6, 5.7e-3), fom_db(-105.0, 17e9, 1e6, 7.2e-3));
    Line {
        id: 4,
        name: "figure of merit",
        passed: (a - FOM30_TARGET).abs() <= FOM30_TOL_DB
            && (b - FOM17_TARGET).abs() <= FOM17_TOL_DB
            && (a - oa).abs() <= ORACLE_DB_TOL
            && (b - ob).abs() <= ORACLE_DB_TOL,
        detail: format!("30 GHz row {a:.3} dB ({FOM30_TARGET} +/- {FOM30_TOL_DB}), 17 GHz row {b:.3} dB ({FOM17_TARGET} +/- {FOM17_TOL_DB})"),
    }
}

/// Q of the tank-times-motional-branch cascade from closed-form responses.
fn cascade_q_oracle(d: &OscDesign) -> f64 {
    let p = &d.resonator;
    let w0 = 2.0 * PI * p.f0;
    let lm = p.q_mems * p.rm / w0;
    let cm = 1.0 / (w0 * w0 * lm);
    let r = w0 * d.l0 / d.q_l0;
    let c = d.l0 / (r * r + w0 * w0 * d.l0 * d.l0);
    let h = |f: f64| {
        let w = 2.0 * PI * f;
        let zl = Complex64::new(r, w * d.l0);
        let ztank = 1.0 / (1.0 / zl + Complex64::new(0.0, w * c));
        let ym = 1.0 / Complex64::new(p.rm, w * lm - 1.0 / (w * cm));
        ztank * ym
    };
    let step = 2e-3 * p.f0 / p.q_mems;
    let q_at = |s: f64| {
        let samples = [-s, 0.0, s].iter().map(|&x| (p.f0 + x, h(p.f0 + x))).collect();
        extract_q(&FrequencyResponse::new("h1h2", samples), p.f0).unwrap()
    };
    (4.0 * q_at(step / 2.0) - q_at(step)) / 3.0
}

fn criterion_5(d: &OscDesign) -> Line {
    let t = Instant::now();
    let c = combined_q(d).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let q_sum = d.q_l0 + d.resonator.q_mems;
    let oracle = cascade_q_oracle(d);
    Line {
        id: 5,
        name: "Q additivity",
        passed: rel(c.q_osc, q_sum) <= Q_SUM_REL_TOL
            && rel(c.q_osc, d.resonator.q_mems) <= Q_MEMS_REL_TOL
            && rel(oracle, q_sum) <= Q_SUM_REL_TOL
            && secs < 1.0,
        detail: format!(
            "Q_OSC = {:.2} (closed-form cascade {oracle:.2}, sum {q_sum:.0} +/- 1%, Q_MEMS +/- 0.2%), {secs:.3} s",
            c.q_osc
        ),
    }
}

/// Half resonator assembled by hand: coupled drive and motional inductors,
/// motional RLC, transconductor sensing the motional capacitor voltage.
fn hand_built_phase(d: &OscDesign) -> f64 {
    let p = &d.resonator;
    let w0 = 2.0 * PI * p.f0;
    let lm = p.q_mems * p.rm / w0;
    let cm = 1.0 / (w0 * w0 * lm);
    let mut n = Netlist::new("hand-built resonator half");
    n.vsource("Vd", "drive", "0", 1.0)
        .capacitor("C0", "drive", "0", cm / p.coupling_ratio)
        .inductor("L1", "drive", "0", p.l_couple)
        .inductor("L2", "m1", "0", p.l_couple)
        .coupling("K1", "L1", "L2", p.k)
        .resistor("Rm", "m1", "m2", p.rm)
        .inductor("Lm", "m2", "m3", lm)
        .capacitor("Cm", "m3", "0", cm)
        .vccs("Gm", "0", "sense", "m3", "0", p.gm_mech, false, 1.0)
        .resistor("Ro", "sense", "0", p.r_out);
    let s = MnaSystem::new(&n).unwrap().solve(p.f0).unwrap();
    let y = s.current("Gm").unwrap() / s.voltage("drive").unwrap();
    y.arg().to_degrees().rem_euclid(360.0)
}

fn criterion_6(d: &OscDesign) -> Line {
    let got = resonator_phase_at(&d.resonator, d.resonator.f0).unwrap();
    let hand = hand_built_phase(d);
    Line {
        id: 6,
        name: "270 degree resonator phase",
        passed: (got - 270.0).abs() <= PHASE_270_TOL_DEG && (hand - 270.0).abs() <= PHASE_270_TOL_DEG,
        detail: format!("{got:.4} deg (hand-built {hand:.4}), 270 +/- {PHASE_270_TOL_DEG}"),
    }
}

fn criterion_7(d: &OscDesign) -> Line {
    let r = loop_gain_report(d).unwrap();
    Line {
        id: 7,
        name: "Barkhausen criteria",
        passed: r.phase_deg.abs() <= BARKHAUSEN_PHASE_TOL_DEG && r.magnitude > 1.0,
        detail: format!(
            "phase {:.4} deg (0 +/- {BARKHAUSEN_PHASE_TOL_DEG}), |T| = {:.2} (> 1), |T|/(Av1*Av2) = {:.3}",
            r.phase_deg, r.magnitude, r.agreement_factor
        ),
    }
}

/// Series and parallel RLC against closed forms, Q included.
fn rlc_error() -> f64 {
    let mut worst = 0.0f64;
    for &(r, q, f0) in &[(332.0, 1e4, 30e9), (50.0, 50.0, 1e9), (13.0, 10.0, 30e9)] {
        let w0 = 2.0 * PI * f0;
        let l = q * r / w0;
        let c = 1.0 / (w0 * w0 * l);
        let rp = q * w0 * l;
        let mut s = Netlist::new("series");
        s.vsource("V", "a", "0", 1.0)
            .resistor("R", "a", "b", r)
            .inductor("L", "b", "c", l)
            .capacitor("C", "c", "0", c);
        let mut p = Netlist::new("parallel");
        p.isource("I", "0", "a", 1.0)
            .resistor("R", "a", "0", rp)
            .inductor("L", "a", "0", l)
            .capacitor("C", "a", "0", c);
        let (ss, ps) = (MnaSystem::new(&s).unwrap(), MnaSystem::new(&p).unwrap());
        let ys = |f: f64| {
            let w = 2.0 * PI * f;
            1.0 / Complex64::new(r, w * l - 1.0 / (w * c))
        };
        let zp = |f: f64| {
            let w = 2.0 * PI * f;
            1.0 / Complex64::new(1.0 / rp, w * c - 1.0 / (w * l))
        };
        for x in [0.3, 0.99, 1.0, 1.0 + 0.3 / q, 3.0] {
            let f = f0 * x;
            let a = ss.solve(f).unwrap().current("R").unwrap();
            let b = ps.solve(f).unwrap().voltage("a").unwrap();
            worst = worst
                .max((a.norm() / ys(f).norm() - 1.0).abs())
                .max((a.arg() - ys(f).arg()).abs())
                .max((b.norm() / zp(f).norm() - 1.0).abs())
                .max((b.arg() - zp(f).arg()).abs());
        }
        let step = 2e-3 * f0 / q;
        let q_of = |series: bool, h: f64| {
            let samples = [-h, 0.0, h]
                .iter()
                .map(|&dx| {
                    let f = f0 + dx;
                    let v = if series {
                        ss.solve(f).unwrap().current("R").unwrap()
                    } else {
                        ps.solve(f).unwrap().voltage("a").unwrap()
                    };
                    (f, v)
                })
                .collect();
            extract_q(&FrequencyResponse::new("h", samples), f0).unwrap()
        };
        for series in [true, false] {
            let qr = (4.0 * q_of(series, step / 2.0) - q_of(series, step)) / 3.0;
            worst = worst.max(rel(qr, q));
        }
    }
    worst
}

fn criterion_8() -> Line {
    let rlc = rlc_error();
    let (kcl, solved) = kcl_fuzz(FUZZ_SEED, KCL_FUZZ_CASES);
    let sup = superposition_error(FUZZ_SEED + 1, PROPERTY_CASES);
    let rec = reciprocity_error(FUZZ_SEED + 2, PROPERTY_CASES);
    let pas = passivity_margin(FUZZ_SEED + 3, PROPERTY_CASES);
    let k0 = zero_coupling_error(FUZZ_SEED + 4, PROPERTY_CASES);
    Line {
        id: 8,
        name: "nodal analysis oracle suite",
        passed: rlc <= MNA_ORACLE_REL_TOL
            && kcl <= MNA_ORACLE_REL_TOL
            && solved == KCL_FUZZ_CASES
            && sup <= MNA_ORACLE_REL_TOL
            && rec <= MNA_ORACLE_REL_TOL
            && pas >= PASSIVITY_FLOOR
            && k0 <= K0_TOL,
        detail: format!(
            "RLC {rlc:.1e}, KCL {kcl:.1e} over {solved} netlists, superposition {sup:.1e}, reciprocity {rec:.1e}, min Re(Z)/|Z| {pas:.2e}, k=0 {k0:.1e}"
        ),
    }
}

fn criterion_9(d: &OscDesign) -> Line {
    let p = &d.resonator;
    let four_kt = 4.0 * BOLTZMANN * T;
    let r0 = 1.0 / (1.0 / p.rm + 1.0 / (d.q_l0 * d.q_l0 * d.r_l0) + 1.0 / d.ro_m1);
    let av1 = (d.gm_m1 * r0).powi(2);
    let oracle = (four_kt / p.rm + four_kt / d.r_l0 + four_kt * d.gamma * d.gm_m1) * r0 * r0
        + av1 * av1 * (four_kt * d.gamma * p.gm_mech + four_kt / d.r_lphi) * d.r_lphi * d.r_lphi;
    let lumped = lumped_noise_power(d, T).unwrap().total;
    let tank = plan_tank(d).unwrap();
    let net = build_loop_netlist(d, &tank, LoopBreak::SenseControl).unwrap();
    let cold = output_noise(&net, NODE_Y, p.f0, T).unwrap().total;
    let hot = output_noise(&net, NODE_Y, p.f0, 2.0 * T).unwrap().total;
    let ratio = cold / lumped;
    let t_lin = (hot / cold / 2.0 - 1.0).abs();
    Line {
        id: 9,
        name: "noise cross-check",
        passed: rel(lumped, oracle) <= ORACLE_REL_TOL
            && (ratio - 1.0).abs() <= NOISE_REL_TOL
            && t_lin <= T_LINEARITY_TOL,
        detail: format!(
            "MNA {cold:.4e} V^2/Hz vs lumped {lumped:.4e} V^2/Hz, ratio {ratio:.4} (1 +/- {NOISE_REL_TOL}), temperature linearity {t_lin:.1e}"
        ),
    }
}

fn criterion_10(d: &OscDesign, o: &PnOptions) -> Line {
    let f0 = d.resonator.f0;
    let pts = detune_sweep(d, &DETUNE_CHECK_DELTAS, OFFSET, o).unwrap();
    let aligned = evaluate_aligned(d, OFFSET, o).unwrap();
    let bound = PULLING_HALF_BANDWIDTHS * f0 / (2.0 * d.resonator.q_mems);
    let pns: Option<Vec<f64>> = pts.iter().map(|p| p.pn_dbchz).collect();
    let pulls: Option<Vec<f64>> = pts.iter().map(|p| p.f_osc_hz.map(|f| (f - f0).abs())).collect();
    let (passed, detail) = match (pns, pulls) {
        (Some(pns), Some(pulls)) => {
            let monotone = pns.windows(2).all(|w| w[1] >= w[0]);
            let pull = pulls.iter().cloned().fold(0.0, f64::max);
            let same = pts[0] == aligned;
            (
                monotone && pull <= bound && same,
                format!(
                    "PN {:?} dBc/Hz non-improving: {monotone}, max pulling {pull:.3e} Hz (<= {bound:.3e}), zero detune bit-identical: {same}",
                    pns.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
                ),
            )
        }
        _ => (false, "oscillation lost inside the checked range".into()),
    };
    Line { id: 10, name: "detuning properties", passed, detail }
}

fn main() -> ExitCode {
    let d = OscDesign::default();
    let o = PnOptions::default();
    let start = Instant::now();
    let lines = vec![
        criterion_1(&d, &o),
        criterion_2(&d, &o),
        criterion_3(&d),
        criterion_4(),
        criterion_5(&d),
        criterion_6(&d),
        criterion_7(&d),
        criterion_8(),
        criterion_9(&d),
        criterion_10(&d, &o),
    ];
    let secs = start.elapsed().as_secs_f64();
    let mut failed = 0;
    for l in &lines {
        println!("[{}] {:>2} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
        failed += usize::from(!l.passed);
    }
    let timing = secs < REPORT_BUDGET_S;
    println!(
        "[{}] -- full run: {secs:.2} s (< {REPORT_BUDGET_S} s)",
        if timing { "PASS" } else { "FAIL" }
    );
    failed += usize::from(!timing);
    println!("acceptance: {} of {} criteria passed", lines.len() + 1 - failed, lines.len() + 1);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
