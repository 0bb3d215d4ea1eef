use std::f64::consts::PI;

use memsosc::mna::{ac_sweep, input_impedance, MnaSystem, Probe};
use memsosc::oscillator::{
    combined_q, detune_sweep, evaluate_aligned, extract_q, loop_gain_report, write_detune_csv,
    GainConvention, OscDesign,
};
use memsosc::phase_noise::{design_pn, PnOptions};
use memsosc::resonator::{
    build_rft_netlist, motional_current_response, synthesize_motional, ResonatorParams, RftMode,
};
use memsosc::{FrequencyGrid, Netlist};

fn series_rlc(r: f64, q: f64, f0: f64) -> Netlist {
    let w0 = 2.0 * PI * f0;
    let l = q * r / w0;
    let mut n = Netlist::new("series rlc");
    n.vsource("V1", "a", "0", 1.0)
        .resistor("R1", "a", "b", r)
        .inductor("L1", "b", "c", l)
        .capacitor("C1", "c", "0", 1.0 / (w0 * w0 * l));
    n
}

#[test]
fn sweep_of_10001_points_peaks_at_resonance() {
    let net = series_rlc(50.0, 100.0, 30e9);
    let grid = FrequencyGrid::linear(29.9e9, 30.1e9, 10001);
    let r = &ac_sweep(&net, &grid, &[Probe::Current("R1".into())]).unwrap()[0];
    assert_eq!(r.len(), 10001);
    let mags = r.magnitudes();
    let peak = (0..mags.len()).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
    assert_eq!(peak, 5000);
    assert!((r.samples[peak].0 - 30e9).abs() < 1.0);
    assert!((mags[peak] * 50.0 - 1.0).abs() < 1e-9);
}

#[test]
fn extract_q_converges_with_grid_step() {
    let (q, f0) = (50.0, 1e9);
    let net = series_rlc(10.0, q, f0);
    let err = |step: f64| {
        let grid = FrequencyGrid::centered(f0, step, 4);
        let r = &ac_sweep(&net, &grid, &[Probe::Current("R1".into())]).unwrap()[0];
        (extract_q(r, f0).unwrap() / q - 1.0).abs()
    };
    let coarse = f0 / q * 0.2;
    let errs: Vec<f64> = (0..5).map(|k| err(coarse / f64::from(1 << k))).collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] / 2.0, "{errs:?}");
    }
    assert!(errs[4] < 1e-3, "{errs:?}");
}

#[test]
fn resonator_q_is_recovered() {
    let p = ResonatorParams::default();
    let grid = FrequencyGrid::centered(p.f0, p.f0 / (200.0 * p.q_mems), 20);
    let r = motional_current_response(&p, &grid).unwrap();
    let q = extract_q(&r, p.f0).unwrap();
    assert!((q / p.q_mems - 1.0).abs() < 5e-3, "{q}");
}

#[test]
fn differential_build_doubles_the_half_with_no_common_mode() {
    let p = ResonatorParams::default();
    let half = build_rft_netlist(&p, RftMode::Half).unwrap();
    let mut hn = half.clone();
    hn.vsource("Vd", "drive", "0", 1.0);
    let mut diff = build_rft_netlist(&p, RftMode::Differential).unwrap();
    diff.vsource("Vp", "drive_p", "0", 1.0).vsource("Vn", "0", "drive_n", 1.0);
    for f in [p.f0 * 0.999, p.f0, p.f0 * 1.001] {
        let h = MnaSystem::new(&hn).unwrap().solve(f).unwrap().voltage("sense").unwrap();
        let s = MnaSystem::new(&diff).unwrap().solve(f).unwrap();
        let (sp, sn) = (s.voltage("sense_p").unwrap(), s.voltage("sense_n").unwrap());
        assert!(((sp - sn) - 2.0 * h).norm() <= 1e-12 * h.norm());
        assert!((sp + sn).norm() <= 1e-12 * h.norm());
    }
}

#[test]
fn tank_peak_impedance_is_q_squared_r() {
    let (f0, q, r) = (30e9, 10.0, 13.0);
    let w0 = 2.0 * PI * f0;
    let l = q * r / w0;
    let c = l / (r * r + w0 * w0 * l * l);
    let mut net = Netlist::new("tank");
    net.inductor("L0", "t", "x", l)
        .resistor("R0", "x", "0", r)
        .capacitor("C0", "t", "0", c);
    let grid = FrequencyGrid::linear(0.9 * f0, 1.1 * f0, 2001);
    let z = input_impedance(&net, ("t", "0"), &grid).unwrap();
    let peak = z.magnitudes().into_iter().fold(0.0, f64::max);
    assert!((peak / (q * q * r) - 1.0).abs() < 0.02, "{peak}");
}

#[test]
fn q_additivity_over_the_grid() {
    for q_mems in [1e2, 1e3, 1e4] {
        for q_l0 in [5.0, 10.0, 30.0] {
            let mut d = OscDesign::default();
            d.resonator.q_mems = q_mems;
            d.q_l0 = q_l0;
            let c = combined_q(&d).unwrap();
            assert!(c.additivity_error < 0.01, "{q_mems} {q_l0}: {c:?}");
        }
    }
}

#[test]
fn motional_values_follow_the_card() {
    let p = ResonatorParams::default();
    let m = synthesize_motional(&p).unwrap();
    let w0 = 2.0 * PI * p.f0;
    assert!((w0 * m.lm / p.rm / p.q_mems - 1.0).abs() < 1e-12);
    assert!((w0 * w0 * m.lm * m.cm - 1.0).abs() < 1e-12);
    assert!((m.cm / m.c0 / p.coupling_ratio - 1.0).abs() < 1e-12);
}

#[test]
fn single_stage_convention_agrees_within_two() {
    let d = OscDesign {
        av1_convention: GainConvention::SingleStage,
        ..OscDesign::default()
    };
    let r = loop_gain_report(&d).unwrap();
    assert!(r.agreement_factor > 0.5 && r.agreement_factor < 2.0, "{}", r.agreement_factor);
}

#[test]
fn zero_detune_matches_the_aligned_pipeline() {
    let d = OscDesign::default();
    let o = PnOptions::default();
    let a = evaluate_aligned(&d, 1e6, &o).unwrap();
    let s = detune_sweep(&d, &[0.0], 1e6, &o).unwrap();
    assert_eq!(s[0], a);
    let pn = design_pn(&d, 1e6, &o).unwrap().pn_dbchz;
    assert!((a.pn_dbchz.unwrap() - pn).abs() < 0.01);
}

#[test]
fn detune_csv_is_stable() {
    let d = OscDesign::default();
    let o = PnOptions::default();
    let pts = detune_sweep(&d, &[0.0, 1e9, 2e9], 1e6, &o).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_detune_csv(&pts, &mut a).unwrap();
    write_detune_csv(&detune_sweep(&d, &[0.0, 1e9, 2e9], 1e6, &o).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("delta_hz,f_osc_hz,startup_margin,pn_dbchz\n"));
    assert_eq!(text.lines().count(), 4);
}
