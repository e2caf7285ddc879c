use multiport_lab::analysis::*;
use multiport_lab::Error;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI, TAU};

#[test]
fn symmetric_curve_at_pi() {
    let curve = sweep(&Device::GroverMichelson, PI, &PhaseGrid::period(257).unwrap()).unwrap();
    let n = curve.samples.len();
    for k in 0..n {
        let a = curve.samples[k].transmittance;
        // mirror image about φ₁ = π, evaluated exactly at 2π − φ₁
        let b = Device::GroverMichelson.transmittance(TAU - curve.samples[k].phi1, PI).unwrap();
        assert!((a - b).abs() <= 1e-10);
        let c = curve.samples[n - 1 - k].transmittance;
        assert!((a - c).abs() <= 1e-10);
    }
}

#[test]
fn grover_michelson_endpoints_are_dark() {
    for phi2 in [0.01, 0.5, PI, 4.0, 6.2] {
        let curve = sweep(&Device::GroverMichelson, phi2, &PhaseGrid::period(33).unwrap()).unwrap();
        assert!(curve.samples[0].transmittance <= 1e-20);
        assert!(curve.samples[32].transmittance <= 1e-20);
    }
}

#[test]
fn michelson_curves_translate() {
    let grid = PhaseGrid::period(200).unwrap();
    let (p2, q2) = (0.4, 1.7);
    let a = sweep(&Device::Michelson, p2, &grid).unwrap();
    for s in &a.samples {
        let shifted = Device::Michelson.transmittance(s.phi1 + (q2 - p2), q2).unwrap();
        assert!((s.transmittance - shifted).abs() <= 1e-10);
    }
}

#[test]
fn finite_difference_matches_analytic_michelson_slope() {
    for k in 0..1000 {
        let phi1 = TAU * k as f64 / 1000.0;
        let phi2 = 0.7;
        let fd = slope(&Device::Michelson, phi1, phi2).unwrap();
        assert!((fd - 0.5 * (phi1 - phi2).sin()).abs() <= 1e-6);
    }
}

#[test]
fn slope_zeros() {
    assert!(slope(&Device::Michelson, 1.2, 1.2).unwrap().abs() <= 1e-9);
    assert!(slope(&Device::GroverMichelson, PI, PI).unwrap().abs() <= 1e-9);
}

#[test]
fn grover_michelson_slope_estimates_converge() {
    for phi2 in [1e-4, 1e-2, 1.0, PI] {
        let p = max_sensitivity(&Device::GroverMichelson, phi2).unwrap();
        let e = slope_estimate(&Device::GroverMichelson, p.argmax_phi1, phi2).unwrap();
        assert!(e.converged, "phi2 = {phi2}");
    }
}

#[test]
fn michelson_max_sensitivity_is_one_half() {
    for phi2 in [0.0, 0.3, 1.0, PI, 5.9] {
        let p = max_sensitivity(&Device::Michelson, phi2).unwrap();
        assert!((p.max_abs_slope - 0.5).abs() <= 1e-9, "{}", p.max_abs_slope);
    }
}

/// Brute-force check on a dense grid with the analytic step left out:
/// the maximiser must not be beaten by any grid secant.
#[test]
fn max_sensitivity_beats_dense_scan() {
    for phi2 in [FRAC_PI_8, FRAC_PI_2, PI, 3.0 * FRAC_PI_2, 0.05] {
        let p = max_sensitivity(&Device::GroverMichelson, phi2).unwrap();
        let n = 200_000;
        let mut best: f64 = 0.0;
        let mut prev = Device::GroverMichelson.transmittance(0.0, phi2).unwrap();
        for k in 1..=n {
            let x = TAU * k as f64 / n as f64;
            let t = Device::GroverMichelson.transmittance(x, phi2).unwrap();
            best = best.max((t - prev).abs() / (TAU / n as f64));
            prev = t;
        }
        assert!(p.max_abs_slope >= best * (1.0 - 1e-9), "phi2 = {phi2}: {} < {best}", p.max_abs_slope);
        assert!(p.max_abs_slope <= best * (1.0 + 1e-3));
    }
}

#[test]
fn max_sensitivity_reference_values() {
    // 30-digit golden-section maximisation of the supermode formula
    let cases = [
        (PI, 0.710_310_355_020_069, None),
        (FRAC_PI_2, 1.267_472_107_724_51, Some(5.694_440_620_961_77)),
        (FRAC_PI_8, 6.698_090_492_380_61, Some(5.979_563_571_288_56)),
        (3.0 * FRAC_PI_2, 1.267_472_107_724_51, Some(0.588_744_686_217_817)),
        (15.0 * FRAC_PI_8, 6.698_090_492_380_61, Some(0.303_621_735_891_025)),
        (0.1, 73.018_650_896_570_4, Some(6.189_040_838_139_11)),
        (0.01, 6_570.750_681_703_53, Some(6.273_243_150_474_03)),
        (1e-3, 650_269.612_231_938, Some(6.282_185_884_640_68)),
        (1e-5, 6_495_115_528.942_6, Some(6.283_175_307_121_85)),
    ];
    for (phi2, expected, argmax) in cases {
        let p = max_sensitivity(&Device::GroverMichelson, phi2).unwrap();
        assert!((p.max_abs_slope - expected).abs() <= 1e-6 * expected, "{phi2}: {}", p.max_abs_slope);
        if let Some(x) = argmax {
            // the peak of |slope| is flat, so its location is only good to ~sqrt(rounding)
            let tol = 1e-4 * phi2.min(TAU - phi2).min(1.0).powi(2).max(1e-9);
            assert!((p.argmax_phi1 - x).abs() <= tol.max(1e-10), "{phi2}: argmax {}", p.argmax_phi1);
        }
    }
}

#[test]
fn sensitivity_diverges_towards_zero() {
    let s = |phi2: f64| max_sensitivity(&Device::GroverMichelson, phi2).unwrap().max_abs_slope;
    assert!(s(1e-3) > s(1e-2));
    assert!(s(1e-2) > s(1e-1));
}

#[test]
fn dominance_over_michelson() {
    let phi2: Vec<f64> = (0..24).map(|k| 1e-3 + (TAU - 2e-3) * k as f64 / 23.0).collect();
    let gm = sensitivity_profile(&Device::GroverMichelson, &phi2).unwrap();
    let m = sensitivity_profile(&Device::Michelson, &phi2).unwrap();
    for (g, m) in gm.points.iter().zip(&m.points) {
        assert!(g.max_abs_slope > m.max_abs_slope, "phi2 = {}", g.phi2);
    }
}

#[test]
fn michelson_bias_at_half() {
    let b = find_bias_point(&Device::Michelson, 0.0, 0.5).unwrap();
    let near_quarter = (b.phi1 - FRAC_PI_2).abs() <= 1e-9 || (b.phi1 - 3.0 * FRAC_PI_2).abs() <= 1e-9;
    assert!(near_quarter, "{}", b.phi1);
    assert!((b.transmittance - 0.5).abs() <= 1e-9);
}

#[test]
fn grover_michelson_bias_is_steeper() {
    let b = find_bias_point(&Device::GroverMichelson, FRAC_PI_8, 0.5).unwrap();
    assert!((b.transmittance - 0.5).abs() <= 1e-9);
    assert!(b.slope.abs() > 0.5);

    let m = find_bias_point(&Device::Michelson, FRAC_PI_8, 0.5).unwrap();
    for delta in [1e-4, 1e-3, 1e-2] {
        let rg = perturbation_response(&Device::GroverMichelson, &b, delta).unwrap();
        let rm = perturbation_response(&Device::Michelson, &m, delta).unwrap();
        assert!(rg.delta_t.abs() > rm.delta_t.abs());
        assert!(!rg.saturated && !rm.saturated);
    }
}

#[test]
fn bias_targets_across_curve() {
    for target in [0.0, 0.1, 0.5, 0.9, 1.0] {
        let b = find_bias_point(&Device::GroverMichelson, FRAC_PI_2, target).unwrap();
        assert!((b.transmittance - target).abs() <= 1e-9, "{target}: {}", b.transmittance);
    }
}

#[test]
fn unreachable_targets() {
    for device in [Device::Michelson, Device::GroverMichelson, Device::BsCavity] {
        let e = find_bias_point(&device, 1.0, 2.0).unwrap_err();
        assert!(matches!(e, Error::TargetUnreachable { .. }));
        let e = find_bias_point(&device, 1.0, -0.5).unwrap_err();
        assert!(matches!(e, Error::TargetUnreachable { .. }));
    }
}

#[test]
fn large_kick_from_steep_bias_saturates() {
    let phi2 = 1e-3;
    let b = find_bias_point(&Device::GroverMichelson, phi2, 0.5).unwrap();
    let r = perturbation_response(&Device::GroverMichelson, &b, 1.0).unwrap();
    assert!(r.saturated);
    let zero = perturbation_response(&Device::GroverMichelson, &b, 0.0).unwrap();
    assert_eq!(zero.delta_t, 0.0);
    assert!(!zero.saturated);
}

#[test]
fn tuning_for_a_target_slope() {
    assert!((solve_phi2_for_sensitivity(0.1).unwrap() - PI).abs() <= 1e-6);
    let at_pi = max_sensitivity(&Device::GroverMichelson, PI).unwrap().max_abs_slope;
    assert!((solve_phi2_for_sensitivity(at_pi).unwrap() - PI).abs() <= 1e-6);

    let phi2 = solve_phi2_for_sensitivity(1e3).unwrap();
    assert!(phi2 < 0.1);
    let s = max_sensitivity(&Device::GroverMichelson, phi2).unwrap().max_abs_slope;
    assert!(s >= 1e3);
    let just_above = max_sensitivity(&Device::GroverMichelson, phi2 * (1.0 + 1e-5)).unwrap().max_abs_slope;
    assert!(just_above < 1e3 * (1.0 + 1e-3));

    for target in [2.0, 10.0, 1e5] {
        let p = solve_phi2_for_sensitivity(target).unwrap();
        let s = max_sensitivity(&Device::GroverMichelson, p).unwrap().max_abs_slope;
        assert!(s >= target && s <= target * 1.01, "{target}: phi2 {p} gives {s}");
    }
}

#[test]
fn sweep_rejects_bad_grid() {
    assert!(PhaseGrid::new(0.0, 1.0, 1).is_err());
    assert!(PhaseGrid::new(2.0, 1.0, 10).is_err());
}

#[test]
fn degenerate_point_propagates() {
    let grid = PhaseGrid::new(0.0, 1.0, 3).unwrap();
    let e = sweep(&Device::GroverMichelson, 0.0, &grid).unwrap_err();
    assert!(matches!(e, Error::DegeneratePhase { .. }));
}
