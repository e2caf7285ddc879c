//! Closed forms against the closure engine and against direct formulas.

use multiport_lab::closure::{block_diag, close, close_series_truncated, closure_spectral_radius, link_close};
use multiport_lab::closure::{ClosureSpec, Link, LinkSet, Termination};
use multiport_lab::devices::*;
use multiport_lab::scattering::{check_unitary, make_grover_coin};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

fn grid64() -> impl Iterator<Item = (f64, f64)> {
    (0..64).flat_map(|i| (0..64).map(move |j| (TAU * i as f64 / 64.0, TAU * j as f64 / 64.0)))
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

#[test]
fn single_seal_reflection_formula() {
    for k in 0..1000 {
        let phi = TAU * k as f64 / 1000.0;
        let direct = (cis(phi) - 2.0).inv();
        let net = grover_single_seal_network(phi);
        let s = close(&net.matrix, &net.closure).unwrap().effective;
        for i in 0..3 {
            assert!((s.get(i, i) - direct).norm() <= 1e-12, "phi = {phi}");
            for j in 0..3 {
                if i != j {
                    assert!((s.get(i, j) - (1.0 + direct)).norm() <= 1e-12);
                }
            }
        }
        let a = grover_single_seal_amplitudes(phi);
        assert!((a.r.norm_sqr() + 2.0 * a.t.norm_sqr() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn michelson_matches_closure() {
    for (p1, p2) in grid64() {
        let a = michelson_amplitudes(p1, p2);
        let net = michelson_network(p1, p2);
        let s = close(&net.matrix, &net.closure).unwrap().effective;
        assert!((s.get(0, 0) - a.r).norm() <= 1e-12);
        assert!((s.get(1, 0) - a.t).norm() <= 1e-12);
        let t = (0.5 * (p1 - p2)).sin().powi(2);
        assert!((a.transmittance() - t).abs() <= 1e-12);
    }
}

#[test]
fn michelson_is_a_function_of_phase_difference() {
    for (p1, p2) in grid64() {
        for delta in [0.1, -2.3, 7.0] {
            let a = michelson_amplitudes(p1, p2).transmittance();
            let b = michelson_amplitudes(p1 + delta, p2 + delta).transmittance();
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn bs_cavity_reflection() {
    let mut min_r = f64::INFINITY;
    for (p1, p2) in grid64() {
        let net = bs_cavity_network(p1, p2);
        let s = close(&net.matrix, &net.closure).unwrap().effective;
        let r = s.get(0, 0).norm_sqr();
        let direct = 1.0 / (5.0 - 4.0 * (p1 + p2).cos());
        assert!((r - direct).abs() <= 1e-10);
        let p = bs_cavity_probabilities(p1, p2);
        assert!((p.reflectance - direct).abs() <= 1e-12);
        min_r = min_r.min(r);
    }
    assert!((min_r - 1.0 / 9.0).abs() <= 1e-10);
}

#[test]
fn grover_michelson_matches_closure_and_direct_formula() {
    for (p1, p2) in grid64() {
        if p1 == 0.0 && p2 == 0.0 {
            continue;
        }
        let a = grover_michelson_amplitudes(p1, p2).unwrap();
        let net = grover_michelson_network(p1, p2);
        let s = close(&net.matrix, &net.closure).unwrap().effective;
        assert!((s.get(0, 0) - a.r).norm() <= 1e-10, "({p1}, {p2})");
        assert!((s.get(1, 0) - a.t).norm() <= 1e-10);
        assert!((a.reflectance() + a.transmittance() - 1.0).abs() <= 1e-12);

        // supermode form evaluated directly, away from the resonance
        let b = 0.5 * (cis(p1) + cis(p2));
        let c = 0.5 * (cis(p1) - cis(p2));
        if (b - 1.0).norm() > 1e-3 {
            let core = c * c / (2.0 * b - 2.0) - 0.5 * b;
            assert!((core - 0.5 - a.r).norm() <= 1e-10);
            assert!((core + 0.5 - a.t).norm() <= 1e-10);
        }
    }
}

#[test]
fn grover_michelson_fixed_points() {
    for k in 1..64 {
        let p2 = TAU * k as f64 / 64.0;
        assert!(grover_michelson_amplitudes(0.0, p2).unwrap().transmittance() <= 1e-24);
    }
    assert!((grover_michelson_amplitudes(PI, PI).unwrap().transmittance() - 1.0).abs() <= 1e-10);
    assert!(grover_michelson_amplitudes(0.0, 0.0).is_err());
}

#[test]
fn supermode_coefficients_are_michelson_amplitudes() {
    for (p1, p2) in grid64() {
        let m = michelson_amplitudes(p1, p2);
        let c = michelson_supermode_coeffs(p1, p2);
        assert!((c.b + m.r).norm() <= 1e-15);
        assert!((c.c + m.t).norm() <= 1e-15);
    }
}

fn fused(d1: usize, d2: usize) -> multiport_lab::scattering::ScatteringMatrix {
    let a = make_grover_coin(d1).unwrap();
    let b = make_grover_coin(d2).unwrap();
    let s = block_diag(&a, &b);
    let link = Link::new(format!("A.p{d1}"), "B.p1", 0.0);
    link_close(&s, &LinkSet::new(vec![link]).unwrap()).unwrap().effective
}

#[test]
fn coin_fusion_grows_the_coin() {
    for (d1, d2) in [(3, 3), (3, 4), (4, 4), (5, 7)] {
        let s = fused(d1, d2);
        let g = make_grover_coin(d1 + d2 - 2).unwrap();
        assert!(s.entries().max_abs_diff(g.entries()) <= 1e-10, "{d1} + {d2}");
        assert!(check_unitary(&s, 1e-12).ok);
    }
}

#[test]
fn series_converges_for_single_seal() {
    let net = grover_single_seal_network(1.3);
    let rho = closure_spectral_radius(&net.matrix, &net.closure).unwrap();
    assert!((rho - 0.5).abs() <= 1e-12);
    let exact = close(&net.matrix, &net.closure).unwrap().effective;
    for n in [5usize, 10, 20, 40] {
        let approx = close_series_truncated(&net.matrix, &net.closure, n).unwrap();
        let err = approx.max_abs_diff(&exact).unwrap();
        let bound = 2.0 * rho.powi(n as i32 + 1) / (1.0 - rho);
        assert!(err <= bound + 1e-15, "N = {n}: {err} > {bound}");
    }
}

#[test]
fn no_mirror_seal_flips_feedback_sign() {
    // a bare loop at φ equals a mirror seal at φ + π
    let g = make_grover_coin(4).unwrap();
    let bare = ClosureSpec::seals(vec![Termination {
        port: "p4".into(),
        round_trip_phase: 0.4,
        has_mirror: false,
    }]);
    let mirrored = ClosureSpec::seals(vec![Termination::mirror("p4", 0.4 + PI)]);
    let a = close(&g, &bare).unwrap().effective;
    let b = close(&g, &mirrored).unwrap().effective;
    assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
}
