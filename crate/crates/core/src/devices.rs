//! Closed-form amplitudes for the standard interferometer topologies.
//!
//! Each model has a matching `*_network` builder that expresses the same
//! device as a matrix plus seals, so the closure engine can check it.
//!
//! Phases are never reduced before evaluation, except inside
//! [`phasor_minus_one`], which works with the offset from the nearest
//! multiple of 2π so that `e^{iφ} − 1` keeps full relative precision.

use crate::closure::{ClosureSpec, Termination};
use crate::error::{Error, Result};
use crate::scattering::{make_beam_splitter_4port, make_grover_coin, ScatteringMatrix};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Distance of `|B − 1|` below which the Grover-Michelson is refused.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Reflection and transmission amplitude of a two-port device.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPortAmplitudes {
    pub r: Complex64,
    pub t: Complex64,
}

impl TwoPortAmplitudes {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }
}

/// Reflection and transmission probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probabilities {
    pub reflectance: f64,
    pub transmittance: f64,
}

/// Single-seal amplitudes: `r` back into the input port, `t` into each of
/// the two other open ports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleSealAmplitudes {
    pub r: Complex64,
    pub t: Complex64,
}

/// Half-sum and half-difference of the two cavity phasors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MichelsonSupermodeCoeffs {
    pub b: Complex64,
    pub c: Complex64,
}

/// Phase reduced to `[0, 2π)`, for reporting only.
pub fn reduce_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `e^{iφ} − 1`, accurate to full relative precision near multiples of 2π.
pub fn phasor_minus_one(phi: f64) -> Complex64 {
    let u = phi - TAU * (phi / TAU).round();
    let s = (0.5 * u).sin();
    Complex64::new(-2.0 * s * s, u.sin())
}

/// Standard Michelson: beam-splitter with mirrors behind ports 3 and 4.
pub fn michelson_amplitudes(phi1: f64, phi2: f64) -> TwoPortAmplitudes {
    let e1 = Complex64::from_polar(1.0, phi1);
    let e2 = Complex64::from_polar(1.0, phi2);
    TwoPortAmplitudes {
        r: -0.5 * (e1 + e2),
        t: -0.5 * (e1 - e2),
    }
}

pub fn michelson_supermode_coeffs(phi1: f64, phi2: f64) -> MichelsonSupermodeCoeffs {
    let e1 = Complex64::from_polar(1.0, phi1);
    let e2 = Complex64::from_polar(1.0, phi2);
    MichelsonSupermodeCoeffs {
        b: 0.5 * (e1 + e2),
        c: 0.5 * (e1 - e2),
    }
}

/// Beam-splitter with mirrors on opposite sides, forming a cavity.
pub fn bs_cavity_probabilities(phi1: f64, phi2: f64) -> Probabilities {
    let reflectance = 1.0 / (5.0 - 4.0 * (phi1 + phi2).cos());
    Probabilities {
        reflectance,
        transmittance: 1.0 - reflectance,
    }
}

/// Four-port Grover coin with one sealed port.
pub fn grover_single_seal_amplitudes(phi: f64) -> SingleSealAmplitudes {
    // e^{iφ} − 2 written through e^{iφ} − 1 so φ ≈ 0 stays exact
    let r = (phasor_minus_one(phi) - 1.0).inv();
    SingleSealAmplitudes { r, t: 1.0 + r }
}

/// Grover coin with ports 3 and 4 sealed at phases φ₁ and φ₂, input at port 1.
///
/// ```text
/// r = C²/(2B − 2) − B/2 − 1/2
/// t = C²/(2B − 2) − B/2 + 1/2
/// ```
///
/// `B − 1` and `C` are assembled from `e^{iφ} − 1` terms; the naive form
/// loses most of its digits on the steep resonance near φ₁ + φ₂ ≡ 0.
pub fn grover_michelson_amplitudes(phi1: f64, phi2: f64) -> Result<TwoPortAmplitudes> {
    let d1 = phasor_minus_one(phi1);
    let d2 = phasor_minus_one(phi2);
    let b_minus_one = 0.5 * (d1 + d2);
    let distance = b_minus_one.norm();
    if !(distance > DEGENERATE_TOL) {
        return Err(Error::DegeneratePhase { phi1, phi2, distance });
    }
    let b = 1.0 + b_minus_one;
    let c = 0.5 * (d1 - d2);
    let cavity = c * c / (2.0 * b_minus_one);
    Ok(TwoPortAmplitudes {
        r: cavity - 0.5 * b - 0.5,
        t: cavity - 0.5 * b + 0.5,
    })
}

/// A device written as matrix plus closure, with the input and
/// transmission ports named.
#[derive(Clone, Debug)]
pub struct Network {
    pub matrix: ScatteringMatrix,
    pub closure: ClosureSpec,
    pub input: String,
    pub output: String,
}

pub fn michelson_network(phi1: f64, phi2: f64) -> Network {
    Network {
        matrix: make_beam_splitter_4port(),
        closure: ClosureSpec::seals(vec![Termination::mirror("p3", phi1), Termination::mirror("p4", phi2)]),
        input: "p1".into(),
        output: "p2".into(),
    }
}

/// Mirrors behind p1 and p3, on opposite sides of the splitter.
pub fn bs_cavity_network(phi1: f64, phi2: f64) -> Network {
    Network {
        matrix: make_beam_splitter_4port(),
        closure: ClosureSpec::seals(vec![Termination::mirror("p1", phi1), Termination::mirror("p3", phi2)]),
        input: "p2".into(),
        output: "p4".into(),
    }
}

pub fn grover_single_seal_network(phi: f64) -> Network {
    Network {
        matrix: make_grover_coin(4).expect("d = 4"),
        closure: ClosureSpec::seals(vec![Termination::mirror("p4", phi)]),
        input: "p1".into(),
        output: "p2".into(),
    }
}

pub fn grover_michelson_network(phi1: f64, phi2: f64) -> Network {
    Network {
        matrix: make_grover_coin(4).expect("d = 4"),
        closure: ClosureSpec::seals(vec![Termination::mirror("p3", phi1), Termination::mirror("p4", phi2)]),
        input: "p1".into(),
        output: "p2".into(),
    }
}
