//! Transmission sweeps, phase sensitivity and bias-point calibration.
//!
//! Sensitivity is `|∂T/∂φ₁|` at fixed φ₂. For the Grover-Michelson the
//! steepest part of a curve narrows like φ₂² as φ₂ approaches a multiple
//! of 2π, so both the finite-difference step and the search grid adapt to
//! the feature they are looking at.

use crate::closure::{close, ClosedDevice};
use crate::devices::{
    bs_cavity_network, bs_cavity_probabilities, grover_michelson_amplitudes, grover_michelson_network,
    grover_single_seal_amplitudes, grover_single_seal_network, michelson_amplitudes, michelson_network,
    reduce_phase, Probabilities,
};
use crate::error::{Error, Result};
use crate::netlist::CompiledNetlist;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

/// A device whose transmission can be evaluated at `(φ₁, φ₂)`.
#[derive(Clone, Debug)]
pub enum Device {
    Michelson,
    BsCavity,
    /// Grover 4-port with one seal; φ₂ is ignored and `T` is the total
    /// transmission into both other open ports, so `R + T = 1`.
    GroverSingleSeal,
    GroverMichelson,
    Netlist(Arc<CompiledNetlist>),
}

impl Device {
    pub const NAMES: [&'static str; 4] = ["michelson", "bs-cavity", "grover-single-seal", "grover-michelson"];

    pub fn from_name(name: &str) -> Option<Device> {
        match name {
            "michelson" => Some(Device::Michelson),
            "bs-cavity" => Some(Device::BsCavity),
            "grover-single-seal" => Some(Device::GroverSingleSeal),
            "grover-michelson" => Some(Device::GroverMichelson),
            _ => None,
        }
    }

    pub fn id(&self) -> String {
        match self {
            Device::Michelson => "michelson".into(),
            Device::BsCavity => "bs-cavity".into(),
            Device::GroverSingleSeal => "grover-single-seal".into(),
            Device::GroverMichelson => "grover-michelson".into(),
            Device::Netlist(n) => n.name().to_string(),
        }
    }

    /// Fast path: closed forms for the named devices, the closure engine
    /// for netlists.
    pub fn probabilities(&self, phi1: f64, phi2: f64) -> Result<Probabilities> {
        Ok(match self {
            Device::Michelson => {
                let a = michelson_amplitudes(phi1, phi2);
                Probabilities {
                    reflectance: a.reflectance(),
                    transmittance: a.transmittance(),
                }
            }
            Device::BsCavity => bs_cavity_probabilities(phi1, phi2),
            Device::GroverSingleSeal => {
                let a = grover_single_seal_amplitudes(phi1);
                Probabilities {
                    reflectance: a.r.norm_sqr(),
                    transmittance: 2.0 * a.t.norm_sqr(),
                }
            }
            Device::GroverMichelson => {
                let a = grover_michelson_amplitudes(phi1, phi2)?;
                Probabilities {
                    reflectance: a.reflectance(),
                    transmittance: a.transmittance(),
                }
            }
            Device::Netlist(n) => n.probabilities(phi1, phi2)?,
        })
    }

    pub fn transmittance(&self, phi1: f64, phi2: f64) -> Result<f64> {
        self.probabilities(phi1, phi2).map(|p| p.transmittance)
    }

    /// Effective open-port matrix from the closure engine.
    pub fn closed(&self, phi1: f64, phi2: f64) -> Result<ClosedDevice> {
        let net = match self {
            Device::Michelson => michelson_network(phi1, phi2),
            Device::BsCavity => bs_cavity_network(phi1, phi2),
            Device::GroverSingleSeal => grover_single_seal_network(phi1),
            Device::GroverMichelson => grover_michelson_network(phi1, phi2),
            Device::Netlist(n) => return n.close(phi1, phi2),
        };
        close(&net.matrix, &net.closure)
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// `count` evenly spaced phases from `start` to `stop`, both included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl PhaseGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {count}")));
        }
        if !(start.is_finite() && stop.is_finite() && stop > start) {
            return Err(Error::InvalidArgument(format!("grid needs start < stop, got {start}:{stop}")));
        }
        Ok(Self { start, stop, count })
    }

    /// One full period of φ₁.
    pub fn period(count: usize) -> Result<Self> {
        Self::new(0.0, TAU, count)
    }

    pub fn point(&self, i: usize) -> f64 {
        let frac = i as f64 / (self.count - 1) as f64;
        self.start + (self.stop - self.start) * frac
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSample {
    pub phi1: f64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCurve {
    pub device_id: String,
    pub phi2: f64,
    pub samples: Vec<SweepSample>,
}

impl SweepCurve {
    /// Largest `|R + T − 1|` over the samples.
    pub fn max_conservation_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.reflectance + s.transmittance - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityPoint {
    pub phi2: f64,
    pub max_abs_slope: f64,
    /// Reported in `[0, 2π)`.
    pub argmax_phi1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityProfile {
    pub device_id: String,
    pub points: Vec<SensitivityPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasPoint {
    pub phi1: f64,
    pub phi2: f64,
    pub transmittance: f64,
    pub slope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationResponse {
    pub delta_t: f64,
    /// The readout crossed a transmittance extremum on `[φ₁, φ₁ + δ]`.
    pub saturated: bool,
}

// ---------------------------------------------------------------------------
// derivatives

const COARSE_STEP: f64 = 7.62939453125e-6; // 2^-17
const FINE_STEP: f64 = 9.5367431640625e-7; // 2^-20
const STEP_SHRINK: f64 = 8.0;
const SLOPE_RTOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeEstimate {
    pub value: f64,
    /// Step of the accepted five-point stencil.
    pub step: f64,
    /// Whether two successive steps agreed to `1e-6` relative.
    pub converged: bool,
}

fn five_point(f: &impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    let fm2 = f(x - 2.0 * h)?;
    let fm1 = f(x - h)?;
    let fp1 = f(x + h)?;
    let fp2 = f(x + 2.0 * h)?;
    Ok((fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h))
}

fn slopes_agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= SLOPE_RTOL * a.abs().max(b.abs()).max(1e-3)
}

/// Five-point central difference, checked against the next coarser step.
///
/// Starts from `h ≈ 1e-6` checked against `h ≈ 1e-5`; while the two
/// disagree the pair moves down by a factor of eight. Steps are powers of
/// two so `x ± h` and `x ± 2h` are exact for phases of order one.
pub fn derivative(f: impl Fn(f64) -> Result<f64>, x: f64) -> Result<SlopeEstimate> {
    let min_step = f64::max(2f64.powi(-46), x.abs() * 2f64.powi(-48));
    let mut coarse = five_point(&f, x, COARSE_STEP)?;
    let mut h = FINE_STEP;
    loop {
        let fine = five_point(&f, x, h)?;
        if slopes_agree(coarse, fine) {
            return Ok(SlopeEstimate {
                value: fine,
                step: h,
                converged: true,
            });
        }
        if h / STEP_SHRINK < min_step {
            return Ok(SlopeEstimate {
                value: fine,
                step: h,
                converged: false,
            });
        }
        coarse = fine;
        h /= STEP_SHRINK;
    }
}

pub fn slope_estimate(device: &Device, phi1: f64, phi2: f64) -> Result<SlopeEstimate> {
    derivative(|x| device.transmittance(x, phi2), phi1)
}

/// `∂T/∂φ₁` at `(φ₁, φ₂)`.
pub fn slope(device: &Device, phi1: f64, phi2: f64) -> Result<f64> {
    slope_estimate(device, phi1, phi2).map(|s| s.value)
}

// ---------------------------------------------------------------------------
// sweeps

pub fn sweep(device: &Device, phi2: f64, grid: &PhaseGrid) -> Result<SweepCurve> {
    let samples = grid
        .points()
        .into_par_iter()
        .map(|phi1| {
            let p = device.probabilities(phi1, phi2)?;
            Ok(SweepSample {
                phi1,
                reflectance: p.reflectance,
                transmittance: p.transmittance,
                slope: slope(device, phi1, phi2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        device_id: device.id(),
        phi2,
        samples,
    })
}

// ---------------------------------------------------------------------------
// maximisation

/// Distance from φ to the nearest multiple of 2π.
pub fn distance_to_period(phi: f64) -> f64 {
    let r = reduce_phase(phi);
    r.min(TAU - r)
}

const BASE_GRID: usize = 1024;
const MAX_GRID: usize = 1 << 23;

/// Intervals per φ₁ period used when scanning a curve at this φ₂.
///
/// Features of the Grover-Michelson curve shrink towards φ₂ ≡ 0. The scan
/// only has to put the steep region among its steepest cells: a peak
/// narrower than a cell still shows up through its heavy tails, and the
/// zoom step resolves it from there.
pub fn grid_intervals(phi2: f64) -> usize {
    let dist = distance_to_period(phi2).min(1e-2);
    let wanted = (16.0 / dist).ceil();
    (wanted as usize).clamp(BASE_GRID, MAX_GRID)
}

/// `T` on a uniform grid over one φ₁ period.
struct Scan {
    x: Vec<f64>,
    t: Vec<f64>,
}

impl Scan {
    fn new(device: &Device, phi2: f64) -> Result<Scan> {
        let n = grid_intervals(phi2);
        let grid = PhaseGrid::period(n + 1)?;
        let x = grid.points();
        let t = x
            .par_iter()
            .map(|&phi1| device.transmittance(phi1, phi2))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scan { x, t })
    }

    fn secant(&self, i: usize) -> f64 {
        ((self.t[i + 1] - self.t[i]) / (self.x[i + 1] - self.x[i])).abs()
    }

    fn cells(&self) -> usize {
        self.x.len() - 1
    }
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
pub fn golden_section_maximize(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if (b - a) <= tol {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

const ZOOM_SUBCELLS: usize = 48;

/// Narrow `[lo, hi]` around the steepest secant until the secant slope
/// stops changing, so the bracket sits well inside the peak.
fn zoom(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let mut prev = f64::NAN;
    for _ in 0..40 {
        let h = (hi - lo) / ZOOM_SUBCELLS as f64;
        let xs: Vec<f64> = (0..=ZOOM_SUBCELLS).map(|k| lo + h * k as f64).collect();
        let ts = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        let (best, s) = (0..ZOOM_SUBCELLS)
            .map(|k| (k, ((ts[k + 1] - ts[k]) / (xs[k + 1] - xs[k])).abs()))
            .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        let new_lo = xs[best.saturating_sub(1)];
        let new_hi = xs[(best + 2).min(ZOOM_SUBCELLS)];
        let settled = prev.is_finite() && (s - prev).abs() <= 1e-4 * s;
        if settled || new_hi - new_lo <= 64.0 * f64::EPSILON * new_lo.abs().max(1.0) {
            return Ok((new_lo, new_hi));
        }
        lo = new_lo;
        hi = new_hi;
        prev = s;
    }
    Ok((lo, hi))
}

/// Indices of the `k` steepest cells, at least three cells apart.
fn steepest_cells(scan: &Scan, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scan.cells()).collect();
    order.sort_by(|&a, &b| scan.secant(b).total_cmp(&scan.secant(a)).then(a.cmp(&b)));
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    for i in order {
        if picked.iter().all(|&p| p.abs_diff(i) > 2) {
            picked.push(i);
            if picked.len() == k {
                break;
            }
        }
    }
    picked
}

/// Steepest point: `(φ₁, |slope|, width of the final zoom bracket)`.
fn max_abs_slope_on(device: &Device, phi2: f64, scan: &Scan) -> Result<(f64, f64, f64)> {
    let t_of = |x: f64| device.transmittance(x, phi2);
    let abs_slope = |x: f64| slope(device, x, phi2).map(f64::abs);
    let mut best = (f64::NAN, -1.0, f64::NAN);
    for cell in steepest_cells(scan, 3) {
        let lo = scan.x[cell.saturating_sub(1)];
        let hi = scan.x[(cell + 2).min(scan.cells())];
        let (a, b) = zoom(&t_of, lo, hi)?;
        let tol = f64::min(1e-9, 1e-3 * (b - a));
        let (x, s) = golden_section_maximize(abs_slope, a, b, tol)?;
        if s > best.1 {
            best = (x, s, b - a);
        }
    }
    Ok(best)
}

/// Largest `|∂T/∂φ₁|` over one period of φ₁, and where it occurs.
pub fn max_sensitivity(device: &Device, phi2: f64) -> Result<SensitivityPoint> {
    let scan = Scan::new(device, phi2)?;
    let (x, s, _) = max_abs_slope_on(device, phi2, &scan)?;
    Ok(SensitivityPoint {
        phi2,
        max_abs_slope: s,
        argmax_phi1: reduce_phase(x),
    })
}

pub fn sensitivity_profile(device: &Device, phi2_values: &[f64]) -> Result<SensitivityProfile> {
    let points = phi2_values
        .par_iter()
        .map(|&phi2| max_sensitivity(device, phi2))
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityProfile {
        device_id: device.id(),
        points,
    })
}

// ---------------------------------------------------------------------------
// bias points

const BIAS_TOL: f64 = 1e-12;
// differences in T below this are rounding, not a change of direction
const T_NOISE: f64 = 1e-13;

fn bisect_level(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    let mut f_lo = f(lo)? - target;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi)? - target;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let mut best = if f_lo.abs() <= f_hi.abs() { (lo, f_lo.abs()) } else { (hi, f_hi.abs()) };
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)? - target;
        if f_mid.abs() < best.1 {
            best = (mid, f_mid.abs());
        }
        if best.1 <= BIAS_TOL {
            break;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

/// Walk from `x0` in direction `dir` with doubling steps while `T` keeps
/// moving the way `rising` says, then refine the turning point.
///
/// Returns the extremum of the monotone run that starts at `x0`.
fn run_end(f: &impl Fn(f64) -> Result<f64>, x0: f64, dir: f64, rising: bool, step: f64) -> Result<(f64, f64)> {
    let better = |new: f64, old: f64| if rising { new > old + T_NOISE } else { new < old - T_NOISE };
    let mut prev = (x0, f(x0)?);
    let mut cur = prev;
    let mut h = step;
    let mut travelled = 0.0;
    loop {
        let x = cur.0 + dir * h;
        let t = f(x)?;
        travelled += h;
        if !better(t, cur.1) || travelled > TAU {
            // turning point lies in [prev, x]
            let (a, b) = if dir > 0.0 { (prev.0, x) } else { (x, prev.0) };
            let width = b - a;
            let tol = (width * 1e-12).max(f64::EPSILON * x0.abs().max(1.0));
            let (xe, te) = if rising {
                golden_section_maximize(f, a, b, tol)?
            } else {
                let (xe, te) = golden_section_maximize(|y| f(y).map(|v| -v), a, b, tol)?;
                (xe, -te)
            };
            return Ok(if better(cur.1, te) || cur.1 == te { cur } else { (xe, te) });
        }
        prev = cur;
        cur = (x, t);
        h *= 2.0;
    }
}

/// Calibrate φ₁ so that `T(φ₁, φ₂) = target`, preferring the monotone
/// segment that holds the steepest point of the curve.
pub fn find_bias_point(device: &Device, phi2: f64, target: f64) -> Result<BiasPoint> {
    let scan = Scan::new(device, phi2)?;
    let t_of = |x: f64| device.transmittance(x, phi2);
    let (steep_x, _, width) = max_abs_slope_on(device, phi2, &scan)?;
    let direction = slope(device, steep_x, phi2)?.signum();

    // monotone segment through the steep point, found at its own scale
    let step = (width / 4.0).max(1e-15);
    let up = run_end(&t_of, steep_x, direction, true, step)?;
    let down = run_end(&t_of, steep_x, -direction, false, step)?;

    let t_min = scan.t.iter().copied().fold(down.1, f64::min);
    let t_max = scan.t.iter().copied().fold(up.1, f64::max);
    let unreachable = || Error::TargetUnreachable {
        target,
        min: t_min,
        max: t_max,
    };
    if !target.is_finite() || target < t_min - BIAS_TOL || target > t_max + BIAS_TOL {
        return Err(unreachable());
    }

    let bracket = if (down.1 - target) * (up.1 - target) <= 0.0 {
        Some((down.0.min(up.0), down.0.max(up.0)))
    } else {
        // fall back to the grid crossing nearest the steep point
        (0..scan.cells())
            .filter(|&i| (scan.t[i] - target) * (scan.t[i + 1] - target) <= 0.0)
            .min_by(|&i, &j| {
                let di = (scan.x[i] - steep_x).abs();
                let dj = (scan.x[j] - steep_x).abs();
                di.total_cmp(&dj)
            })
            .map(|i| (scan.x[i], scan.x[i + 1]))
    };
    let (lo, hi) = bracket.ok_or_else(unreachable)?;
    let phi1 = bisect_level(&t_of, lo, hi, target)?;
    Ok(BiasPoint {
        phi1,
        phi2,
        transmittance: t_of(phi1)?,
        slope: slope(device, phi1, phi2)?,
    })
}

/// Change in `T` when φ₁ drifts by `δ` from the bias point.
pub fn perturbation_response(device: &Device, bias: &BiasPoint, delta: f64) -> Result<PerturbationResponse> {
    let t_of = |x: f64| device.transmittance(x, bias.phi2);
    let t0 = t_of(bias.phi1)?;
    let delta_t = t_of(bias.phi1 + delta)? - t0;
    if delta == 0.0 {
        return Ok(PerturbationResponse {
            delta_t,
            saturated: false,
        });
    }

    // uniform at scan resolution, plus geometric refinement next to the
    // bias point where unresolved narrow features sit
    let spacing = TAU / grid_intervals(bias.phi2) as f64;
    let steps = ((delta.abs() / spacing).ceil() as usize).clamp(64, MAX_GRID);
    let mut fractions: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    fractions.extend((1..=60).map(|k| 0.5f64.powi(k)));
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let xs: Vec<f64> = fractions.iter().map(|&u| bias.phi1 + delta * u).collect();
    let ts = xs.par_iter().map(|&x| t_of(x)).collect::<Result<Vec<_>>>()?;

    // direction of travel along the readout curve
    let mut reference = (bias.slope * delta).signum();
    let mut saturated = false;
    for w in ts.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= T_NOISE {
            continue;
        }
        if reference == 0.0 {
            reference = d.signum();
        } else if d.signum() != reference {
            saturated = true;
            break;
        }
    }
    Ok(PerturbationResponse { delta_t, saturated })
}

// ---------------------------------------------------------------------------
// tuning

/// Lowest φ₂ the tuning search will consider.
pub const PHI2_FLOOR: f64 = 1e-8;
const PHI2_TOL: f64 = 1e-6;

/// Shallowest Grover-Michelson setting whose curves reach `target_slope`:
/// the largest φ₂ ∈ (0, π] with `max_sensitivity(φ₂) ≥ target_slope`.
///
/// Maximum sensitivity falls monotonically on (0, π], so this bisects on
/// that branch. A degenerate evaluation counts as reaching the target,
/// since it means the curve has an unresolved resonance.
pub fn solve_phi2_for_sensitivity(target_slope: f64) -> Result<f64> {
    if !(target_slope > 0.0 && target_slope.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target slope must be positive, got {target_slope}"
        )));
    }
    let device = Device::GroverMichelson;
    let reaches = |phi2: f64| match max_sensitivity(&device, phi2) {
        Ok(p) => Ok(p.max_abs_slope >= target_slope),
        Err(Error::DegeneratePhase { .. }) => Ok(true),
        Err(e) => Err(e),
    };
    if reaches(PI)? {
        return Ok(PI);
    }
    let (mut lo, mut hi) = (PHI2_FLOOR, PI);
    while hi - lo > PHI2_TOL * hi.min(1.0) {
        // geometric steps while the bracket spans decades
        let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if reaches(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
