//! Feedback closure: sealing ports with mirrors and joining ports with
//! lossless links, then summing every internal round trip.
//!
//! Split the ports of `S` into open (`o`) and closed (`c`) sets. Outgoing
//! light at the closed ports comes back in through the feedback matrix `F`
//! (`a_c = F b_c`), so
//!
//! ```text
//! S_eff = S_oo + S_oc F (I − S_cc F)⁻¹ S_co
//! ```
//!
//! which is the resummed series `S_oo + Σₙ S_oc F (S_cc F)ⁿ S_co`. The exact
//! path solves the linear system; the truncated series is kept as an oracle.

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, CMatrix, Lu};
use crate::scattering::ScatteringMatrix;
use num_complex::Complex64;
use std::collections::HashSet;

/// Reciprocal condition below which `I − S_cc F` counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;

/// A port sealed by a mirror after a round-trip phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Termination {
    pub port: String,
    /// Round-trip phase φ in radians, not counting the mirror.
    pub round_trip_phase: f64,
    /// The mirror contributes a π phase, so the feedback is `−e^{iφ}`.
    /// Without it the port is a bare phase loop with feedback `e^{iφ}`.
    pub has_mirror: bool,
}

impl Termination {
    pub fn mirror(port: impl Into<String>, phase: f64) -> Self {
        Self {
            port: port.into(),
            round_trip_phase: phase,
            has_mirror: true,
        }
    }

    pub fn feedback(&self) -> Complex64 {
        let phasor = Complex64::from_polar(1.0, self.round_trip_phase);
        if self.has_mirror {
            -phasor
        } else {
            phasor
        }
    }
}

/// Two ports joined by a lossless phase connection.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub port_a: String,
    pub port_b: String,
    /// Phase accumulated going a → b → a. Each one-way pass picks up half.
    pub round_trip_phase: f64,
}

impl Link {
    pub fn new(port_a: impl Into<String>, port_b: impl Into<String>, round_trip_phase: f64) -> Self {
        Self {
            port_a: port_a.into(),
            port_b: port_b.into(),
            round_trip_phase,
        }
    }

    fn one_way(&self) -> Complex64 {
        Complex64::from_polar(1.0, 0.5 * self.round_trip_phase)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkSet {
    pairs: Vec<Link>,
}

impl LinkSet {
    pub fn new(pairs: Vec<Link>) -> Result<Self> {
        let mut seen = HashSet::new();
        for link in &pairs {
            if link.port_a == link.port_b {
                return Err(Error::Port(format!("port {:?} linked to itself", link.port_a)));
            }
            for p in [&link.port_a, &link.port_b] {
                if !seen.insert(p.clone()) {
                    return Err(Error::Port(format!("port {p:?} appears in more than one link")));
                }
            }
        }
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[Link] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Everything that closes ports of one device: seals and links together.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClosureSpec {
    pub terminations: Vec<Termination>,
    pub links: LinkSet,
}

impl ClosureSpec {
    pub fn seals(terminations: Vec<Termination>) -> Self {
        Self {
            terminations,
            links: LinkSet::empty(),
        }
    }

    pub fn links(links: LinkSet) -> Self {
        Self {
            terminations: Vec::new(),
            links,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedDevice {
    /// Effective matrix on the open ports, labelled as in the parent device.
    pub effective: ScatteringMatrix,
    /// Reciprocal 1-norm condition of `I − S_cc F` (1 when nothing is closed).
    pub closure_condition: f64,
}

impl ClosedDevice {
    pub fn open_port_labels(&self) -> &[String] {
        self.effective.labels()
    }
}

/// Closed/open port split plus the feedback matrix over the closed ports.
struct Partition {
    closed: Vec<usize>,
    open: Vec<usize>,
    feedback: CMatrix,
}

fn partition(s: &ScatteringMatrix, spec: &ClosureSpec) -> Result<Partition> {
    let mut closed = Vec::new();
    let mut used = HashSet::new();
    let mut claim = |label: &str, closed: &mut Vec<usize>| -> Result<usize> {
        let idx = s.port_index(label)?;
        if !used.insert(idx) {
            return Err(Error::Port(format!("port {label:?} is closed more than once")));
        }
        closed.push(idx);
        Ok(closed.len() - 1)
    };

    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    for t in &spec.terminations {
        let k = claim(&t.port, &mut closed)?;
        entries.push((k, k, t.feedback()));
    }
    for link in spec.links.pairs() {
        let a = claim(&link.port_a, &mut closed)?;
        let b = claim(&link.port_b, &mut closed)?;
        let w = link.one_way();
        entries.push((a, b, w));
        entries.push((b, a, w));
    }

    let open: Vec<usize> = (0..s.ports()).filter(|i| !used.contains(i)).collect();
    if open.is_empty() {
        return Err(Error::Port("closure leaves no open port".into()));
    }
    let mut feedback = CMatrix::zeros(closed.len(), closed.len());
    for (i, j, w) in entries {
        feedback[(i, j)] = w;
    }
    Ok(Partition {
        closed,
        open,
        feedback,
    })
}

struct Blocks {
    s_oo: CMatrix,
    s_oc: CMatrix,
    s_co: CMatrix,
    s_cc: CMatrix,
}

fn blocks(s: &ScatteringMatrix, p: &Partition) -> Blocks {
    let m = s.entries();
    Blocks {
        s_oo: m.select(&p.open, &p.open),
        s_oc: m.select(&p.open, &p.closed),
        s_co: m.select(&p.closed, &p.open),
        s_cc: m.select(&p.closed, &p.closed),
    }
}

fn open_labels(s: &ScatteringMatrix, p: &Partition) -> Vec<String> {
    p.open.iter().map(|&i| s.labels()[i].clone()).collect()
}

/// Exact closure by a single LU solve of `(I − S_cc F) X = S_co`.
pub fn close(s: &ScatteringMatrix, spec: &ClosureSpec) -> Result<ClosedDevice> {
    let p = partition(s, spec)?;
    let labels = open_labels(s, &p);
    if p.closed.is_empty() {
        return Ok(ClosedDevice {
            effective: s.clone(),
            closure_condition: 1.0,
        });
    }
    let b = blocks(s, &p);
    let loop_gain = b.s_cc.matmul(&p.feedback);
    let system = CMatrix::identity(p.closed.len()).sub(&loop_gain);

    let closed_names = || {
        p.closed
            .iter()
            .map(|&i| s.labels()[i].as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let lu = Lu::factor(&system).ok_or_else(|| Error::SingularClosure {
        rcond: 0.0,
        ports: closed_names(),
    })?;
    let rcond = lu.rcond();
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::SingularClosure {
            rcond,
            ports: closed_names(),
        });
    }
    let x = lu.solve(&b.s_co);
    let effective = b.s_oo.add(&b.s_oc.matmul(&p.feedback).matmul(&x));
    Ok(ClosedDevice {
        effective: ScatteringMatrix::new(effective, Some(labels))?,
        closure_condition: rcond,
    })
}

/// Seal ports with mirrors.
pub fn seal_ports(s: &ScatteringMatrix, terms: &[Termination]) -> Result<ClosedDevice> {
    close(s, &ClosureSpec::seals(terms.to_vec()))
}

/// Join pairs of ports of one (usually composite) device.
pub fn link_close(s: &ScatteringMatrix, links: &LinkSet) -> Result<ClosedDevice> {
    close(s, &ClosureSpec::links(links.clone()))
}

/// Partial round-trip sum `S_oo + Σ_{n=0..N} S_oc F (S_cc F)ⁿ S_co`.
pub fn close_series_truncated(s: &ScatteringMatrix, spec: &ClosureSpec, terms: usize) -> Result<ScatteringMatrix> {
    let p = partition(s, spec)?;
    let labels = open_labels(s, &p);
    if p.closed.is_empty() {
        return Ok(s.clone());
    }
    let b = blocks(s, &p);
    let loop_gain = b.s_cc.matmul(&p.feedback);
    let k = p.closed.len();
    let mut power = CMatrix::identity(k);
    let mut acc = CMatrix::zeros(k, k);
    for n in 0..=terms {
        acc = acc.add(&power);
        if n < terms {
            power = power.matmul(&loop_gain);
        }
    }
    let effective = b.s_oo.add(&b.s_oc.matmul(&p.feedback).matmul(&acc).matmul(&b.s_co));
    ScatteringMatrix::new(effective, Some(labels))
}

/// Spectral radius of the round-trip operator `S_cc F`; the series
/// converges when it is below one.
pub fn closure_spectral_radius(s: &ScatteringMatrix, spec: &ClosureSpec) -> Result<f64> {
    let p = partition(s, spec)?;
    if p.closed.is_empty() {
        return Ok(0.0);
    }
    let b = blocks(s, &p);
    Ok(spectral_radius(&b.s_cc.matmul(&p.feedback), 1e-10))
}

/// Direct sum of several devices. Labels become `prefix.label`.
pub fn direct_sum(parts: &[(&str, &ScatteringMatrix)]) -> Result<ScatteringMatrix> {
    let n: usize = parts.iter().map(|(_, s)| s.ports()).sum();
    let mut m = CMatrix::zeros(n, n);
    let mut labels = Vec::with_capacity(n);
    let mut offset = 0;
    for (prefix, s) in parts {
        let k = s.ports();
        for i in 0..k {
            for j in 0..k {
                m[(offset + i, offset + j)] = s.get(i, j);
            }
        }
        labels.extend(s.labels().iter().map(|l| format!("{prefix}.{l}")));
        offset += k;
    }
    ScatteringMatrix::new(m, Some(labels))
}

/// Block-diagonal pair with labels namespaced `A.` and `B.`.
pub fn block_diag(a: &ScatteringMatrix, b: &ScatteringMatrix) -> ScatteringMatrix {
    direct_sum(&[("A", a), ("B", b)]).expect("namespaced labels are distinct")
}
