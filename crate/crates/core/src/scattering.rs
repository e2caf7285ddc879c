//! Scattering matrices, port states and the canonical multiport devices.
//!
//! Convention: a state is the column vector of port amplitudes `c_j`, and a
//! device with matrix `S` maps an input state `ψ` to `S ψ`. Entry `S[(i, j)]`
//! is the amplitude for light entering port `j` to leave through port `i`.
//! Ingoing and outgoing modes of the same port share one index.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use num_complex::Complex64;
use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;

pub type ComplexAmplitude = Complex64;

/// Unitarity tolerance applied to constructor outputs.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Default tolerance for comparing two devices entrywise.
pub const DEVICE_EQ_TOL: f64 = 1e-10;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Default port labels `p1..pn`.
pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("p{i}")).collect()
}

/// Amplitudes over the ports of a device.
#[derive(Clone, Debug, PartialEq)]
pub struct PortState {
    amplitudes: Vec<Complex64>,
}

impl PortState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude in port state".into()));
        }
        Ok(Self { amplitudes })
    }

    /// A state that must already be normalised; it is never rescaled.
    pub fn normalized(amplitudes: Vec<Complex64>, tol: f64) -> Result<Self> {
        let state = Self::new(amplitudes)?;
        let norm_sq = state.norm_sqr();
        if (norm_sq - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "state has squared norm {norm_sq}, expected 1 within {tol}"
            )));
        }
        Ok(state)
    }

    /// Single photon in port `j` (0-based): the standard basis vector `e_j`.
    pub fn basis(n: usize, j: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        amplitudes[j] = re(1.0);
        Self { amplitudes }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Port probabilities `|c_j|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Square complex matrix together with one label per port.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringMatrix {
    entries: CMatrix,
    labels: Vec<String>,
}

impl ScatteringMatrix {
    /// Wrap a matrix. Labels default to `p1..pn` when `labels` is `None`.
    pub fn new(entries: CMatrix, labels: Option<Vec<String>>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension(format!(
                "scattering matrix must be square, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        if !entries.is_finite() {
            return Err(Error::InvalidArgument("non-finite scattering matrix entry".into()));
        }
        let n = entries.rows();
        let labels = labels.unwrap_or_else(|| default_labels(n));
        if labels.len() != n {
            return Err(Error::Dimension(format!("{} labels for {n} ports", labels.len())));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Port(format!("duplicate port label {l:?}")));
            }
        }
        Ok(Self { entries, labels })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(CMatrix::identity(n), None).expect("identity is valid")
    }

    pub fn ports(&self) -> usize {
        self.labels.len()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, out: usize, input: usize) -> Complex64 {
        self.entries[(out, input)]
    }

    pub fn port_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Port(format!("no port labelled {label:?}")))
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self> {
        Self::new(self.entries, Some(labels))
    }

    /// Entrywise distance to another matrix of the same size (labels ignored).
    pub fn max_abs_diff(&self, other: &ScatteringMatrix) -> Result<f64> {
        if self.ports() != other.ports() {
            return Err(Error::Dimension(format!(
                "comparing {}-port and {}-port devices",
                self.ports(),
                other.ports()
            )));
        }
        Ok(self.entries.max_abs_diff(&other.entries))
    }

    pub fn approx_eq(&self, other: &ScatteringMatrix, tol: f64) -> bool {
        self.max_abs_diff(other).map(|d| d <= tol).unwrap_or(false)
    }
}

/// The 50:50 beam-splitter on four ports: ports 1, 2 feed 3, 4 and back.
pub fn make_beam_splitter_4port() -> ScatteringMatrix {
    let h = FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let rows = [
        [0.0, 0.0, h, h],
        [0.0, 0.0, h, -h],
        [h, h, 0.0, 0.0],
        [h, -h, 0.0, 0.0],
    ];
    let m = CMatrix::from_fn(4, 4, |i, j| re(rows[i][j]));
    ScatteringMatrix::new(m, None).expect("beam splitter is valid")
}

/// The 2×2 Hadamard reduction of the beam-splitter.
pub fn make_hadamard2() -> ScatteringMatrix {
    let h = FRAC_1_SQRT_2;
    let m = CMatrix::from_row_major(2, 2, vec![re(h), re(h), re(h), re(-h)]);
    ScatteringMatrix::new(m, None).expect("hadamard is valid")
}

/// The `d`-port Grover coin: reflection `2/d - 1`, transmission `2/d`.
pub fn make_grover_coin(d: usize) -> Result<ScatteringMatrix> {
    if d < 3 {
        return Err(Error::Dimension(format!("Grover coin needs d >= 3, got {d}")));
    }
    let off = 2.0 / d as f64;
    let diag = off - 1.0;
    let m = CMatrix::from_fn(d, d, |i, j| re(if i == j { diag } else { off }));
    ScatteringMatrix::new(m, None)
}

/// Output state `S ψ`.
pub fn apply(s: &ScatteringMatrix, psi: &PortState) -> Result<PortState> {
    if s.ports() != psi.len() {
        return Err(Error::Dimension(format!(
            "{}-port device applied to a {}-amplitude state",
            s.ports(),
            psi.len()
        )));
    }
    Ok(PortState {
        amplitudes: s.entries.matvec(psi.amplitudes()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitarityCheck {
    /// `‖S†S − I‖_max`
    pub deviation: f64,
    pub ok: bool,
}

pub fn check_unitary(s: &ScatteringMatrix, tol: f64) -> UnitarityCheck {
    let n = s.ports();
    let gram = s.entries.adjoint().matmul(&s.entries);
    let deviation = gram.max_abs_diff(&CMatrix::identity(n));
    UnitarityCheck {
        deviation,
        ok: deviation <= tol,
    }
}

/// Relabel ports: old port `i` becomes new port `perm[i]`, i.e. `P S Pᵀ`.
pub fn permute_ports(s: &ScatteringMatrix, perm: &[usize]) -> Result<ScatteringMatrix> {
    let n = s.ports();
    if perm.len() != n {
        return Err(Error::Dimension(format!("permutation of length {} for {n} ports", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Dimension(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    let mut entries = CMatrix::zeros(n, n);
    let mut labels = vec![String::new(); n];
    for i in 0..n {
        labels[perm[i]] = s.labels[i].clone();
        for j in 0..n {
            entries[(perm[i], perm[j])] = s.entries[(i, j)];
        }
    }
    ScatteringMatrix::new(entries, Some(labels))
}

/// Inverse of a permutation given as `perm[old] = new`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// True iff swapping any two ports leaves every entry unchanged within `tol`.
pub fn is_permutation_symmetric(s: &ScatteringMatrix, tol: f64) -> bool {
    let n = s.ports();
    let m = &s.entries;
    let swap = |k: usize, a: usize, b: usize| {
        if k == a {
            b
        } else if k == b {
            a
        } else {
            k
        }
    };
    for a in 0..n {
        for b in a + 1..n {
            for i in 0..n {
                for j in 0..n {
                    if (m[(swap(i, a, b), swap(j, a, b))] - m[(i, j)]).norm() > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}
