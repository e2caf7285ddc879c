//! JSON netlists: devices, seals, links and the open-port order.
//!
//! ```json
//! {
//!   "devices": [{"id": "G", "kind": "grover", "d": 4}],
//!   "seals": [
//!     {"device": "G", "port": "p3", "phase": "phi1"},
//!     {"device": "G", "port": "p4", "phase": "phi2"}
//!   ],
//!   "open_ports": ["G.p1", "G.p2"]
//! }
//! ```
//!
//! Ports are addressed as `"<device id>.<port label>"`. Phases are radians,
//! given as numbers or as expressions over `pi`, `phi1` and `phi2`.

use crate::closure::{close, ClosedDevice, ClosureSpec, Link, LinkSet, Termination};
use crate::devices::Probabilities;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::phase_expr::PhaseExpr;
use crate::scattering::{
    check_unitary, default_labels, make_beam_splitter_4port, make_grover_coin, make_hadamard2, permute_ports,
    ScatteringMatrix,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Unitarity tolerance for matrix literals.
pub const LITERAL_UNITARITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Phase {
    Radians(f64),
    Expr(String),
}

impl Default for Phase {
    fn default() -> Self {
        Phase::Radians(0.0)
    }
}

impl Phase {
    pub fn compile(&self) -> Result<PhaseExpr> {
        match self {
            Phase::Radians(x) if x.is_finite() => Ok(PhaseExpr::constant(crate::phase_expr::Constant::Float(*x))),
            Phase::Radians(x) => Err(Error::Validation(format!("phase {x} is not finite"))),
            Phase::Expr(text) => PhaseExpr::parse(text).map_err(|e| Error::Validation(e.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DeviceKind {
    Grover {
        d: usize,
    },
    Beamsplitter4,
    Hadamard2,
    /// Row-major `[re, im]` pairs, `entries[out][in]`.
    Matrix {
        entries: Vec<Vec<[f64; 2]>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: DeviceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

fn default_mirror() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SealSpec {
    pub device: String,
    pub port: String,
    #[serde(default)]
    pub phase: Phase,
    #[serde(default = "default_mirror")]
    pub mirror: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub port_a: String,
    pub port_b: String,
    #[serde(default)]
    pub round_trip_phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Netlist {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub seals: Vec<SealSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    /// Output order of the effective matrix. Defaults to every port left
    /// unclosed, in declaration order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_ports: Option<Vec<String>>,
}

/// Parse and validate netlist JSON.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let netlist: Netlist = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    compile(&netlist)?;
    Ok(netlist)
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn render(netlist: &Netlist) -> String {
    let mut s = serde_json::to_string_pretty(netlist).expect("netlist types always serialize");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq)]
struct CompiledSeal {
    port: String,
    phase: PhaseExpr,
    mirror: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct CompiledLink {
    port_a: String,
    port_b: String,
    phase: PhaseExpr,
}

/// A validated netlist ready for evaluation at `(φ₁, φ₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledNetlist {
    name: String,
    matrix: ScatteringMatrix,
    seals: Vec<CompiledSeal>,
    links: Vec<CompiledLink>,
    open_ports: Vec<String>,
}

fn build_device(spec: &DeviceSpec) -> Result<ScatteringMatrix> {
    let where_ = |e: Error| Error::Validation(format!("device {:?}: {e}", spec.id));
    let matrix = match &spec.kind {
        DeviceKind::Grover { d } => make_grover_coin(*d).map_err(where_)?,
        DeviceKind::Beamsplitter4 => make_beam_splitter_4port(),
        DeviceKind::Hadamard2 => make_hadamard2(),
        DeviceKind::Matrix { entries } => {
            let n = entries.len();
            if n == 0 || entries.iter().any(|row| row.len() != n) {
                return Err(where_(Error::Dimension("matrix literal must be square and non-empty".into())));
            }
            let flat: Vec<Complex64> = entries.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
            let m = ScatteringMatrix::new(CMatrix::from_row_major(n, n, flat), None).map_err(where_)?;
            let check = check_unitary(&m, LITERAL_UNITARITY_TOL);
            if !check.ok {
                return Err(where_(Error::Validation(format!(
                    "matrix literal is not unitary (deviation {:e})",
                    check.deviation
                ))));
            }
            m
        }
    };
    let n = matrix.ports();
    let labels = match &spec.labels {
        Some(l) if l.len() != n => {
            return Err(where_(Error::Validation(format!("{} labels for {n} ports", l.len()))));
        }
        Some(l) => l.clone(),
        None => default_labels(n),
    };
    matrix.with_labels(labels).map_err(where_)
}

/// Validate a netlist and prepare it for evaluation.
pub fn compile(netlist: &Netlist) -> Result<CompiledNetlist> {
    if netlist.devices.is_empty() {
        return Err(Error::Validation("netlist has no devices".into()));
    }
    let mut ids = HashSet::new();
    let mut parts = Vec::with_capacity(netlist.devices.len());
    for d in &netlist.devices {
        if d.id.is_empty() || d.id.contains('.') {
            return Err(Error::Validation(format!("device id {:?} must be non-empty without '.'", d.id)));
        }
        if !ids.insert(d.id.as_str()) {
            return Err(Error::Validation(format!("duplicate device id {:?}", d.id)));
        }
        parts.push((d.id.as_str(), build_device(d)?));
    }
    let refs: Vec<(&str, &ScatteringMatrix)> = parts.iter().map(|(id, m)| (*id, m)).collect();
    let matrix = crate::closure::direct_sum(&refs)?;
    let all: Vec<String> = matrix.labels().to_vec();
    let known: HashSet<&str> = all.iter().map(String::as_str).collect();

    let mut closed: HashMap<String, String> = HashMap::new();
    let mut claim = |port: &str, by: String| -> Result<()> {
        if !known.contains(port) {
            return Err(Error::Validation(format!("{by}: unknown port {port:?}")));
        }
        if let Some(prev) = closed.insert(port.to_string(), by.clone()) {
            return Err(Error::Validation(format!("{by}: port {port:?} already closed by {prev}")));
        }
        Ok(())
    };

    let mut seals = Vec::new();
    for (i, s) in netlist.seals.iter().enumerate() {
        let port = format!("{}.{}", s.device, s.port);
        claim(&port, format!("seal {}", i + 1))?;
        let phase = s.phase.compile().map_err(|e| Error::Validation(format!("seal {}: {e}", i + 1)))?;
        seals.push(CompiledSeal {
            port,
            phase,
            mirror: s.mirror,
        });
    }
    let mut links = Vec::new();
    for (i, l) in netlist.links.iter().enumerate() {
        let by = format!("link {}", i + 1);
        if l.port_a == l.port_b {
            return Err(Error::Validation(format!("{by}: port {:?} linked to itself", l.port_a)));
        }
        claim(&l.port_a, by.clone())?;
        claim(&l.port_b, by.clone())?;
        let phase = l.round_trip_phase.compile().map_err(|e| Error::Validation(format!("{by}: {e}")))?;
        links.push(CompiledLink {
            port_a: l.port_a.clone(),
            port_b: l.port_b.clone(),
            phase,
        });
    }

    let remaining: Vec<String> = all.iter().filter(|p| !closed.contains_key(*p)).cloned().collect();
    let open_ports = match &netlist.open_ports {
        None => remaining.clone(),
        Some(listed) => {
            let mut seen = HashSet::new();
            for p in listed {
                if !known.contains(p.as_str()) {
                    return Err(Error::Validation(format!("open port {p:?} does not exist")));
                }
                if let Some(by) = closed.get(p) {
                    return Err(Error::Validation(format!("open port {p:?} is closed by {by}")));
                }
                if !seen.insert(p.as_str()) {
                    return Err(Error::Validation(format!("open port {p:?} listed twice")));
                }
            }
            if let Some(dangling) = remaining.iter().find(|p| !seen.contains(p.as_str())) {
                return Err(Error::Validation(format!("port {dangling:?} is neither closed nor open")));
            }
            listed.clone()
        }
    };
    if open_ports.is_empty() {
        return Err(Error::Validation("netlist leaves no open port".into()));
    }

    Ok(CompiledNetlist {
        name: netlist.name.clone().unwrap_or_else(|| "netlist".into()),
        matrix,
        seals,
        links,
        open_ports,
    })
}

impl CompiledNetlist {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn open_ports(&self) -> &[String] {
        &self.open_ports
    }

    /// Direct sum of all devices before closure.
    pub fn matrix(&self) -> &ScatteringMatrix {
        &self.matrix
    }

    pub fn closure_spec(&self, phi1: f64, phi2: f64) -> Result<ClosureSpec> {
        let terminations = self
            .seals
            .iter()
            .map(|s| Termination {
                port: s.port.clone(),
                round_trip_phase: s.phase.eval(phi1, phi2),
                has_mirror: s.mirror,
            })
            .collect();
        let links = self
            .links
            .iter()
            .map(|l| Link::new(l.port_a.clone(), l.port_b.clone(), l.phase.eval(phi1, phi2)))
            .collect();
        Ok(ClosureSpec {
            terminations,
            links: LinkSet::new(links)?,
        })
    }

    /// Effective matrix with ports in `open_ports` order.
    pub fn close(&self, phi1: f64, phi2: f64) -> Result<ClosedDevice> {
        let closed = close(&self.matrix, &self.closure_spec(phi1, phi2)?)?;
        let position: HashMap<&str, usize> = self.open_ports.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let perm: Vec<usize> = closed.open_port_labels().iter().map(|l| position[l.as_str()]).collect();
        Ok(ClosedDevice {
            effective: permute_ports(&closed.effective, &perm)?,
            closure_condition: closed.closure_condition,
        })
    }

    /// Two-port readout: light enters the first open port, `R` is what
    /// returns there and `T` what leaves the second.
    pub fn probabilities(&self, phi1: f64, phi2: f64) -> Result<Probabilities> {
        if self.open_ports.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "transmission needs exactly 2 open ports, netlist {:?} has {}",
                self.name,
                self.open_ports.len()
            )));
        }
        let s = self.close(phi1, phi2)?.effective;
        Ok(Probabilities {
            reflectance: s.get(0, 0).norm_sqr(),
            transmittance: s.get(1, 0).norm_sqr(),
        })
    }
}
