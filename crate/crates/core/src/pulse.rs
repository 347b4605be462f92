//! Pulse-sequence IR and the unitaries/channels of its elements.
//!
//! Rotation convention: a pulse [θ]_axis applies e^{+iθ(cosα·Ix + sinα·Iy)}
//! per addressed spin, with α the axis phase (x→0, y→π/2, −x→π, −y→3π/2).
//! Under this sense [π/2]_y|0⟩ = (|0⟩−|1⟩)/√2, which is what fixes the sign
//! pattern of the superpositions the transcribed spectrometer sequences
//! produce. Pulses are ideal: zero duration, no evolution while they act.
//!
//! Transition-selective pulses rotate a single two-state subspace with the
//! generator e^{−i(θ/2)(cosα·σx + sinα·σy)}; at θ = π about x the subspace
//! block is [[0, −i], [−i, 0]], the NOT-with-a-factor−i approximation.

use std::fmt;

use crate::gate::{qubit_bit, BitString};
use crate::qstate::{expi, CMatrix, DensityMatrix, UnitaryMatrix};
use crate::spin::SpinSystem;
use crate::{angle, C64, Error, Result};

/// Pulse phase axis in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    MinusX,
    MinusY,
}

impl Axis {
    pub fn phase(self) -> f64 {
        match self {
            Axis::X => 0.0,
            Axis::Y => std::f64::consts::FRAC_PI_2,
            Axis::MinusX => std::f64::consts::PI,
            Axis::MinusY => 3.0 * std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "-x" => Ok(Axis::MinusX),
            "-y" => Ok(Axis::MinusY),
            _ => Err(Error::Parse { line: 0, msg: format!("bad axis {s:?}") }),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::MinusX => "-x",
            Axis::MinusY => "-y",
        };
        write!(f, "{s}")
    }
}

/// One element of a pulse program.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseElement {
    /// Simultaneous rotation of several spins.
    Hard { spins: Vec<usize>, angle: f64, axis: Axis },
    /// Frequency-selective rotation of a single spin.
    SpinSelective { spin: usize, angle: f64, axis: Axis },
    /// Free evolution under the full system Hamiltonian.
    Delay { seconds: f64 },
    /// Idealized evolution under a single coupling term; the bracketed-delay
    /// abstraction. Negative tau is a formal negative-angle evolution.
    JDelay { i: usize, j: usize, tau: f64 },
    /// z-gradient crusher.
    Gradient,
    /// Rotation of the two-state subspace spanned by |a⟩ and |b⟩.
    TransitionSelective { a: BitString, b: BitString, angle: f64, axis: Axis },
}

/// Ordered pulse program bound to a spin system.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    system: SpinSystem,
    elements: Vec<PulseElement>,
}

impl PulseSequence {
    pub fn new(system: SpinSystem, elements: Vec<PulseElement>) -> Result<Self> {
        for el in &elements {
            validate_element(&system, el)?;
        }
        Ok(Self { system, elements })
    }

    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn elements(&self) -> &[PulseElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn push(&mut self, el: PulseElement) -> Result<()> {
        validate_element(&self.system, &el)?;
        self.elements.push(el);
        Ok(())
    }

    pub fn extend(&mut self, other: &PulseSequence) -> Result<()> {
        for el in other.elements() {
            self.push(el.clone())?;
        }
        Ok(())
    }

    /// Parse the line-oriented element format against a system.
    pub fn parse_str(system: SpinSystem, text: &str) -> Result<Self> {
        let mut elements = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            elements.push(parse_element(line, lineno + 1)?);
        }
        Self::new(system, elements)
    }
}

fn validate_element(sys: &SpinSystem, el: &PulseElement) -> Result<()> {
    let finite = |x: f64| if x.is_finite() { Ok(()) } else { Err(Error::NonFinite) };
    match el {
        PulseElement::Hard { spins, angle, .. } => {
            if spins.is_empty() {
                return Err(Error::InvalidSpin { spin: 0, n_spins: sys.n_spins() });
            }
            let mut seen = vec![false; sys.n_spins() + 1];
            for &s in spins {
                sys.check_spin(s)?;
                if seen[s] {
                    return Err(Error::InvalidControls);
                }
                seen[s] = true;
            }
            finite(*angle)
        }
        PulseElement::SpinSelective { spin, angle, .. } => {
            sys.check_spin(*spin)?;
            finite(*angle)
        }
        PulseElement::Delay { seconds } => {
            finite(*seconds)?;
            if *seconds < 0.0 {
                return Err(Error::NegativeDelay(*seconds));
            }
            Ok(())
        }
        PulseElement::JDelay { i, j, tau } => {
            sys.check_spin(*i)?;
            sys.check_spin(*j)?;
            if i == j {
                return Err(Error::InvalidControls);
            }
            finite(*tau)
        }
        PulseElement::Gradient => Ok(()),
        PulseElement::TransitionSelective { a, b, angle, .. } => {
            let n = sys.n_spins();
            if a.len() != n || b.len() != n {
                return Err(Error::PatternLength { expected: n, got: a.len().max(b.len()) });
            }
            let diff = (a.index() ^ b.index()).count_ones();
            if diff != 1 {
                return Err(Error::NotSingleTransition { a: a.to_string(), b: b.to_string() });
            }
            finite(*angle)
        }
    }
}

/// Single-spin rotation matrix e^{+iθ(cosα·Ix + sinα·Iy)}.
fn rotation_2x2(theta: f64, alpha: f64) -> CMatrix<f64> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let i = C64::new(0.0, 1.0);
    CMatrix::from_rows(vec![
        vec![C64::new(c, 0.0), i * s * expi(-alpha)],
        vec![i * s * expi(alpha), C64::new(c, 0.0)],
    ])
    .expect("2x2")
}

fn embed_spin(g: &CMatrix<f64>, spin: usize, n: usize) -> CMatrix<f64> {
    CMatrix::identity(1 << (spin - 1))
        .kron(g)
        .kron(&CMatrix::identity(1 << (n - spin)))
}

/// Simultaneous ideal rotation of the listed spins.
pub fn hard_pulse(
    sys: &SpinSystem,
    spins: &[usize],
    theta: f64,
    axis: Axis,
) -> Result<UnitaryMatrix<f64>> {
    let n = sys.n_spins();
    let mut m = CMatrix::identity(1 << n);
    let g = rotation_2x2(theta, axis.phase());
    for &s in spins {
        sys.check_spin(s)?;
        m = embed_spin(&g, s, n).mul(&m);
    }
    UnitaryMatrix::new(n, m)
}

/// Free evolution e^{−iHτ} under the full Hamiltonian.
pub fn free_evolution(sys: &SpinSystem, tau: f64) -> Result<UnitaryMatrix<f64>> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::NegativeDelay(tau));
    }
    let h = sys.hamiltonian_matrix();
    let diag: Vec<C64> = (0..h.dim()).map(|b| expi(-h[(b, b)].re * tau)).collect();
    UnitaryMatrix::new(sys.n_spins(), CMatrix::from_diag(&diag))
}

/// Idealized evolution e^{−i2πJτ·Iz_i·Iz_j} under a single coupling term.
///
/// Negative tau is permitted as a formal angle; J = 0 with τ ≠ 0 is an error
/// because no delay realizes the evolution.
pub fn j_coupling_evolution(
    sys: &SpinSystem,
    i: usize,
    j: usize,
    tau: f64,
) -> Result<UnitaryMatrix<f64>> {
    sys.check_spin(i)?;
    sys.check_spin(j)?;
    if i == j {
        return Err(Error::InvalidControls);
    }
    let j_hz = sys.coupling_hz(i, j);
    if j_hz == 0.0 && tau != 0.0 {
        return Err(Error::ZeroCoupling { i, j });
    }
    let n = sys.n_spins();
    let w = 2.0 * std::f64::consts::PI * j_hz * tau;
    let diag: Vec<C64> = (0..1usize << n)
        .map(|b| {
            let zi = if qubit_bit(b, i, n) { -0.5 } else { 0.5 };
            let zj = if qubit_bit(b, j, n) { -0.5 } else { 0.5 };
            expi(-w * zi * zj)
        })
        .collect();
    UnitaryMatrix::new(n, CMatrix::from_diag(&diag))
}

/// Rotation of the |a⟩↔|b⟩ subspace: identity outside, block
/// e^{−i(θ/2)(cosα·σx + sinα·σy)} inside.
pub fn transition_selective(
    sys: &SpinSystem,
    a: &BitString,
    b: &BitString,
    theta: f64,
    axis: Axis,
) -> Result<UnitaryMatrix<f64>> {
    let el = PulseElement::TransitionSelective {
        a: a.clone(),
        b: b.clone(),
        angle: theta,
        axis,
    };
    validate_element(sys, &el)?;
    let n = sys.n_spins();
    let (ia, ib) = (a.index(), b.index());
    let alpha = axis.phase();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mi = C64::new(0.0, -1.0);
    let mut m = CMatrix::identity(1 << n);
    m[(ia, ia)] = C64::new(c, 0.0);
    m[(ib, ib)] = C64::new(c, 0.0);
    m[(ia, ib)] = mi * s * expi(-alpha);
    m[(ib, ia)] = mi * s * expi(alpha);
    UnitaryMatrix::new(n, m)
}

/// What the z-gradient destroys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Zero every element of nonzero coherence order
    /// p(i,j) = popcount(j) − popcount(i); zero-quantum terms survive.
    Ideal,
    /// Zero every off-diagonal element, zero-quantum terms included.
    Strict,
}

/// Apply the gradient crusher. Idempotent; preserves Hermiticity, trace,
/// and kind.
pub fn gradient_apply(rho: &DensityMatrix<f64>, mode: GradientMode) -> DensityMatrix<f64> {
    let dim = rho.dim();
    let mat = CMatrix::from_fn(dim, |i, j| {
        let keep = match mode {
            GradientMode::Ideal => (j.count_ones() as i64 - i.count_ones() as i64) == 0,
            GradientMode::Strict => i == j,
        };
        if keep {
            rho.cell(i, j)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    DensityMatrix::new(rho.n_qubits(), mat, rho.kind())
        .expect("zeroing coherences preserves the density invariants")
}

/// Unitary of one element; gradients have none.
pub fn element_unitary(sys: &SpinSystem, el: &PulseElement) -> Result<UnitaryMatrix<f64>> {
    match el {
        PulseElement::Hard { spins, angle, axis } => hard_pulse(sys, spins, *angle, *axis),
        PulseElement::SpinSelective { spin, angle, axis } => {
            hard_pulse(sys, &[*spin], *angle, *axis)
        }
        PulseElement::Delay { seconds } => free_evolution(sys, *seconds),
        PulseElement::JDelay { i, j, tau } => j_coupling_evolution(sys, *i, *j, *tau),
        PulseElement::Gradient => Err(Error::GradientInUnitary),
        PulseElement::TransitionSelective { a, b, angle, axis } => {
            transition_selective(sys, a, b, *angle, *axis)
        }
    }
}

/// Product unitary of a gradient-free sequence, first element applied first.
pub fn sequence_unitary(seq: &PulseSequence) -> Result<UnitaryMatrix<f64>> {
    let mut acc = UnitaryMatrix::identity(seq.system().n_spins());
    for el in seq.elements() {
        acc = element_unitary(seq.system(), el)?.compose(&acc)?;
    }
    Ok(acc)
}

/// Run a sequence over a density matrix, applying gradients in the given
/// mode.
pub fn apply_sequence(
    seq: &PulseSequence,
    rho: &DensityMatrix<f64>,
    mode: GradientMode,
) -> Result<DensityMatrix<f64>> {
    let mut state = rho.clone();
    for el in seq.elements() {
        state = match el {
            PulseElement::Gradient => gradient_apply(&state, mode),
            other => {
                let u = element_unitary(seq.system(), other)?;
                crate::qstate::apply_unitary_density(&u, &state)?
            }
        };
    }
    Ok(state)
}

impl fmt::Display for PulseElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseElement::Hard { spins, angle, axis } => {
                let list = spins
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                write!(f, "pulse spins={list} angle={} axis={axis}", angle::format_angle(*angle))
            }
            PulseElement::SpinSelective { spin, angle, axis } => {
                write!(f, "spulse spin={spin} angle={} axis={axis}", angle::format_angle(*angle))
            }
            PulseElement::Delay { seconds } => write!(f, "delay t={seconds}"),
            PulseElement::JDelay { i, j, tau } => write!(f, "jdelay pair={i},{j} tau={tau}"),
            PulseElement::Gradient => write!(f, "grad"),
            PulseElement::TransitionSelective { a, b, angle, axis } => {
                write!(
                    f,
                    "linepulse a={a} b={b} angle={} axis={axis}",
                    angle::format_angle(*angle)
                )
            }
        }
    }
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for el in &self.elements {
            writeln!(f, "{el}")?;
        }
        Ok(())
    }
}

fn parse_element(line: &str, lineno: usize) -> Result<PulseElement> {
    let errp = |msg: String| Error::Parse { line: lineno, msg };
    let mut parts = line.split_whitespace();
    let head = parts.next().unwrap_or_default();
    let mut fields = std::collections::BTreeMap::new();
    for field in parts {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| errp(format!("bad field {field:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| Error::Parse { line: lineno, msg: format!("missing field {k:?}") })
    };
    match head {
        "pulse" => {
            let spins = get("spins")?
                .split(',')
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| errp("bad spin list".into()))?;
            Ok(PulseElement::Hard {
                spins,
                angle: angle::parse_angle(&get("angle")?)?,
                axis: Axis::parse(&get("axis")?)?,
            })
        }
        "spulse" => Ok(PulseElement::SpinSelective {
            spin: get("spin")?.parse().map_err(|_| errp("bad spin".into()))?,
            angle: angle::parse_angle(&get("angle")?)?,
            axis: Axis::parse(&get("axis")?)?,
        }),
        "delay" => Ok(PulseElement::Delay {
            seconds: get("t")?.parse().map_err(|_| errp("bad duration".into()))?,
        }),
        "jdelay" => {
            let pair = get("pair")?;
            let (i, j) = pair
                .split_once(',')
                .ok_or_else(|| errp(format!("bad pair {pair:?}")))?;
            Ok(PulseElement::JDelay {
                i: i.parse().map_err(|_| errp("bad spin".into()))?,
                j: j.parse().map_err(|_| errp("bad spin".into()))?,
                tau: get("tau")?.parse().map_err(|_| errp("bad tau".into()))?,
            })
        }
        "grad" => Ok(PulseElement::Gradient),
        "linepulse" => Ok(PulseElement::TransitionSelective {
            a: BitString::parse(&get("a")?)?,
            b: BitString::parse(&get("b")?)?,
            angle: angle::parse_angle(&get("angle")?)?,
            axis: Axis::parse(&get("axis")?)?,
        }),
        other => Err(errp(format!("unknown element {other:?}"))),
    }
}
