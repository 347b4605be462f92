//! Gate set, circuit IR, and the dense controlled-phase oracle.
//!
//! Qubits are numbered 1..=n, matching spin labels; qubit 1 owns the most
//! significant basis-index bit. Circuits apply their ops in list order
//! (leftmost first), so the circuit unitary is U_k···U_2·U_1.

use std::fmt;

use crate::qstate::{expi, CMatrix, Cpx, UnitaryMatrix};
use crate::scalar::Scalar;
use crate::{angle, Error, Result};

/// Fixed-length bit pattern over the qubits of a circuit, MSB first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::InvalidPattern(s.to_string())),
            }
        }
        Ok(Self(bits))
    }

    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::EmptyPattern);
        }
        Ok(Self(bits))
    }

    /// Basis index of |s⟩ under the MSB-first convention.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bit of qubit q (1-based).
    pub fn bit(&self, q: usize) -> bool {
        self.0[q - 1]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Pattern of the first `len` qubits.
    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len].to_vec())
    }

    /// Number of set bits.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

/// A control qubit with its polarity: `true` fires on |1⟩, `false` on |0⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub polarity: bool,
}

impl Control {
    pub fn on_one(qubit: usize) -> Self {
        Self { qubit, polarity: true }
    }

    pub fn on_zero(qubit: usize) -> Self {
        Self { qubit, polarity: false }
    }
}

/// One gate application, with its qubit assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate<T> {
    XRot { qubit: usize, angle: T },
    YRot { qubit: usize, angle: T },
    ZRot { qubit: usize, angle: T },
    GlobalPhase { angle: T },
    Hadamard { qubit: usize },
    PauliX { qubit: usize },
    MultiControlledNot { controls: Vec<Control>, target: usize },
    ControlledZRot { controls: Vec<Control>, target: usize, angle: T },
    ControlledPhasePrimitive { pattern: BitString, angle: T },
}

impl<T: Scalar> Gate<T> {
    /// Short kind name, used for gate counts and the text format.
    pub fn kind(&self) -> &'static str {
        match self {
            Gate::XRot { .. } => "XROT",
            Gate::YRot { .. } => "YROT",
            Gate::ZRot { .. } => "ZROT",
            Gate::GlobalPhase { .. } => "GPHASE",
            Gate::Hadamard { .. } => "H",
            Gate::PauliX { .. } => "X",
            Gate::MultiControlledNot { .. } => "MCNOT",
            Gate::ControlledZRot { .. } => "CZROT",
            Gate::ControlledPhasePrimitive { .. } => "CPHASE",
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let check_q = |q: usize| {
            if q == 0 || q > n_qubits {
                Err(Error::InvalidQubit { qubit: q, n_qubits })
            } else {
                Ok(())
            }
        };
        let check_angle = |a: T| {
            if a.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFinite)
            }
        };
        let check_controls = |controls: &[Control], target: usize| {
            check_q(target)?;
            let mut seen = vec![false; n_qubits + 1];
            seen[target] = true;
            for c in controls {
                check_q(c.qubit)?;
                if seen[c.qubit] {
                    return Err(Error::InvalidControls);
                }
                seen[c.qubit] = true;
            }
            Ok(())
        };
        match self {
            Gate::XRot { qubit, angle }
            | Gate::YRot { qubit, angle }
            | Gate::ZRot { qubit, angle } => {
                check_q(*qubit)?;
                check_angle(*angle)
            }
            Gate::GlobalPhase { angle } => check_angle(*angle),
            Gate::Hadamard { qubit } | Gate::PauliX { qubit } => check_q(*qubit),
            Gate::MultiControlledNot { controls, target } => check_controls(controls, *target),
            Gate::ControlledZRot { controls, target, angle } => {
                check_controls(controls, *target)?;
                check_angle(*angle)
            }
            Gate::ControlledPhasePrimitive { pattern, angle } => {
                if pattern.len() != n_qubits {
                    return Err(Error::PatternLength {
                        expected: n_qubits,
                        got: pattern.len(),
                    });
                }
                check_angle(*angle)
            }
        }
    }
}

/// Ordered list of gate applications over n qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T> {
    n_qubits: usize,
    ops: Vec<Gate<T>>,
}

impl<T: Scalar> Circuit<T> {
    pub fn new(n_qubits: usize, ops: Vec<Gate<T>>) -> Result<Self> {
        for op in &ops {
            op.validate(n_qubits)?;
        }
        Ok(Self { n_qubits, ops })
    }

    pub fn empty(n_qubits: usize) -> Self {
        Self { n_qubits, ops: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Gate<T>] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, gate: Gate<T>) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.ops.push(gate);
        Ok(())
    }

    /// Count of each gate kind present, in a stable order.
    pub fn gate_counts(&self) -> Vec<(&'static str, usize)> {
        let mut counts: Vec<(&'static str, usize)> = Vec::new();
        for op in &self.ops {
            let k = op.kind();
            match counts.iter_mut().find(|(name, _)| *name == k) {
                Some((_, c)) => *c += 1,
                None => counts.push((k, 1)),
            }
        }
        counts.sort_by_key(|&(name, _)| name);
        counts
    }
}

/// Bit of qubit q (1-based) within basis index b of an n-qubit register.
pub(crate) fn qubit_bit(b: usize, q: usize, n: usize) -> bool {
    (b >> (n - q)) & 1 == 1
}

/// e^{−iθ·Iz} = diag(e^{−iθ/2}, e^{+iθ/2}), with Iz|0⟩ = +½|0⟩.
pub fn zrot_matrix<T: Scalar>(theta: T) -> CMatrix<T> {
    let half = theta / T::of(2.0);
    CMatrix::from_diag(&[expi(-half), expi(half)])
}

/// e^{−iθ·Ix}.
pub fn xrot_matrix<T: Scalar>(theta: T) -> CMatrix<T> {
    let half = theta / T::of(2.0);
    let (c, s) = (half.cos(), half.sin());
    CMatrix::from_rows(vec![
        vec![Cpx::new(c, T::zero()), Cpx::new(T::zero(), -s)],
        vec![Cpx::new(T::zero(), -s), Cpx::new(c, T::zero())],
    ])
    .expect("2x2")
}

/// e^{−iθ·Iy}.
pub fn yrot_matrix<T: Scalar>(theta: T) -> CMatrix<T> {
    let half = theta / T::of(2.0);
    let (c, s) = (half.cos(), half.sin());
    CMatrix::from_rows(vec![
        vec![Cpx::new(c, T::zero()), Cpx::new(-s, T::zero())],
        vec![Cpx::new(s, T::zero()), Cpx::new(c, T::zero())],
    ])
    .expect("2x2")
}

/// The standard real Hadamard matrix.
pub fn hadamard_matrix<T: Scalar>() -> CMatrix<T> {
    let h = T::one() / T::of(2.0).sqrt();
    CMatrix::from_rows(vec![
        vec![Cpx::new(h, T::zero()), Cpx::new(h, T::zero())],
        vec![Cpx::new(h, T::zero()), Cpx::new(-h, T::zero())],
    ])
    .expect("2x2")
}

pub fn paulix_matrix<T: Scalar>() -> CMatrix<T> {
    CMatrix::from_rows(vec![
        vec![Cpx::new(T::zero(), T::zero()), Cpx::new(T::one(), T::zero())],
        vec![Cpx::new(T::one(), T::zero()), Cpx::new(T::zero(), T::zero())],
    ])
    .expect("2x2")
}

/// The n-qubit controlled phase gate: e^{iφ} on |s⟩, identity elsewhere.
///
/// This diagonal matrix is the verification oracle for every decomposition
/// and compilation in the crate.
pub fn controlled_phase_dense<T: Scalar>(
    n_qubits: usize,
    s: &BitString,
    phi: T,
) -> Result<UnitaryMatrix<T>> {
    if s.len() != n_qubits {
        return Err(Error::PatternLength {
            expected: n_qubits,
            got: s.len(),
        });
    }
    let dim = 1usize << n_qubits;
    let mut diag = vec![Cpx::new(T::one(), T::zero()); dim];
    diag[s.index()] = expi(phi);
    UnitaryMatrix::new(n_qubits, CMatrix::from_diag(&diag))
}

fn embed_single<T: Scalar>(g: &CMatrix<T>, qubit: usize, n: usize) -> CMatrix<T> {
    let left = CMatrix::identity(1 << (qubit - 1));
    let right = CMatrix::identity(1 << (n - qubit));
    left.kron(g).kron(&right)
}

fn controls_match(b: usize, controls: &[Control], n: usize) -> bool {
    controls.iter().all(|c| qubit_bit(b, c.qubit, n) == c.polarity)
}

/// Full 2^n unitary of a single gate.
pub fn gate_matrix<T: Scalar>(gate: &Gate<T>, n_qubits: usize) -> Result<UnitaryMatrix<T>> {
    gate.validate(n_qubits)?;
    let dim = 1usize << n_qubits;
    let mat = match gate {
        Gate::XRot { qubit, angle } => embed_single(&xrot_matrix(*angle), *qubit, n_qubits),
        Gate::YRot { qubit, angle } => embed_single(&yrot_matrix(*angle), *qubit, n_qubits),
        Gate::ZRot { qubit, angle } => embed_single(&zrot_matrix(*angle), *qubit, n_qubits),
        Gate::GlobalPhase { angle } => CMatrix::identity(dim).scaled(expi(*angle)),
        Gate::Hadamard { qubit } => embed_single(&hadamard_matrix(), *qubit, n_qubits),
        Gate::PauliX { qubit } => embed_single(&paulix_matrix(), *qubit, n_qubits),
        Gate::MultiControlledNot { controls, target } => {
            let mut m = CMatrix::zeros(dim);
            let one = Cpx::new(T::one(), T::zero());
            for b in 0..dim {
                let dest = if controls_match(b, controls, n_qubits) {
                    b ^ (1 << (n_qubits - target))
                } else {
                    b
                };
                m[(dest, b)] = one;
            }
            m
        }
        Gate::ControlledZRot { controls, target, angle } => {
            let half = *angle / T::of(2.0);
            let diag: Vec<Cpx<T>> = (0..dim)
                .map(|b| {
                    if controls_match(b, controls, n_qubits) {
                        if qubit_bit(b, *target, n_qubits) {
                            expi(half)
                        } else {
                            expi(-half)
                        }
                    } else {
                        Cpx::new(T::one(), T::zero())
                    }
                })
                .collect();
            CMatrix::from_diag(&diag)
        }
        Gate::ControlledPhasePrimitive { pattern, angle } => {
            return controlled_phase_dense(n_qubits, pattern, *angle);
        }
    };
    UnitaryMatrix::new(n_qubits, mat)
}

/// Ordered product U = U_k···U_2·U_1 of the circuit's gates, op 1 first.
pub fn circuit_unitary<T: Scalar>(circuit: &Circuit<T>) -> Result<UnitaryMatrix<T>> {
    let mut acc = UnitaryMatrix::identity(circuit.n_qubits());
    for op in circuit.ops() {
        acc = gate_matrix(op, circuit.n_qubits())?.compose(&acc)?;
    }
    Ok(acc)
}

fn fmt_controls(controls: &[Control]) -> String {
    controls
        .iter()
        .map(|c| format!("{}:{}", c.qubit, if c.polarity { '+' } else { '-' }))
        .collect::<Vec<_>>()
        .join(",")
}

impl<T: Scalar> fmt::Display for Gate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::XRot { qubit, angle } | Gate::YRot { qubit, angle } | Gate::ZRot { qubit, angle } => {
                write!(f, "{} target={} angle={}", self.kind(), qubit, angle)
            }
            Gate::GlobalPhase { angle } => write!(f, "GPHASE angle={angle}"),
            Gate::Hadamard { qubit } | Gate::PauliX { qubit } => {
                write!(f, "{} target={}", self.kind(), qubit)
            }
            Gate::MultiControlledNot { controls, target } => {
                write!(f, "MCNOT target={} controls={}", target, fmt_controls(controls))
            }
            Gate::ControlledZRot { controls, target, angle } => write!(
                f,
                "CZROT target={} controls={} angle={}",
                target,
                fmt_controls(controls),
                angle
            ),
            Gate::ControlledPhasePrimitive { pattern, angle } => {
                write!(f, "CPHASE pattern={pattern} angle={angle}")
            }
        }
    }
}

impl<T: Scalar> fmt::Display for Circuit<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

impl Circuit<f64> {
    /// Parse the line-oriented circuit format produced by `Display`.
    ///
    /// Round-trips losslessly: angles are printed as shortest round-trip
    /// decimals and parsed back bit-exact.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut n_qubits: Option<usize> = None;
        let mut ops = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let errp = |msg: String| Error::Parse { line: lineno + 1, msg };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            if n_qubits.is_none() {
                if head != "qubits" {
                    return Err(errp("expected 'qubits <n>' header".into()));
                }
                let n: usize = parts
                    .next()
                    .ok_or_else(|| errp("missing qubit count".into()))?
                    .parse()
                    .map_err(|_| errp("bad qubit count".into()))?;
                if n == 0 {
                    return Err(errp("qubit count must be positive".into()));
                }
                n_qubits = Some(n);
                continue;
            }
            let mut target: Option<usize> = None;
            let mut controls: Option<Vec<Control>> = None;
            let mut ang: Option<f64> = None;
            let mut pattern: Option<BitString> = None;
            for field in parts {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| errp(format!("bad field {field:?}")))?;
                match key {
                    "target" => {
                        target = Some(value.parse().map_err(|_| errp("bad target".into()))?)
                    }
                    "controls" => {
                        let mut list = Vec::new();
                        for item in value.split(',') {
                            let (q, pol) = item
                                .split_once(':')
                                .ok_or_else(|| errp(format!("bad control {item:?}")))?;
                            let qubit: usize =
                                q.parse().map_err(|_| errp("bad control qubit".into()))?;
                            let polarity = match pol {
                                "+" => true,
                                "-" => false,
                                _ => return Err(errp(format!("bad polarity {pol:?}"))),
                            };
                            list.push(Control { qubit, polarity });
                        }
                        controls = Some(list);
                    }
                    "angle" => ang = Some(angle::parse_angle(value)?),
                    "pattern" => pattern = Some(BitString::parse(value)?),
                    _ => return Err(errp(format!("unknown field {key:?}"))),
                }
            }
            let need_target = || target.ok_or_else(|| errp("missing target".into()));
            let need_angle = || ang.ok_or_else(|| errp("missing angle".into()));
            let gate = match head {
                "XROT" => Gate::XRot { qubit: need_target()?, angle: need_angle()? },
                "YROT" => Gate::YRot { qubit: need_target()?, angle: need_angle()? },
                "ZROT" => Gate::ZRot { qubit: need_target()?, angle: need_angle()? },
                "GPHASE" => Gate::GlobalPhase { angle: need_angle()? },
                "H" => Gate::Hadamard { qubit: need_target()? },
                "X" => Gate::PauliX { qubit: need_target()? },
                "MCNOT" => Gate::MultiControlledNot {
                    controls: controls.ok_or_else(|| errp("missing controls".into()))?,
                    target: need_target()?,
                },
                "CZROT" => Gate::ControlledZRot {
                    controls: controls.ok_or_else(|| errp("missing controls".into()))?,
                    target: need_target()?,
                    angle: need_angle()?,
                },
                "CPHASE" => Gate::ControlledPhasePrimitive {
                    pattern: pattern.ok_or_else(|| errp("missing pattern".into()))?,
                    angle: need_angle()?,
                },
                other => return Err(errp(format!("unknown gate {other:?}"))),
            };
            ops.push(gate);
        }
        let n = n_qubits.ok_or(Error::Parse {
            line: 0,
            msg: "missing 'qubits <n>' header".into(),
        })?;
        Circuit::new(n, ops)
    }
}
