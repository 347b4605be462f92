//! Weakly-coupled spin systems: rotating-frame offsets and scalar couplings.
//!
//! The free-evolution Hamiltonian (angular frequency units, ħ = 1) is
//!
//!   H = Σ_i −2π ν_i Iz_i  +  Σ_{i<j} 2π J_ij Iz_i Iz_j
//!
//! with Iz|0⟩ = +½|0⟩. All terms are diagonal, so evolution is a pure phase
//! per basis state. Decoupled spins contribute neither their Zeeman term nor
//! any coupling term they take part in.

use std::collections::BTreeSet;
use std::fmt;

use crate::gate::{qubit_bit, BitString};
use crate::qstate::CMatrix;
use crate::{C64, Error, Result};

/// Spin labels, offsets (Hz), and the symmetric coupling table (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    labels: Vec<String>,
    offsets_hz: Vec<f64>,
    couplings_hz: Vec<Vec<f64>>,
    decoupled: BTreeSet<usize>,
}

impl SpinSystem {
    /// Build from labels, offsets, and coupling triples (i, j, J_ij in Hz).
    pub fn new(
        labels: Vec<String>,
        offsets_hz: Vec<f64>,
        couplings: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = labels.len();
        if offsets_hz.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: offsets_hz.len() });
        }
        if !offsets_hz.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut table = vec![vec![0.0; n]; n];
        for &(i, j, j_hz) in couplings {
            if i == 0 || i > n {
                return Err(Error::InvalidSpin { spin: i, n_spins: n });
            }
            if j == 0 || j > n {
                return Err(Error::InvalidSpin { spin: j, n_spins: n });
            }
            if i == j || !j_hz.is_finite() {
                return Err(Error::NonFinite);
            }
            table[i - 1][j - 1] = j_hz;
            table[j - 1][i - 1] = j_hz;
        }
        Ok(Self {
            labels,
            offsets_hz,
            couplings_hz: table,
            decoupled: BTreeSet::new(),
        })
    }

    /// The trichloroethylene system used throughout: two carbons 904.4 Hz
    /// apart (frame on the second) and a proton, with J12 = 103.1 Hz,
    /// J23 = 203.8 Hz, J13 = 9.16 Hz.
    pub fn tce() -> Self {
        Self::new(
            vec!["C1".into(), "C2".into(), "H3".into()],
            vec![904.4, 0.0, 0.0],
            &[(1, 2, 103.1), (2, 3, 203.8), (1, 3, 9.16)],
        )
        .expect("static system")
    }

    pub fn n_spins(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn label(&self, spin: usize) -> &str {
        &self.labels[spin - 1]
    }

    pub fn offset_hz(&self, spin: usize) -> f64 {
        self.offsets_hz[spin - 1]
    }

    pub fn coupling_hz(&self, i: usize, j: usize) -> f64 {
        self.couplings_hz[i - 1][j - 1]
    }

    pub fn is_decoupled(&self, spin: usize) -> bool {
        self.decoupled.contains(&spin)
    }

    pub fn decoupled(&self) -> &BTreeSet<usize> {
        &self.decoupled
    }

    /// Spins not currently decoupled, ascending.
    pub fn active_spins(&self) -> Vec<usize> {
        (1..=self.n_spins())
            .filter(|s| !self.decoupled.contains(s))
            .collect()
    }

    pub fn check_spin(&self, spin: usize) -> Result<()> {
        if spin == 0 || spin > self.n_spins() {
            return Err(Error::InvalidSpin { spin, n_spins: self.n_spins() });
        }
        Ok(())
    }

    /// Same system with the listed spins decoupled.
    pub fn with_decoupled(&self, spins: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        for &s in spins {
            self.check_spin(s)?;
            out.decoupled.insert(s);
        }
        Ok(out)
    }

    /// New system containing only the active spins, relabelled 1..m in the
    /// original order.
    pub fn restrict_to_active(&self) -> Self {
        let keep = self.active_spins();
        let labels = keep.iter().map(|&s| self.labels[s - 1].clone()).collect();
        let offsets = keep.iter().map(|&s| self.offsets_hz[s - 1]).collect();
        let mut couplings = Vec::new();
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                let j_hz = self.couplings_hz[i - 1][j - 1];
                if j_hz != 0.0 {
                    couplings.push((a + 1, b + 1, j_hz));
                }
            }
        }
        Self::new(labels, offsets, &couplings).expect("restriction preserves validity")
    }

    /// Diagonal Hamiltonian matrix in angular frequency units.
    pub fn hamiltonian_matrix(&self) -> CMatrix<f64> {
        let n = self.n_spins();
        let dim = self.dim();
        let z = |b: usize, s: usize| if qubit_bit(b, s, n) { -0.5 } else { 0.5 };
        let mut diag = vec![C64::new(0.0, 0.0); dim];
        for (b, d) in diag.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 1..=n {
                if self.is_decoupled(i) {
                    continue;
                }
                acc += -2.0 * std::f64::consts::PI * self.offsets_hz[i - 1] * z(b, i);
                for j in (i + 1)..=n {
                    if self.is_decoupled(j) {
                        continue;
                    }
                    let j_hz = self.couplings_hz[i - 1][j - 1];
                    if j_hz != 0.0 {
                        acc += 2.0 * std::f64::consts::PI * j_hz * z(b, i) * z(b, j);
                    }
                }
            }
            *d = C64::new(acc, 0.0);
        }
        CMatrix::from_diag(&diag)
    }

    /// Resonance frequency (Hz) of the single-quantum transition that flips
    /// `spin` while the other spins sit in the passive configuration `m`
    /// (ascending spin order, decoupled spins excluded from splitting).
    ///
    /// ν = ν_k + Σ_{j≠k} J_kj · (+½ if m_j = 0 else −½).
    pub fn peak_frequency_hz(&self, spin: usize, passive: &[bool]) -> Result<f64> {
        self.check_spin(spin)?;
        let others: Vec<usize> = (1..=self.n_spins()).filter(|&s| s != spin).collect();
        if passive.len() != others.len() {
            return Err(Error::PatternLength { expected: others.len(), got: passive.len() });
        }
        let mut nu = self.offsets_hz[spin - 1];
        for (idx, &j) in others.iter().enumerate() {
            if self.is_decoupled(j) {
                continue;
            }
            let sign = if passive[idx] { -0.5 } else { 0.5 };
            nu += self.couplings_hz[spin - 1][j - 1] * sign;
        }
        Ok(nu)
    }

    /// Frequency (Hz) of the transition |a⟩ ↔ |b⟩, which must differ in
    /// exactly one bit.
    pub fn transition_frequency_hz(&self, a: &BitString, b: &BitString) -> Result<f64> {
        let n = self.n_spins();
        if a.len() != n || b.len() != n {
            return Err(Error::PatternLength { expected: n, got: a.len().max(b.len()) });
        }
        let mut flipped = None;
        for q in 1..=n {
            if a.bit(q) != b.bit(q) {
                if flipped.is_some() {
                    return Err(Error::NotSingleTransition {
                        a: a.to_string(),
                        b: b.to_string(),
                    });
                }
                flipped = Some(q);
            }
        }
        let spin = flipped.ok_or_else(|| Error::NotSingleTransition {
            a: a.to_string(),
            b: b.to_string(),
        })?;
        let passive: Vec<bool> = (1..=n).filter(|&q| q != spin).map(|q| a.bit(q)).collect();
        self.peak_frequency_hz(spin, &passive)
    }

    /// Parse the two-section key-value configuration format; see `Display`.
    pub fn parse_config(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Spins,
            Couplings,
        }
        let mut section = Section::None;
        let mut labels = Vec::new();
        let mut offsets = Vec::new();
        let mut couplings = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let errp = |msg: String| Error::Parse { line: lineno + 1, msg };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[spins]" => {
                    section = Section::Spins;
                    continue;
                }
                "[couplings]" => {
                    section = Section::Couplings;
                    continue;
                }
                _ => {}
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| errp(format!("expected 'key = value', got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match section {
                Section::Spins => {
                    let hz: f64 = value
                        .parse()
                        .map_err(|_| errp(format!("bad offset {value:?}")))?;
                    labels.push(key.to_string());
                    offsets.push(hz);
                }
                Section::Couplings => {
                    let (i, j) = key
                        .split_once(',')
                        .ok_or_else(|| errp(format!("expected 'i,j = J', got {key:?}")))?;
                    let i: usize = i.trim().parse().map_err(|_| errp("bad spin index".into()))?;
                    let j: usize = j.trim().parse().map_err(|_| errp("bad spin index".into()))?;
                    let hz: f64 = value
                        .parse()
                        .map_err(|_| errp(format!("bad coupling {value:?}")))?;
                    couplings.push((i, j, hz));
                }
                Section::None => {
                    return Err(errp("entries must follow a [spins] or [couplings] header".into()))
                }
            }
        }
        if labels.is_empty() {
            return Err(Error::Parse { line: 0, msg: "no spins defined".into() });
        }
        Self::new(labels, offsets, &couplings)
    }
}

/// Iz of one spin embedded in the n-spin product space:
/// diag(+½, −½) on `spin`, identity elsewhere.
pub fn iz_operator(n_spins: usize, spin: usize) -> CMatrix<f64> {
    let dim = 1 << n_spins;
    CMatrix::from_fn(dim, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if qubit_bit(i, spin, n_spins) {
            C64::new(-0.5, 0.0)
        } else {
            C64::new(0.5, 0.0)
        }
    })
}

impl fmt::Display for SpinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[spins]")?;
        for (label, hz) in self.labels.iter().zip(&self.offsets_hz) {
            writeln!(f, "{label} = {hz}")?;
        }
        writeln!(f, "[couplings]")?;
        for i in 1..=self.n_spins() {
            for j in (i + 1)..=self.n_spins() {
                let j_hz = self.couplings_hz[i - 1][j - 1];
                if j_hz != 0.0 {
                    writeln!(f, "{i},{j} = {j_hz}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_spin_coupling_only_hamiltonian() {
        let sys = SpinSystem::new(
            vec!["a".into(), "b".into()],
            vec![0.0, 0.0],
            &[(1, 2, 103.1)],
        )
        .unwrap();
        let h = sys.hamiltonian_matrix();
        let w = 2.0 * PI * 103.1;
        let want = [0.25, -0.25, -0.25, 0.25];
        for (i, z) in want.iter().enumerate() {
            assert!((h[(i, i)].re - w * z).abs() < 1e-9);
        }
    }

    #[test]
    fn three_spin_ground_entry() {
        let sys = SpinSystem::tce();
        let h = sys.hamiltonian_matrix();
        let (n1, n2, n3) = (904.4, 0.0, 0.0);
        let want = -PI * (n1 + n2 + n3) + PI / 2.0 * (103.1 + 203.8 + 9.16);
        assert!((h[(0, 0)].re - want).abs() < 1e-9);
    }

    #[test]
    fn zero_parameters_give_zero_hamiltonian() {
        let sys = SpinSystem::new(vec!["a".into(), "b".into()], vec![0.0, 0.0], &[]).unwrap();
        assert!(sys.hamiltonian_matrix().max_abs() < 1e-15);
    }

    #[test]
    fn decoupled_spin_drops_out_entirely() {
        let sys = SpinSystem::tce().with_decoupled(&[3]).unwrap();
        let h = sys.hamiltonian_matrix();
        // entries must not depend on the third bit
        for b in 0..4 {
            let i = b << 1;
            assert!((h[(i, i)].re - h[(i + 1, i + 1)].re).abs() < 1e-12);
        }
        let restricted = sys.restrict_to_active();
        assert_eq!(restricted.n_spins(), 2);
        assert_eq!(restricted.label(1), "C1");
        assert_eq!(restricted.coupling_hz(1, 2), 103.1);
    }

    #[test]
    fn peak_frequencies_follow_passive_state_splitting() {
        let sys = SpinSystem::tce();
        // spin 2, both partners up: ν2 + J12/2 + J23/2
        let f = sys.peak_frequency_hz(2, &[false, false]).unwrap();
        assert!((f - (0.0 + 103.1 / 2.0 + 203.8 / 2.0)).abs() < 1e-12);
        // spin 2, proton down: ν2 + J12/2 − J23/2
        let f = sys.peak_frequency_hz(2, &[false, true]).unwrap();
        assert!((f - (103.1 / 2.0 - 203.8 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn transition_frequency_matches_line_assignment() {
        let sys = SpinSystem::tce();
        let f = sys
            .transition_frequency_hz(
                &BitString::parse("001").unwrap(),
                &BitString::parse("011").unwrap(),
            )
            .unwrap();
        assert!((f - (103.1 / 2.0 - 203.8 / 2.0)).abs() < 1e-12);
        assert!(sys
            .transition_frequency_hz(
                &BitString::parse("000").unwrap(),
                &BitString::parse("011").unwrap(),
            )
            .is_err());
    }

    #[test]
    fn config_round_trips_and_matches_builtin() {
        let sys = SpinSystem::tce();
        let text = sys.to_string();
        let back = SpinSystem::parse_config(&text).unwrap();
        assert_eq!(sys, back);
        assert!(SpinSystem::parse_config("C1 = 1.0").is_err());
        assert!(SpinSystem::parse_config("[spins]\nC1 = banana").is_err());
    }
}
