//! End-to-end experiments: pseudo-pure preparation, the two- and three-qubit
//! phase-gate runs, spectrum extraction, and phase-slope fits.
//!
//! Everything simulates traceless deviation matrices; the identity component
//! is invisible to observation and dropped. The preparation sequences leave
//! the target diagonal pattern with a negative proportionality constant
//! (≈ −√3/√2 for the pair sequence), and their zero-quantum residue is only
//! removed by the strict gradient; both facts are properties of the ideal
//! simulation, so the preps run the strict gradient and then calibrate the
//! overall sign the way a receiver phase would be set — documented here,
//! asserted in tests.

use std::fmt;

use crate::compile::{compile_circuit, selective_zrot_sequence, QubitMap};
use crate::gate::{gate_matrix, BitString, Circuit, Control, Gate};
use crate::pulse::{
    apply_sequence, hard_pulse, transition_selective, Axis, GradientMode, PulseElement,
    PulseSequence,
};
use crate::qstate::{apply_unitary_density, CMatrix, DensityKind, DensityMatrix};
use crate::spin::{iz_operator, SpinSystem};
use crate::{tol, C64, Density, Error, Result, Unitary};

/// Equilibrium proton-to-carbon polarization ratio.
pub const DEFAULT_GAMMA_RATIO: f64 = 4.0;

/// One spectral line: the single-quantum coherence of `observed_spin` with
/// the other spins pinned in `passive`.
#[derive(Debug, Clone)]
pub struct Peak {
    pub observed_spin: usize,
    pub spin_label: String,
    pub passive: Vec<bool>,
    pub frequency_hz: f64,
    pub amplitude: C64,
    /// Zero-based density-matrix cell (row: spin in |0⟩) the line reads out.
    pub source_cell: (usize, usize),
}

impl Peak {
    /// Stable identifier, e.g. `C1_m1` for the C1 line with its partner down.
    pub fn id(&self) -> String {
        let bits: String = self.passive.iter().map(|&b| if b { '1' } else { '0' }).collect();
        format!("{}_m{}", self.spin_label, bits)
    }

    pub fn magnitude(&self) -> f64 {
        self.amplitude.norm()
    }

    pub fn phase(&self) -> f64 {
        self.amplitude.arg()
    }
}

/// How the reference peak of a spectrum is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeakSelector {
    None,
    HighestFrequency,
    /// The peak reading out this zero-based cell.
    Cell(usize, usize),
}

/// A set of peaks with an optional reference whose phase is subtracted from
/// all others.
#[derive(Debug, Clone)]
pub struct Spectrum {
    peaks: Vec<Peak>,
    reference: Option<usize>,
}

impl Spectrum {
    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn reference(&self) -> Option<&Peak> {
        self.reference.map(|i| &self.peaks[i])
    }

    /// Phase of peak `idx` relative to the reference; exactly 0 for the
    /// reference itself, the raw phase when there is none.
    pub fn relative_phase(&self, idx: usize) -> f64 {
        match self.reference {
            None => self.peaks[idx].phase(),
            Some(r) if r == idx => 0.0,
            Some(r) => wrap_pm_pi(self.peaks[idx].phase() - self.peaks[r].phase()),
        }
    }

    pub fn peak_by_id(&self, id: &str) -> Option<(usize, &Peak)> {
        self.peaks.iter().enumerate().find(|(_, p)| p.id() == id)
    }

    pub fn peak_by_cell(&self, cell: (usize, usize)) -> Option<(usize, &Peak)> {
        self.peaks.iter().enumerate().find(|(_, p)| p.source_cell == cell)
    }
}

/// Wrap into (−π, π].
fn wrap_pm_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * std::f64::consts::PI);
    if y > std::f64::consts::PI {
        y -= 2.0 * std::f64::consts::PI;
    }
    y
}

fn peaks_of_spin(rho: &Density, sys: &SpinSystem, spin: usize) -> Result<Vec<Peak>> {
    sys.check_spin(spin)?;
    if rho.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: rho.dim() });
    }
    let n = sys.n_spins();
    let others: Vec<usize> = (1..=n).filter(|&s| s != spin).collect();
    let mut peaks = Vec::new();
    for m in 0..(1usize << others.len()) {
        let passive: Vec<bool> = (0..others.len())
            .map(|k| (m >> (others.len() - 1 - k)) & 1 == 1)
            .collect();
        let mut a = 0usize;
        let mut pk = 0;
        for q in 1..=n {
            a <<= 1;
            if q != spin {
                a |= passive[pk] as usize;
                pk += 1;
            }
        }
        let b = a | (1 << (n - spin));
        let amplitude = rho.cell(a, b);
        if amplitude.norm() < tol::AMPLITUDE_FLOOR {
            continue;
        }
        peaks.push(Peak {
            observed_spin: spin,
            spin_label: sys.label(spin).to_string(),
            frequency_hz: sys.peak_frequency_hz(spin, &passive)?,
            passive,
            amplitude,
            source_cell: (a, b),
        });
    }
    Ok(peaks)
}

fn select_reference(peaks: &[Peak], selector: PeakSelector) -> Option<usize> {
    match selector {
        PeakSelector::None => None,
        PeakSelector::HighestFrequency => peaks
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.frequency_hz.partial_cmp(&b.frequency_hz).unwrap())
            .map(|(i, _)| i),
        PeakSelector::Cell(i, j) => peaks.iter().position(|p| p.source_cell == (i, j)),
    }
}

/// Peaks of several observed spins merged into one spectrum with a common
/// reference.
pub fn observe_spins(
    rho: &Density,
    sys: &SpinSystem,
    spins: &[usize],
    selector: PeakSelector,
) -> Result<Spectrum> {
    let mut peaks = Vec::new();
    for &spin in spins {
        peaks.extend(peaks_of_spin(rho, sys, spin)?);
    }
    let reference = select_reference(&peaks, selector);
    Ok(Spectrum { peaks, reference })
}

/// Spectrum of one observed spin: one peak per passive-spin configuration,
/// amplitude taken from the corresponding single-quantum cell.
pub fn extract_spectrum(
    rho: &Density,
    sys: &SpinSystem,
    spin: usize,
    selector: PeakSelector,
) -> Result<Spectrum> {
    observe_spins(rho, sys, &[spin], selector)
}

/// The deviation pattern ½Iz1 + ½Iz2 + Iz1·Iz2 of the first two spins,
/// embedded in an n-spin space: the pair pseudo-pure target.
pub fn pair_pseudo_pure_pattern(n_spins: usize) -> CMatrix<f64> {
    let half = C64::new(0.5, 0.0);
    iz_operator(n_spins, 1)
        .scaled(half)
        .add(&iz_operator(n_spins, 2).scaled(half))
        .add(&iz_operator(n_spins, 1).mul(&iz_operator(n_spins, 2)))
}

/// Max entrywise difference after each matrix is scaled so its largest
/// entry magnitude is 1. Zero matrices compare equal to anything zero.
pub fn max_dev_up_to_scale(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    let (ma, mb) = (a.max_abs(), b.max_abs());
    if ma == 0.0 && mb == 0.0 {
        return 0.0;
    }
    let sa = if ma > 0.0 { ma } else { 1.0 };
    let sb = if mb > 0.0 { mb } else { 1.0 };
    a.scaled(C64::new(1.0 / sa, 0.0))
        .max_abs_diff(&b.scaled(C64::new(1.0 / sb, 0.0)))
}

/// Restrict to the first two spins with everything else decoupled.
pub fn carbon_pair(sys: &SpinSystem) -> Result<SpinSystem> {
    if sys.n_spins() < 2 {
        return Err(Error::ActiveSpinCount { expected: 2, got: sys.n_spins() });
    }
    let others: Vec<usize> = (3..=sys.n_spins()).collect();
    Ok(sys.with_decoupled(&others)?.restrict_to_active())
}

fn require_active(sys: &SpinSystem, expected: usize) -> Result<()> {
    let got = sys.active_spins().len();
    if got != expected || sys.n_spins() != expected {
        return Err(Error::ActiveSpinCount { expected, got });
    }
    Ok(())
}

/// Flip the overall sign so the dominant population is positive — the
/// receiver-phase calibration. The raw simulated constant is negative.
fn calibrate_sign(rho: Density) -> Density {
    let mut dominant = 0.0f64;
    for i in 0..rho.dim() {
        let d = rho.cell(i, i).re;
        if d.abs() > dominant.abs() {
            dominant = d;
        }
    }
    if dominant >= 0.0 {
        return rho;
    }
    DensityMatrix::new(
        rho.n_qubits(),
        rho.matrix().scaled(C64::new(-1.0, 0.0)),
        rho.kind(),
    )
    .expect("sign flip preserves the deviation invariants")
}

fn deviation(n: usize, mat: CMatrix<f64>) -> Density {
    DensityMatrix::new(n, mat, DensityKind::Deviation)
        .expect("construction from traceless Hermitian operators")
}

/// The spatial-averaging pulse program turning pair equilibrium into the
/// pseudo-pure deviation: [π/4]^{1,2}_x − ¼J − [π]^{1,2}_y − ¼J −
/// [−π]^{1,2}_y − [−5π/6]^{1,2}_y − grad.
pub fn prep_pseudo_pure_2_sequence(sys: &SpinSystem) -> Result<PulseSequence> {
    require_active(sys, 2)?;
    let j = sys.coupling_hz(1, 2);
    if j == 0.0 {
        return Err(Error::ZeroCoupling { i: 1, j: 2 });
    }
    let tau = 1.0 / (4.0 * j);
    let pi = std::f64::consts::PI;
    PulseSequence::new(
        sys.clone(),
        vec![
            PulseElement::Hard { spins: vec![1, 2], angle: pi / 4.0, axis: Axis::X },
            PulseElement::Delay { seconds: tau },
            PulseElement::Hard { spins: vec![1, 2], angle: pi, axis: Axis::Y },
            PulseElement::Delay { seconds: tau },
            PulseElement::Hard { spins: vec![1, 2], angle: -pi, axis: Axis::Y },
            PulseElement::Hard { spins: vec![1, 2], angle: -5.0 * pi / 6.0, axis: Axis::Y },
            PulseElement::Gradient,
        ],
    )
}

/// Pair equilibrium deviation Iz1 + Iz2.
pub fn pair_equilibrium(sys: &SpinSystem) -> Result<Density> {
    require_active(sys, 2)?;
    Ok(deviation(2, iz_operator(2, 1).add(&iz_operator(2, 2))))
}

/// Pseudo-pure |00⟩ deviation of a two-spin system, prepared by spatial
/// averaging from equilibrium and receiver-calibrated.
pub fn prep_pseudo_pure_2(sys: &SpinSystem) -> Result<Density> {
    let seq = prep_pseudo_pure_2_sequence(sys)?;
    let rho = apply_sequence(&seq, &pair_equilibrium(sys)?, GradientMode::Strict)?;
    Ok(calibrate_sign(rho))
}

/// The three-spin preparation: saturate the proton, then run the pair
/// program with echo delays that refocus every proton coupling:
/// [π/2]^3_y − grad − [π/4]^{1,2}_x − ⅛J − [π]^3_y − ⅛J − [π]^{1,2,3}_y −
/// ⅛J − [−π]^3_y − ⅛J − [−π]^{1,2,3}_y − [−5π/6]^{1,2}_y − grad.
pub fn prep_rho2_3_sequence(sys: &SpinSystem) -> Result<PulseSequence> {
    require_active(sys, 3)?;
    let j12 = sys.coupling_hz(1, 2);
    if j12 == 0.0 {
        return Err(Error::ZeroCoupling { i: 1, j: 2 });
    }
    let tau = 1.0 / (8.0 * j12);
    let pi = std::f64::consts::PI;
    PulseSequence::new(
        sys.clone(),
        vec![
            PulseElement::Hard { spins: vec![3], angle: pi / 2.0, axis: Axis::Y },
            PulseElement::Gradient,
            PulseElement::Hard { spins: vec![1, 2], angle: pi / 4.0, axis: Axis::X },
            PulseElement::Delay { seconds: tau },
            PulseElement::Hard { spins: vec![3], angle: pi, axis: Axis::Y },
            PulseElement::Delay { seconds: tau },
            PulseElement::Hard { spins: vec![1, 2, 3], angle: pi, axis: Axis::Y },
            PulseElement::Delay { seconds: tau },
            PulseElement::Hard { spins: vec![3], angle: -pi, axis: Axis::Y },
            PulseElement::Delay { seconds: tau },
            PulseElement::Hard { spins: vec![1, 2, 3], angle: -pi, axis: Axis::Y },
            PulseElement::Hard { spins: vec![1, 2], angle: -5.0 * pi / 6.0, axis: Axis::Y },
            PulseElement::Gradient,
        ],
    )
}

/// Three-spin equilibrium deviation Iz1 + Iz2 + γ·Iz3.
pub fn three_spin_equilibrium(sys: &SpinSystem, gamma_ratio: f64) -> Result<Density> {
    require_active(sys, 3)?;
    Ok(deviation(
        3,
        iz_operator(3, 1)
            .add(&iz_operator(3, 2))
            .add(&iz_operator(3, 3).scaled(C64::new(gamma_ratio, 0.0))),
    ))
}

/// The proton-saturated branch of the three-spin equilibrium: a pair
/// pseudo-pure on the carbons times identity on the proton. The leading
/// saturation makes the result independent of `gamma_ratio`.
pub fn prep_rho2_3(sys: &SpinSystem, gamma_ratio: f64) -> Result<Density> {
    let seq = prep_rho2_3_sequence(sys)?;
    let rho = apply_sequence(&seq, &three_spin_equilibrium(sys, gamma_ratio)?, GradientMode::Strict)?;
    Ok(calibrate_sign(rho))
}

/// The companion branch that the saturated prep discards: the carbon
/// pseudo-pure projector times Iz on the proton.
pub fn rho1_pattern() -> Density {
    let quarter = CMatrix::identity(8).scaled(C64::new(0.25, 0.0));
    let mat = pair_pseudo_pure_pattern(3)
        .add(&quarter)
        .mul(&iz_operator(3, 3));
    deviation(3, mat)
}

/// Hadamard on both spins followed by the |11⟩ phase gate, run as compiled
/// pulses on the carbon pair. Returns the final deviation and the combined
/// C1/C2 spectrum referenced to the highest-frequency line.
pub fn experiment_phase2(sys: &SpinSystem, phi: f64) -> Result<(Density, Spectrum)> {
    let pair = carbon_pair(sys)?;
    let rho0 = prep_pseudo_pure_2(&pair)?;
    let circuit = Circuit::new(
        2,
        vec![
            Gate::Hadamard { qubit: 1 },
            Gate::Hadamard { qubit: 2 },
            Gate::ControlledPhasePrimitive {
                pattern: BitString::parse("11").unwrap(),
                angle: phi,
            },
        ],
    )?;
    let compiled = compile_circuit(&circuit, &pair, &QubitMap::identity(2))?;
    let rho = apply_sequence(&compiled.sequence, &rho0, GradientMode::Strict)?;
    let spectrum = observe_spins(&rho, &pair, &[1, 2], PeakSelector::HighestFrequency)?;
    Ok((rho, spectrum))
}

/// The same run with a trailing selective z-rotation on spin 1 cancelling
/// the compensatory half-angle module; C1 and C2 phases then separate.
pub fn experiment_no_compensation(sys: &SpinSystem, phi: f64) -> Result<(Density, Spectrum)> {
    let pair = carbon_pair(sys)?;
    let (rho, _) = experiment_phase2(sys, phi)?;
    // the appended rotation e^{+i(φ/2)Iz1} cancels the module's e^{−i(φ/2)Iz1}
    let undo = selective_zrot_sequence(&pair, 1, 2, -phi / 2.0)?;
    let rho = apply_sequence(&undo, &rho, GradientMode::Strict)?;
    let spectrum = observe_spins(&rho, &pair, &[1, 2], PeakSelector::HighestFrequency)?;
    Ok((rho, spectrum))
}

/// How the doubly-controlled NOT of the three-qubit network is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcnotMode {
    /// The exact permutation matrix.
    Exact,
    /// A line-selective π pulse: −i on the flipped subspace.
    LineSelective,
}

/// Unitary of the three-qubit network: a z-rotation on spin 2 conjugated
/// through two NOTs controlled on spin1 = 0, spin3 = 1. In exact mode this
/// is the diagonal gate e^{−iφ/2}@|001⟩, e^{+iφ/2}@|011⟩.
pub fn phase3_network_unitary(sys: &SpinSystem, phi: f64, mode: CcnotMode) -> Result<Unitary> {
    require_active(sys, 3)?;
    let zr_fwd = gate_matrix(&Gate::ZRot { qubit: 2, angle: phi / 2.0 }, 3)?;
    let zr_bwd = gate_matrix(&Gate::ZRot { qubit: 2, angle: -phi / 2.0 }, 3)?;
    let ccnot = match mode {
        CcnotMode::Exact => gate_matrix(
            &Gate::MultiControlledNot {
                controls: vec![Control::on_zero(1), Control::on_one(3)],
                target: 2,
            },
            3,
        )?,
        CcnotMode::LineSelective => transition_selective(
            sys,
            &BitString::parse("001").unwrap(),
            &BitString::parse("011").unwrap(),
            std::f64::consts::PI,
            Axis::X,
        )?,
    };
    // applied in order: rotation, NOT, counter-rotation, NOT
    ccnot
        .compose(&zr_bwd)?
        .compose(&ccnot)?
        .compose(&zr_fwd)
}

/// Three-qubit run: saturated prep, [π/2]^{2,3}_y, then the controlled
/// network. Returns the final deviation and the C2 spectrum referenced to
/// its highest-frequency peak.
pub fn experiment_phase3(
    sys: &SpinSystem,
    phi: f64,
    mode: CcnotMode,
) -> Result<(Density, Spectrum)> {
    require_active(sys, 3)?;
    let rho0 = prep_rho2_3(sys, DEFAULT_GAMMA_RATIO)?;
    let spread = hard_pulse(sys, &[2, 3], std::f64::consts::FRAC_PI_2, Axis::Y)?;
    let rho = apply_unitary_density(&spread, &rho0)?;
    let network = phase3_network_unitary(sys, phi, mode)?;
    let rho = apply_unitary_density(&network, &rho)?;
    let spectrum = observe_spins(&rho, sys, &[2], PeakSelector::HighestFrequency)?;
    Ok((rho, spectrum))
}

/// One CSV row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub angle_rad: f64,
    pub peak_id: String,
    pub observed_spin: usize,
    pub freq_hz: f64,
    pub magnitude: f64,
    pub phase_rad: f64,
    pub phase_ref_rad: f64,
}

/// Sweep of an experiment over its figure axis.
#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    fn push_spectrum(&mut self, angle: f64, spectrum: &Spectrum) {
        for (idx, peak) in spectrum.peaks().iter().enumerate() {
            self.rows.push(SweepRow {
                angle_rad: angle,
                peak_id: peak.id(),
                observed_spin: peak.observed_spin,
                freq_hz: peak.frequency_hz,
                magnitude: peak.magnitude(),
                phase_rad: peak.phase(),
                phase_ref_rad: spectrum.relative_phase(idx),
            });
        }
    }

    /// Deterministic CSV with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("angle_rad,peak_id,observed_spin,freq_hz,magnitude,phase_rad,phase_ref_rad\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig12(r.angle_rad),
                r.peak_id,
                r.observed_spin,
                sig12(r.freq_hz),
                sig12(r.magnitude),
                sig12(r.phase_rad),
                sig12(r.phase_ref_rad),
            ));
        }
        out
    }

    /// Parse a CSV produced by `to_csv`.
    pub fn from_csv(text: &str) -> Result<Sweep> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let errp = |msg: &str| Error::Parse { line: lineno + 1, msg: msg.into() };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(errp("expected 7 columns"));
            }
            let num = |i: usize, what: &str| -> Result<f64> {
                fields[i]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno + 1, msg: format!("bad {what}") })
            };
            rows.push(SweepRow {
                angle_rad: num(0, "angle")?,
                peak_id: fields[1].trim().to_string(),
                observed_spin: fields[2]
                    .trim()
                    .parse()
                    .map_err(|_| errp("bad spin index"))?,
                freq_hz: num(3, "frequency")?,
                magnitude: num(4, "magnitude")?,
                phase_rad: num(5, "phase")?,
                phase_ref_rad: num(6, "reference phase")?,
            });
        }
        Ok(Sweep { rows })
    }

    /// (angle, reference-relative phase) series of one peak.
    pub fn peak_series(&self, peak_id: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.peak_id == peak_id)
            .map(|r| (r.angle_rad, r.phase_ref_rad))
            .collect()
    }

    pub fn peak_ids(&self) -> Vec<String> {
        let mut ids = Vec::new();
        for r in &self.rows {
            if !ids.contains(&r.peak_id) {
                ids.push(r.peak_id.clone());
            }
        }
        ids
    }
}

/// Fixed 12-significant-digit float formatting for stable output files.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Sweep the pair experiment over x = −φ/2 (the figure axis).
pub fn sweep_phase2(sys: &SpinSystem, xs: &[f64]) -> Result<Sweep> {
    let mut sweep = Sweep::default();
    for &x in xs {
        let (_, spectrum) = experiment_phase2(sys, -2.0 * x)?;
        sweep.push_spectrum(x, &spectrum);
    }
    Ok(sweep)
}

/// Sweep the compensation-cancelled run over x = −φ/2.
pub fn sweep_no_compensation(sys: &SpinSystem, xs: &[f64]) -> Result<Sweep> {
    let mut sweep = Sweep::default();
    for &x in xs {
        let (_, spectrum) = experiment_no_compensation(sys, -2.0 * x)?;
        sweep.push_spectrum(x, &spectrum);
    }
    Ok(sweep)
}

/// Sweep the three-qubit run over x = φ/2.
pub fn sweep_phase3(sys: &SpinSystem, xs: &[f64], mode: CcnotMode) -> Result<Sweep> {
    let mut sweep = Sweep::default();
    for &x in xs {
        let (_, spectrum) = experiment_phase3(sys, 2.0 * x, mode)?;
        sweep.push_spectrum(x, &spectrum);
    }
    Ok(sweep)
}

/// Least-squares line fit of phase against angle.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub n_points: usize,
    /// Angle-sorted points after unwrapping.
    pub points: Vec<(f64, f64)>,
}

impl fmt::Display for SweepResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "slope = {}", sig12(self.slope))?;
        writeln!(f, "residual = {}", sig12(self.max_residual))?;
        write!(f, "n_points = {}", self.n_points)
    }
}

/// Unwrap phases along ascending angle (each step adjusted by multiples of
/// 2π to minimize the jump), then fit a line by least squares.
pub fn fit_phase_slope(points: &[(f64, f64)]) -> Result<SweepResult> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if (pts[pts.len() - 1].0 - pts[0].0).abs() < 1e-300 {
        return Err(Error::DegenerateAngles);
    }
    let mut unwrapped: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (x, p) in pts {
        let p = match unwrapped.last() {
            None => p,
            Some(&(_, prev)) => p - 2.0 * std::f64::consts::PI * ((p - prev) / (2.0 * std::f64::consts::PI)).round(),
        };
        unwrapped.push((x, p));
    }
    let n = unwrapped.len() as f64;
    let sx: f64 = unwrapped.iter().map(|p| p.0).sum();
    let sy: f64 = unwrapped.iter().map(|p| p.1).sum();
    let sxx: f64 = unwrapped.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = unwrapped.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::DegenerateAngles);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let max_residual = unwrapped
        .iter()
        .map(|&(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(SweepResult {
        slope,
        intercept,
        max_residual,
        n_points: unwrapped.len(),
        points: unwrapped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{expi, fidelity_observables, StateVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pair() -> SpinSystem {
        carbon_pair(&SpinSystem::tce()).unwrap()
    }

    /// The four observable pair cells: C1 doublet then C2 doublet.
    const PAIR_CELLS: [(usize, usize); 4] = [(0, 2), (1, 3), (0, 1), (2, 3)];

    /// Final pair state predicted for the phase gate on the uniform
    /// superposition: amplitudes (1, 1, 1, e^{iφ})/2.
    fn phase2_predicted(phi: f64) -> Density {
        let h = C64::new(0.5, 0.0);
        StateVector::new(2, vec![h, h, h, expi(phi) * 0.5])
            .unwrap()
            .to_density()
    }

    /// Prediction with the compensatory module cancelled:
    /// (1, 1, e^{−iφ/2}, e^{+iφ/2})/2.
    fn no_compensation_predicted(phi: f64) -> Density {
        let h = C64::new(0.5, 0.0);
        StateVector::new(
            2,
            vec![h, h, expi(-phi / 2.0) * 0.5, expi(phi / 2.0) * 0.5],
        )
        .unwrap()
        .to_density()
    }

    /// Predicted three-spin state (1, −e^{−iφ/2}, −1, e^{iφ/2}, 0, 0, 0, 0)/2.
    fn phase3_predicted(phi: f64) -> Density {
        let z = C64::new(0.0, 0.0);
        let h = C64::new(0.5, 0.0);
        StateVector::new(
            3,
            vec![
                h,
                expi(-phi / 2.0) * -0.5,
                -h,
                expi(phi / 2.0) * 0.5,
                z,
                z,
                z,
                z,
            ],
        )
        .unwrap()
        .to_density()
    }

    #[test]
    fn pair_prep_reaches_the_pseudo_pure_pattern() {
        let rho = prep_pseudo_pure_2(&pair()).unwrap();
        let pattern = pair_pseudo_pure_pattern(2);
        assert!(max_dev_up_to_scale(rho.matrix(), &pattern) < 1e-6);
        // diagonal ∝ (3/4, −1/4, −1/4, −1/4), positive after calibration
        let d0 = rho.cell(0, 0).re;
        assert!(d0 > 0.0);
        for i in 1..4 {
            assert!((rho.cell(i, i).re - (-d0 / 3.0)).abs() < 1e-9);
        }
        // off-diagonals are gone after the gradient
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(rho.cell(i, j).norm() < 1e-6);
                }
            }
        }
        assert!(rho.matrix().trace().norm() < 1e-10);
    }

    #[test]
    fn pair_prep_raw_constant_is_negative_with_zero_quantum_residue() {
        // same sequence, coherence-order gradient, no calibration: the ideal
        // run leaves a zero-quantum residue and a negative overall constant
        let sys = pair();
        let seq = prep_pseudo_pure_2_sequence(&sys).unwrap();
        let rho = apply_sequence(&seq, &pair_equilibrium(&sys).unwrap(), GradientMode::Ideal)
            .unwrap();
        assert!(rho.cell(0, 0).re < 0.0, "raw |00⟩ population is negative");
        let zq = rho.cell(1, 2).norm();
        assert!(
            (zq - 3f64.sqrt() / (4.0 * 2f64.sqrt())).abs() < 1e-9,
            "zero-quantum residue should be √3/(4√2), got {zq}"
        );
        // the strict gradient is what removes it
        let strict = apply_sequence(&seq, &pair_equilibrium(&sys).unwrap(), GradientMode::Strict)
            .unwrap();
        assert!(strict.cell(1, 2).norm() < 1e-15);
    }

    #[test]
    fn three_spin_prep_matches_the_reduced_pattern() {
        let sys = SpinSystem::tce();
        let rho = prep_rho2_3(&sys, DEFAULT_GAMMA_RATIO).unwrap();
        let pattern = pair_pseudo_pure_pattern(3);
        assert!(max_dev_up_to_scale(rho.matrix(), &pattern) < 1e-6);
        assert!(rho.matrix().trace().norm() < 1e-10);

        // the saturation makes the result polarization-ratio independent
        let other = prep_rho2_3(&sys, 3.2).unwrap();
        assert!(rho.matrix().max_abs_diff(other.matrix()) < 1e-10);
    }

    #[test]
    fn discarded_branch_shows_no_carbon_signal() {
        let sys = SpinSystem::tce();
        let rho1 = rho1_pattern();
        let u = hard_pulse(&sys, &[2, 3], PI / 2.0, Axis::Y).unwrap();
        let after = apply_unitary_density(&u, &rho1).unwrap();
        for spin in [1, 2] {
            let peaks = peaks_of_spin(&after, &sys, spin).unwrap();
            assert!(peaks.is_empty(), "spin {spin} should be silent");
            // directly: every single-quantum cell of the carbons is zero
            for m in 0..4usize {
                let passive = [(m >> 1) & 1 == 1, m & 1 == 1];
                let mut a = 0usize;
                let mut pk = 0;
                for q in 1..=3 {
                    a <<= 1;
                    if q != spin {
                        a |= passive[pk] as usize;
                        pk += 1;
                    }
                }
                let b = a | (1 << (3 - spin));
                assert!(after.cell(a, b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn phase2_observable_cells_match_the_prediction() {
        let sys = SpinSystem::tce();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let phi: f64 = rng.gen_range(-2.0 * PI..2.0 * PI);
            let (rho, _) = experiment_phase2(&sys, phi).unwrap();
            let dev = fidelity_observables(&rho, &phase2_predicted(phi), &PAIR_CELLS).unwrap();
            assert!(dev < 1e-6, "phi={phi}: dev={dev}");
        }
    }

    #[test]
    fn phase2_at_zero_has_all_peaks_in_phase() {
        let sys = SpinSystem::tce();
        let (_, spectrum) = experiment_phase2(&sys, 0.0).unwrap();
        assert_eq!(spectrum.peaks().len(), 4);
        for i in 0..spectrum.peaks().len() {
            assert!(spectrum.relative_phase(i).abs() < 1e-9);
        }
    }

    #[test]
    fn phase2_left_right_phase_difference_tracks_the_angle() {
        let sys = SpinSystem::tce();
        // x = −φ/2 = π/2: the left peak lags the right by exactly π
        let (_, spectrum) = experiment_phase2(&sys, -PI).unwrap();
        for spin in [1, 2] {
            let peaks: Vec<usize> = spectrum
                .peaks()
                .iter()
                .enumerate()
                .filter(|(_, p)| p.observed_spin == spin)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(peaks.len(), 2);
            let mut phases: Vec<(f64, f64)> = peaks
                .iter()
                .map(|&i| (spectrum.peaks()[i].frequency_hz, spectrum.relative_phase(i)))
                .collect();
            phases.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let diff = wrap_pm_pi(phases[1].1 - phases[0].1);
            assert!((diff.abs() - PI).abs() < 1e-9, "spin {spin}: {diff}");
        }
    }

    #[test]
    fn phase2_sweep_has_slope_two() {
        let sys = SpinSystem::tce();
        let xs = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];
        let sweep = sweep_phase2(&sys, &xs).unwrap();
        let fit = fit_phase_slope(&sweep.peak_series("C1_m1")).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-6, "slope {}", fit.slope);
        assert!(fit.max_residual < 1e-9);
        // the C2 left peak tracks identically
        let fit = fit_phase_slope(&sweep.peak_series("C2_m1")).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-6);
    }

    #[test]
    fn no_compensation_matches_prediction_and_splits_the_spins() {
        let sys = SpinSystem::tce();
        for x in [PI / 2.0, PI] {
            let phi = -2.0 * x;
            let (rho, spectrum) = experiment_no_compensation(&sys, phi).unwrap();
            let dev =
                fidelity_observables(&rho, &no_compensation_predicted(phi), &PAIR_CELLS).unwrap();
            assert!(dev < 1e-6, "x={x}: dev={dev}");

            // C1 and C2 right peaks now differ by φ/2
            let (i1, _) = spectrum.peak_by_cell((0, 2)).unwrap();
            let (i2, _) = spectrum.peak_by_cell((0, 1)).unwrap();
            let diff = wrap_pm_pi(spectrum.relative_phase(i2) - spectrum.relative_phase(i1));
            assert!(
                (diff - wrap_pm_pi(-phi / 2.0)).abs() < 1e-9,
                "x={x}: C2−C1 = {diff}"
            );
        }
        // at φ = 0 the run reduces to the plain experiment
        let (a, _) = experiment_no_compensation(&sys, 0.0).unwrap();
        let (b, _) = experiment_phase2(&sys, 0.0).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn no_compensation_equals_exact_rotation_appended() {
        let sys = SpinSystem::tce();
        let phi = -1.37;
        let (via_pulses, _) = experiment_no_compensation(&sys, phi).unwrap();
        let (base, _) = experiment_phase2(&sys, phi).unwrap();
        let rot = gate_matrix(&Gate::ZRot { qubit: 1, angle: -phi / 2.0 }, 2).unwrap();
        let direct = apply_unitary_density(&rot, &base).unwrap();
        assert!(via_pulses.matrix().max_abs_diff(direct.matrix()) < 1e-10);
    }

    #[test]
    fn phase3_network_is_the_diagonal_gate_in_exact_mode() {
        let sys = SpinSystem::tce();
        let phi = 1.234;
        let u = phase3_network_unitary(&sys, phi, CcnotMode::Exact).unwrap();
        let mut want = CMatrix::identity(8);
        want[(1, 1)] = expi(-phi / 2.0);
        want[(3, 3)] = expi(phi / 2.0);
        assert!(u.matrix().max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn phase3_observable_cells_match_both_modes() {
        let sys = SpinSystem::tce();
        let cells = [(0, 2), (1, 3)];
        for mode in [CcnotMode::Exact, CcnotMode::LineSelective] {
            for deg in [0.0f64, 25.2, 38.2, 90.0, 141.8, 154.7] {
                let phi = 2.0 * deg.to_radians();
                let (rho, spectrum) = experiment_phase3(&sys, phi, mode).unwrap();
                let dev = fidelity_observables(&rho, &phase3_predicted(phi), &cells).unwrap();
                assert!(dev < 1e-6, "{mode:?} {deg}°: dev={dev}");
                assert_eq!(spectrum.peaks().len(), 2);

                // left peak phase relative to the right is −φ (circularly)
                let (il, _) = spectrum.peak_by_cell((1, 3)).unwrap();
                let rel = spectrum.relative_phase(il);
                assert!(
                    wrap_pm_pi(rel + phi).abs() < 1e-9,
                    "{mode:?} {deg}°: {rel}"
                );
            }
        }
    }

    #[test]
    fn phase3_sweep_slope_magnitude_is_two_in_both_modes() {
        let sys = SpinSystem::tce();
        let xs: Vec<f64> = [0.0f64, 25.2, 38.2, 90.0, 141.8, 154.7]
            .iter()
            .map(|d| d.to_radians())
            .collect();
        for mode in [CcnotMode::Exact, CcnotMode::LineSelective] {
            let sweep = sweep_phase3(&sys, &xs, mode).unwrap();
            let fit = fit_phase_slope(&sweep.peak_series("C2_m01")).unwrap();
            assert!(
                (fit.slope.abs() - 2.0).abs() < 1e-6,
                "{mode:?}: slope {}",
                fit.slope
            );
            assert!(fit.slope < 0.0, "{mode:?}: ideal slope is negative");
        }
    }

    #[test]
    fn spectrum_peak_assignment_on_the_three_spin_system() {
        let sys = SpinSystem::tce();
        let (_, spectrum) = experiment_phase3(&sys, 0.6, CcnotMode::Exact).unwrap();
        let (_, right) = spectrum.peak_by_cell((0, 2)).unwrap();
        assert!((right.frequency_hz - (103.1 / 2.0 + 203.8 / 2.0)).abs() < 1e-9);
        assert_eq!(right.id(), "C2_m00");
        let (_, left) = spectrum.peak_by_cell((1, 3)).unwrap();
        assert!((left.frequency_hz - (103.1 / 2.0 - 203.8 / 2.0)).abs() < 1e-9);
        assert_eq!(left.id(), "C2_m01");
        // reference is the highest-frequency (right) peak, at zero phase
        assert_eq!(spectrum.reference().unwrap().source_cell, (0, 2));
    }

    #[test]
    fn diagonal_state_has_an_empty_spectrum() {
        let sys = pair();
        let rho = deviation(2, pair_pseudo_pure_pattern(2));
        let spectrum = extract_spectrum(&rho, &sys, 1, PeakSelector::HighestFrequency).unwrap();
        assert!(spectrum.peaks().is_empty());
    }

    #[test]
    fn fit_recovers_exact_lines_and_unwraps() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64 * 0.5, k as f64)).collect();
        let fit = fit_phase_slope(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);

        // same line reported wrapped into (−π, π]
        let wrapped: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(x, y)| (x, wrap_pm_pi(y)))
            .collect();
        let fit = fit_phase_slope(&wrapped).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12, "slope {}", fit.slope);

        assert!(matches!(
            fit_phase_slope(&pts[..2]),
            Err(Error::TooFewPoints(2))
        ));
        let degenerate = vec![(1.0, 0.1), (1.0, 0.2), (1.0, 0.3)];
        assert!(matches!(
            fit_phase_slope(&degenerate),
            Err(Error::DegenerateAngles)
        ));
    }

    #[test]
    fn csv_is_deterministic() {
        let sys = SpinSystem::tce();
        let xs = [PI / 4.0, PI / 2.0];
        let a = sweep_phase2(&sys, &xs).unwrap().to_csv();
        let b = sweep_phase2(&sys, &xs).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("angle_rad,peak_id,observed_spin,freq_hz,magnitude,phase_rad,phase_ref_rad\n"));
        // 2 angles × 4 peaks
        assert_eq!(a.lines().count(), 1 + 8);
    }
}
