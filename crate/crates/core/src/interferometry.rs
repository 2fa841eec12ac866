//! Verification pulses, fringe surfaces and their analysis.
//!
//! The default two-pulse verification is RSB(`t1`, `φ₁`) followed by
//! BSB(`t2`, `φ₂`); the ground-qubit population afterwards is `P_g`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::fockspace::{basis_index, dim, JointDensity, JointState, Qubit};
use crate::noise::{apply_model, DecoherenceModel};
use crate::preparation::{prepare, sample_phase_vector, PrepConfig};
use crate::sideband::{BlockUnitary, PulseSpec, SidebandKind, HALF_TRANSFER_AREA};

pub const DEFAULT_GRID: usize = 32;
/// Samples per axis required for each harmonic order extracted on that axis.
pub const SAMPLES_PER_HARMONIC: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerificationMode {
    SinglePulse,
    TwoPulse,
}

/// Kind of the first verification pulse; the second is the other sideband.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseOrder {
    #[default]
    RedBlue,
    BlueRed,
}

impl PulseOrder {
    pub fn kinds(self) -> (SidebandKind, SidebandKind) {
        match self {
            PulseOrder::RedBlue => (SidebandKind::Red, SidebandKind::Blue),
            PulseOrder::BlueRed => (SidebandKind::Blue, SidebandKind::Red),
        }
    }
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSpec {
    pub mode: VerificationMode,
    /// Area of the first pulse (RSB by default).
    pub t1: f64,
    /// Area of the second pulse; 0 in single-pulse mode.
    pub t2: f64,
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    #[serde(default)]
    pub order: PulseOrder,
    /// `(φ₁−φ₂)/2` held on the sum axis and `(φ₁+φ₂)/2` held on the diff axis.
    #[serde(default)]
    pub axis_constants: [f64; 2],
    /// Three-point parabolic refinement of 1-D extrema.
    #[serde(default)]
    pub refine_extrema: bool,
}

impl VerificationSpec {
    pub fn two_pulse(t1: f64, t2: f64, grid: usize) -> Self {
        VerificationSpec {
            mode: VerificationMode::TwoPulse,
            t1,
            t2,
            grid1: uniform_grid(grid),
            grid2: uniform_grid(grid),
            order: PulseOrder::RedBlue,
            axis_constants: [0.0, 0.0],
            refine_extrema: false,
        }
    }

    pub fn single_pulse(t1: f64, grid: usize) -> Self {
        VerificationSpec {
            mode: VerificationMode::SinglePulse,
            t1,
            t2: 0.0,
            grid1: uniform_grid(grid),
            grid2: vec![0.0],
            order: PulseOrder::RedBlue,
            axis_constants: [0.0, 0.0],
            refine_extrema: false,
        }
    }

    pub fn with_order(mut self, order: PulseOrder) -> Self {
        self.order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("grid1", &self.grid1), ("grid2", &self.grid2)] {
            if g.is_empty() {
                return Err(Error::InvalidInput(format!("{name} is empty")));
            }
            if g.iter().any(|p| !(0.0..TAU).contains(p)) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be strictly increasing within [0, 2π)"
                )));
            }
        }
        if !(self.t1 >= 0.0 && self.t2 >= 0.0 && self.t1.is_finite() && self.t2.is_finite()) {
            return Err(Error::InvalidInput("verification areas must be finite and ≥ 0".into()));
        }
        if self.mode == VerificationMode::SinglePulse && self.t2 != 0.0 {
            return Err(Error::InvalidInput("single-pulse mode requires t2 = 0".into()));
        }
        Ok(())
    }
}

impl Default for VerificationSpec {
    fn default() -> Self {
        Self::two_pulse(HALF_TRANSFER_AREA, HALF_TRANSFER_AREA, DEFAULT_GRID)
    }
}

/// Up to four `(index, coefficient)` entries of one output row.
#[derive(Debug, Clone, Copy)]
pub struct Row {
    idx: [usize; 4],
    val: [Complex64; 4],
    len: usize,
}

impl Row {
    fn new() -> Self {
        Row {
            idx: [0; 4],
            val: [ZERO; 4],
            len: 0,
        }
    }

    fn push(&mut self, i: usize, v: Complex64) {
        for k in 0..self.len {
            if self.idx[k] == i {
                self.val[k] += v;
                return;
            }
        }
        self.idx[self.len] = i;
        self.val[self.len] = v;
        self.len += 1;
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k], self.val[k]))
    }
}

/// Verification pulses with precomputed mixing angles.
#[derive(Debug, Clone)]
pub struct Verifier {
    n_max: usize,
    first: BlockUnitary,
    second: Option<BlockUnitary>,
}

impl Verifier {
    pub fn new(spec: &VerificationSpec, n_max: usize) -> Result<Self> {
        let (k1, k2) = spec.order.kinds();
        let first = BlockUnitary::from_pulse(&PulseSpec::new(k1, spec.t1, 0.0)?, n_max);
        let second = match spec.mode {
            VerificationMode::TwoPulse if spec.t2 > 0.0 => {
                Some(BlockUnitary::from_pulse(&PulseSpec::new(k2, spec.t2, 0.0)?, n_max))
            }
            _ => None,
        };
        Ok(Verifier { n_max, first, second })
    }

    pub fn red_blue(t1: f64, t2: f64, n_max: usize) -> Result<Self> {
        Self::new(&VerificationSpec::two_pulse(t1, t2, 1), n_max)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn ops(&self, phi1: f64, phi2: f64) -> (BlockUnitary, Option<BlockUnitary>) {
        (self.first.shifted(phi1), self.second.as_ref().map(|u| u.shifted(phi2)))
    }

    /// Rows `(g, m)` of the verification unitary.
    pub fn ground_rows(&self, phi1: f64, phi2: f64) -> Vec<Row> {
        let (u1, u2) = self.ops(phi1, phi2);
        ground_rows_of(&u1, u2.as_ref(), self.n_max)
    }
}

fn ground_rows_of(u1: &BlockUnitary, u2: Option<&BlockUnitary>, n_max: usize) -> Vec<Row> {
    (0..=n_max)
        .map(|m| {
            let gm = basis_index(Qubit::G, m);
            let mut row = Row::new();
            match u2 {
                None => {
                    for (j, v) in u1.row(gm) {
                        row.push(j, v);
                    }
                }
                Some(u2) => {
                    for (k, v2) in u2.row(gm) {
                        for (j, v1) in u1.row(k) {
                            row.push(j, v2 * v1);
                        }
                    }
                }
            }
            row
        })
        .collect()
}

/// Something whose ground population can be read through verification rows.
pub trait Measured: Sync {
    fn n_max(&self) -> usize;
    fn pg_from_rows(&self, rows: &[Row]) -> f64;
}

impl Measured for JointState {
    fn n_max(&self) -> usize {
        JointState::n_max(self)
    }
    fn pg_from_rows(&self, rows: &[Row]) -> f64 {
        let a = self.amps();
        rows.iter()
            .map(|r| r.entries().map(|(j, v)| v * a[j]).sum::<Complex64>().norm_sqr())
            .sum()
    }
}

impl Measured for JointDensity {
    fn n_max(&self) -> usize {
        JointDensity::n_max(self)
    }
    fn pg_from_rows(&self, rows: &[Row]) -> f64 {
        let m = self.matrix();
        let mut acc = 0.0;
        for r in rows {
            for (i, vi) in r.entries() {
                for (j, vj) in r.entries() {
                    acc += (vi * m[(i, j)] * vj.conj()).re;
                }
            }
        }
        acc
    }
}

fn check_cutoff_match<T: Measured + ?Sized>(x: &T, v: &Verifier) -> Result<()> {
    if x.n_max() != v.n_max {
        return Err(Error::DimensionMismatch {
            expected: dim(v.n_max),
            found: dim(x.n_max()),
        });
    }
    Ok(())
}

/// `P_g` after RSB(`t1`, `φ₁`) then BSB(`t2`, `φ₂`); zero-area pulses are skipped.
pub fn measure_pg(rho: &JointDensity, t1: f64, t2: f64, phi1: f64, phi2: f64) -> Result<f64> {
    let v = Verifier::red_blue(t1, t2, rho.n_max())?;
    Ok(rho.pg_from_rows(&v.ground_rows(phi1, phi2)))
}

pub fn measure_pg_state(state: &JointState, t1: f64, t2: f64, phi1: f64, phi2: f64) -> Result<f64> {
    let v = Verifier::red_blue(t1, t2, state.n_max())?;
    Ok(state.pg_from_rows(&v.ground_rows(phi1, phi2)))
}

/// `P_g` for any verification.
pub fn measure_with<T: Measured + ?Sized>(x: &T, v: &Verifier, phi1: f64, phi2: f64) -> Result<f64> {
    check_cutoff_match(x, v)?;
    Ok(x.pg_from_rows(&v.ground_rows(phi1, phi2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeMetrics {
    pub max: f64,
    pub min: f64,
    pub contrast: f64,
    pub visibility: f64,
}

fn parabolic_peak(ym: f64, y0: f64, yp: f64, maximum: bool) -> f64 {
    let den = ym - 2.0 * y0 + yp;
    if (maximum && den < 0.0) || (!maximum && den > 0.0) {
        y0 - (yp - ym).powi(2) / (8.0 * den)
    } else {
        y0
    }
}

/// Contrast and visibility from sampled extrema. With `periodic_refine` the
/// samples are treated as one uniformly sampled period and the extrema are
/// refined by a three-point parabola.
pub fn fringe_metrics(values: &[f64], periodic_refine: bool) -> Result<FringeMetrics> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty fringe".into()));
    }
    let (mut imax, mut imin) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v > values[imax] {
            imax = i;
        }
        if *v < values[imin] {
            imin = i;
        }
    }
    let (mut max, mut min) = (values[imax], values[imin]);
    let n = values.len();
    if periodic_refine && n >= 3 {
        let at = |i: usize, d: isize| values[(i as isize + d).rem_euclid(n as isize) as usize];
        max = parabolic_peak(at(imax, -1), max, at(imax, 1), true).min(1.0);
        min = parabolic_peak(at(imin, -1), min, at(imin, 1), false).max(0.0);
    }
    let sum = max + min;
    if sum <= 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok(FringeMetrics {
        max,
        min,
        contrast: max - min,
        visibility: (max - min) / sum,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisFringe {
    /// Scanned combination: `(φ₁+φ₂)/2` on the sum axis, `(φ₁−φ₂)/2` on the diff axis.
    pub coordinate: Vec<f64>,
    pub held: f64,
    pub pg: Vec<f64>,
    pub metrics: FringeMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeSurface {
    pub mode: VerificationMode,
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    /// `pg[i][j]` at `(grid1[i], grid2[j])`.
    pub pg: Vec<Vec<f64>>,
    pub contrast: f64,
    pub visibility: f64,
    pub sum_axis_fringe: Option<AxisFringe>,
    pub diff_axis_fringe: Option<AxisFringe>,
}

impl FringeSurface {
    pub fn metrics(&self) -> FringeMetrics {
        let max = self.pg.iter().flatten().copied().fold(f64::MIN, f64::max);
        let min = self.pg.iter().flatten().copied().fold(f64::MAX, f64::min);
        FringeMetrics {
            max,
            min,
            contrast: self.contrast,
            visibility: self.visibility,
        }
    }

    pub fn mean(&self) -> f64 {
        let n = self.grid1.len() * self.grid2.len();
        self.pg.iter().flatten().sum::<f64>() / n as f64
    }
}

fn axis<T: Measured + ?Sized>(
    x: &T,
    v: &Verifier,
    coords: &[f64],
    held: f64,
    sum_axis: bool,
    refine: bool,
) -> Result<AxisFringe> {
    let pg: Vec<f64> = coords
        .iter()
        .map(|&c| {
            let (p1, p2) = if sum_axis { (c + held, c - held) } else { (held + c, held - c) };
            x.pg_from_rows(&v.ground_rows(p1, p2))
        })
        .collect();
    let metrics = fringe_metrics(&pg, refine)?;
    Ok(AxisFringe {
        coordinate: coords.to_vec(),
        held,
        pg,
        metrics,
    })
}

/// Evaluates `P_g` on the grid plus the sum- and diff-axis projections.
pub fn scan_fringe<T: Measured + ?Sized>(x: &T, spec: &VerificationSpec) -> Result<FringeSurface> {
    spec.validate()?;
    let v = Verifier::new(spec, x.n_max())?;
    let u1: Vec<BlockUnitary> = spec.grid1.iter().map(|&p| v.first.shifted(p)).collect();
    let u2: Vec<Option<BlockUnitary>> = spec
        .grid2
        .iter()
        .map(|&p| v.second.as_ref().map(|u| u.shifted(p)))
        .collect();
    let pg: Vec<Vec<f64>> = u1
        .iter()
        .map(|a| {
            u2.iter()
                .map(|b| x.pg_from_rows(&ground_rows_of(a, b.as_ref(), v.n_max)))
                .collect()
        })
        .collect();
    let (contrast, visibility, sum_axis_fringe, diff_axis_fringe) = match spec.mode {
        VerificationMode::SinglePulse => {
            let line: Vec<f64> = pg.iter().map(|r| r[0]).collect();
            let m = fringe_metrics(&line, spec.refine_extrema)?;
            (m.contrast, m.visibility, None, None)
        }
        VerificationMode::TwoPulse => {
            let flat: Vec<f64> = pg.iter().flatten().copied().collect();
            let m = fringe_metrics(&flat, false)?;
            let coords = &spec.grid1;
            let s = axis(x, &v, coords, spec.axis_constants[0], true, spec.refine_extrema)?;
            let d = axis(x, &v, coords, spec.axis_constants[1], false, spec.refine_extrema)?;
            (m.contrast, m.visibility, Some(s), Some(d))
        }
    };
    Ok(FringeSurface {
        mode: spec.mode,
        grid1: spec.grid1.clone(),
        grid2: spec.grid2.clone(),
        pg,
        contrast,
        visibility,
        sum_axis_fringe,
        diff_axis_fringe,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub contrast: f64,
    pub visibility: f64,
    pub contrast_stderr: f64,
    pub visibility_stderr: f64,
}

impl MeanMetrics {
    fn from_samples(c: &[f64], v: &[f64]) -> Self {
        let (mc, sc) = mean_stderr(c);
        let (mv, sv) = mean_stderr(v);
        MeanMetrics {
            contrast: mc,
            visibility: mv,
            contrast_stderr: sc,
            visibility_stderr: sv,
        }
    }
}

pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedMetrics {
    pub samples: usize,
    /// Over the full grid (the 1-D fringe in single-pulse mode).
    pub grid: MeanMetrics,
    /// Qubit-oscillator axis.
    pub sum_axis: Option<MeanMetrics>,
    /// Internal-oscillator axis.
    pub diff_axis: Option<MeanMetrics>,
}

/// Phase-averaged contrast and visibility over random preparation phases.
#[allow(clippy::too_many_arguments)]
pub fn averaged_metrics(
    prep: &PrepConfig,
    noise: Option<&DecoherenceModel>,
    spec: &VerificationSpec,
    samples: usize,
    seed: u64,
    n_max: usize,
    exec: Execution,
) -> Result<AveragedMetrics> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be ≥ 1".into()));
    }
    spec.validate()?;
    let per = map_indices(exec, samples, |i| -> Result<FringeSurface> {
        let phases = sample_phase_vector(prep.n, seed, i as u64);
        let state = prepare(&prep.sequence(&phases)?, n_max)?;
        match noise {
            None => scan_fringe(&state, spec),
            Some(m) => scan_fringe(&apply_model(&state, m)?, spec),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pick = |f: &dyn Fn(&FringeSurface) -> Option<FringeMetrics>| -> Option<MeanMetrics> {
        let m: Option<Vec<FringeMetrics>> = per.iter().map(f).collect();
        m.map(|m| {
            let c: Vec<f64> = m.iter().map(|x| x.contrast).collect();
            let v: Vec<f64> = m.iter().map(|x| x.visibility).collect();
            MeanMetrics::from_samples(&c, &v)
        })
    };
    Ok(AveragedMetrics {
        samples,
        grid: pick(&|s| Some(s.metrics())).expect("grid metrics"),
        sum_axis: pick(&|s| s.sum_axis_fringe.as_ref().map(|a| a.metrics)),
        diff_axis: pick(&|s| s.diff_axis_fringe.as_ref().map(|a| a.metrics)),
    })
}

/// `C = |α_e α_o*|`, `V = 2|α_e α_o*| / (|α_e|² + |α_o|²)`.
pub fn overlap_metrics(alpha_e: Complex64, alpha_o: Complex64) -> Result<(f64, f64)> {
    let den = alpha_e.norm_sqr() + alpha_o.norm_sqr();
    if den == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    let c = (alpha_e * alpha_o.conj()).norm();
    Ok((c, 2.0 * c / den))
}

/// Harmonic `(k, l)` of `e^{i(kφ₁ + lφ₂)}`.
pub type Harmonic = (i32, i32);

/// Positive representatives of the harmonics two-pulse verification can read.
pub const READABLE: [Harmonic; 4] = [(0, 1), (1, 0), (1, -1), (2, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PovmFamily {
    Dc,
    First,
    Second,
    Third,
}

pub fn family_of(h: Harmonic) -> Option<PovmFamily> {
    match (h.0.abs(), h.1.abs()) {
        (0, 0) => Some(PovmFamily::Dc),
        (1, 0) | (0, 1) => Some(PovmFamily::First),
        (1, 1) if h.0 * h.1 < 0 => Some(PovmFamily::Second),
        (2, 1) if h.0 * h.1 < 0 => Some(PovmFamily::Third),
        _ => None,
    }
}

/// Ground-population POVM of RSB(`t1`, `φ₁`) then BSB(`t2`, `φ₂`), split by
/// phase harmonic: `Π(φ₁, φ₂) = Σ_h Π_h e^{i(kφ₁ + lφ₂)}`.
#[derive(Debug, Clone)]
pub struct PovmDecomposition {
    pub n_max: usize,
    pub phi1: f64,
    pub phi2: f64,
    terms: BTreeMap<Harmonic, DMatrix<Complex64>>,
}

/// Closed form: the output amplitude `(g, m)` is a combination of at most
/// four input amplitudes,
///
/// ```text
/// (g,m)   cos b_m cos r_m
/// (e,m−1) −e^{−iφ₁} cos b_m sin r_m
/// (e,m+1) −e^{−iφ₂} sin b_m cos r_{m+2}
/// (g,m+2) −e^{i(φ₁−φ₂)} sin b_m sin r_{m+2}
/// ```
///
/// with `r_m = t1√m/2`, `b_m = t2√(m+1)/2`, and `Π = Σ_m a_m† a_m`.
pub fn povm_ground(t1: f64, t2: f64, phi1: f64, phi2: f64, n_max: usize) -> PovmDecomposition {
    let r = |m: usize| if m >= 1 && m <= n_max { t1 * (m as f64).sqrt() / 2.0 } else { 0.0 };
    let b = |m: usize| if m < n_max { t2 * ((m + 1) as f64).sqrt() / 2.0 } else { 0.0 };
    let d = dim(n_max);
    let mut terms: BTreeMap<Harmonic, DMatrix<Complex64>> = BTreeMap::new();
    for m in 0..=n_max {
        let (sb, cb) = b(m).sin_cos();
        let (sr, cr) = r(m).sin_cos();
        let (sr2, cr2) = r(m + 2).sin_cos();
        let mut comps: Vec<(usize, Harmonic, f64)> = vec![(basis_index(Qubit::G, m), (0, 0), cb * cr)];
        if m >= 1 {
            comps.push((basis_index(Qubit::E, m - 1), (-1, 0), -cb * sr));
        }
        if m < n_max {
            comps.push((basis_index(Qubit::E, m + 1), (0, -1), -sb * cr2));
        }
        if m + 2 <= n_max {
            comps.push((basis_index(Qubit::G, m + 2), (1, -1), -sb * sr2));
        }
        for &(i, hi, ai) in &comps {
            for &(j, hj, aj) in &comps {
                let v = ai * aj;
                if v == 0.0 {
                    continue;
                }
                let h = (hj.0 - hi.0, hj.1 - hi.1);
                let e = terms.entry(h).or_insert_with(|| DMatrix::zeros(d, d));
                e[(i, j)] += Complex64::new(v, 0.0);
            }
        }
    }
    PovmDecomposition {
        n_max,
        phi1,
        phi2,
        terms,
    }
}

impl PovmDecomposition {
    pub fn harmonics(&self) -> impl Iterator<Item = Harmonic> + '_ {
        self.terms.keys().copied()
    }

    /// Phase-free coefficient matrix of one harmonic.
    pub fn harmonic(&self, h: Harmonic) -> Option<&DMatrix<Complex64>> {
        self.terms.get(&h)
    }

    fn phase(&self, h: Harmonic) -> Complex64 {
        Complex64::from_polar(1.0, h.0 as f64 * self.phi1 + h.1 as f64 * self.phi2)
    }

    /// All harmonics of one family, Hermitian completion included.
    pub fn family(&self, f: PovmFamily) -> DMatrix<Complex64> {
        let d = dim(self.n_max);
        let mut out = DMatrix::zeros(d, d);
        for (h, m) in &self.terms {
            if family_of(*h) == Some(f) {
                out += m * self.phase(*h);
            }
        }
        out
    }

    pub fn dc(&self) -> DMatrix<Complex64> {
        self.family(PovmFamily::Dc)
    }

    pub fn total(&self) -> DMatrix<Complex64> {
        let d = dim(self.n_max);
        self.terms
            .iter()
            .fold(DMatrix::zeros(d, d), |acc, (h, m)| acc + m * self.phase(*h))
    }

    /// `tr(Π ρ)`.
    pub fn expectation(&self, rho: &JointDensity) -> f64 {
        trace_product(&self.total(), rho.matrix()).re
    }

    /// `c_h = tr(Π_h ρ)`, so that `P_g = Σ_h c_h e^{i(kφ₁+lφ₂)}`.
    pub fn coefficient(&self, h: Harmonic, rho: &JointDensity) -> Complex64 {
        self.terms
            .get(&h)
            .map(|m| trace_product(m, rho.matrix()))
            .unwrap_or(ZERO)
    }
}

pub fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Fourier content of a two-pulse fringe:
/// `P_g = dc + Σ_h (c_h e^{i(kφ₁+lφ₂)} + c.c.)` over [`READABLE`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSpectrum {
    pub dc: f64,
    pub coeffs: BTreeMap<Harmonic, Complex64>,
    /// Largest coefficient modulus at harmonics outside the readable set.
    pub outside: f64,
}

#[derive(Serialize, Deserialize)]
struct SpectrumWire {
    dc: f64,
    #[serde(rename = "A")]
    a: BTreeMap<String, f64>,
    #[serde(rename = "B")]
    b: BTreeMap<String, f64>,
    #[serde(rename = "R")]
    r: [f64; 4],
    outside: f64,
}

fn harmonic_key(h: Harmonic) -> String {
    format!("{},{}", h.0, h.1)
}

fn parse_key(s: &str) -> Option<Harmonic> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl Serialize for CoherenceSpectrum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for h in READABLE {
            a.insert(harmonic_key(h), self.a_kl(h));
            b.insert(harmonic_key(h), self.b_kl(h));
        }
        SpectrumWire {
            dc: self.dc,
            a,
            b,
            r: self.magnitudes(),
            outside: self.outside,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoherenceSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = SpectrumWire::deserialize(d)?;
        let mut coeffs = BTreeMap::new();
        for (k, av) in &w.a {
            let h = parse_key(k).ok_or_else(|| serde::de::Error::custom(format!("bad harmonic key {k}")))?;
            let bv = w.b.get(k).copied().unwrap_or(0.0);
            coeffs.insert(h, Complex64::new(av / 2.0, -bv / 2.0));
        }
        Ok(CoherenceSpectrum {
            dc: w.dc,
            coeffs,
            outside: w.outside,
        })
    }
}

impl CoherenceSpectrum {
    pub fn coefficient(&self, h: Harmonic) -> Complex64 {
        if let Some(c) = self.coeffs.get(&h) {
            *c
        } else if let Some(c) = self.coeffs.get(&(-h.0, -h.1)) {
            c.conj()
        } else {
            ZERO
        }
    }

    /// Cosine amplitude of `cos(kφ₁ + lφ₂)`.
    pub fn a_kl(&self, h: Harmonic) -> f64 {
        2.0 * self.coefficient(h).re
    }

    /// Sine amplitude of `sin(kφ₁ + lφ₂)`.
    pub fn b_kl(&self, h: Harmonic) -> f64 {
        -2.0 * self.coefficient(h).im
    }

    /// Blue-read first-order coherence `|c_{0,1}|`.
    pub fn r1_prime(&self) -> f64 {
        self.coefficient((0, 1)).norm()
    }

    /// Red-read first-order coherence `|c_{1,0}|`.
    pub fn r1(&self) -> f64 {
        self.coefficient((1, 0)).norm()
    }

    pub fn r2(&self) -> f64 {
        self.coefficient((1, -1)).norm()
    }

    pub fn r3(&self) -> f64 {
        self.coefficient((2, -1)).norm()
    }

    pub fn magnitudes(&self) -> [f64; 4] {
        [self.r1_prime(), self.r1(), self.r2(), self.r3()]
    }

    /// Every harmonic amplitude, `A` then `B`, in [`READABLE`] order.
    pub fn amplitudes(&self) -> Vec<f64> {
        READABLE
            .iter()
            .flat_map(|&h| [self.a_kl(h), self.b_kl(h)])
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum serialization")
    }
}

fn is_uniform_period(g: &[f64]) -> bool {
    let n = g.len();
    let step = TAU / n as f64;
    g.iter()
        .enumerate()
        .all(|(i, p)| (p - g[0] - step * i as f64).abs() < 1e-9)
}

/// Discrete Fourier coefficients of a two-pulse surface at the readable
/// harmonics up to the requested orders. Each axis needs
/// [`SAMPLES_PER_HARMONIC`] samples per harmonic order read on it.
pub fn fourier_spectrum(surface: &FringeSurface) -> Result<CoherenceSpectrum> {
    fourier_spectrum_of(surface, &READABLE)
}

pub fn fourier_spectrum_of(surface: &FringeSurface, harmonics: &[Harmonic]) -> Result<CoherenceSpectrum> {
    if surface.mode != VerificationMode::TwoPulse {
        return Err(Error::InvalidInput("harmonic extraction needs a two-pulse surface".into()));
    }
    let (g1, g2) = (&surface.grid1, &surface.grid2);
    if !is_uniform_period(g1) || !is_uniform_period(g2) {
        return Err(Error::InvalidInput("harmonic extraction needs uniform full-period grids".into()));
    }
    let k_max = harmonics.iter().map(|h| h.0.unsigned_abs() as usize).max().unwrap_or(0);
    let l_max = harmonics.iter().map(|h| h.1.unsigned_abs() as usize).max().unwrap_or(0);
    for (n, order) in [(g1.len(), k_max), (g2.len(), l_max)] {
        let required = SAMPLES_PER_HARMONIC * order;
        if n < required {
            return Err(Error::Aliasing {
                samples: n,
                order,
                required,
            });
        }
    }
    let norm = (g1.len() * g2.len()) as f64;
    let dft = |h: Harmonic| -> Complex64 {
        let mut acc = ZERO;
        for (i, p1) in g1.iter().enumerate() {
            for (j, p2) in g2.iter().enumerate() {
                acc += surface.pg[i][j] * Complex64::from_polar(1.0, -(h.0 as f64 * p1 + h.1 as f64 * p2));
            }
        }
        acc / norm
    };
    let coeffs: BTreeMap<Harmonic, Complex64> = harmonics.iter().map(|&h| (h, dft(h))).collect();
    // probe the lowest harmonics outside the readable set that the grid resolves
    let mut outside = 0.0f64;
    let kk = (g1.len() / 2).min(3) as i32;
    let ll = (g2.len() / 2).min(3) as i32;
    for k in -kk..=kk {
        for l in -ll..=ll {
            if family_of((k, l)).is_none() {
                outside = outside.max(dft((k, l)).norm());
            }
        }
    }
    Ok(CoherenceSpectrum {
        dc: dft((0, 0)).re,
        coeffs,
        outside,
    })
}

/// Exact spectrum of RSB(`t1`)→BSB(`t2`) verification from the POVM closed form.
pub fn analytic_spectrum(rho: &JointDensity, t1: f64, t2: f64) -> CoherenceSpectrum {
    let p = povm_ground(t1, t2, 0.0, 0.0, rho.n_max());
    let coeffs = READABLE.iter().map(|&h| (h, p.coefficient(h, rho))).collect();
    CoherenceSpectrum {
        dc: p.coefficient((0, 0), rho).re,
        coeffs,
        outside: 0.0,
    }
}

pub const PREDICTOR_COEFFICIENTS: [f64; 4] = [1.73, 1.07, 1.14, 1.87];

/// `1.73 R′¹ + 1.07 R¹ + 1.14 R² + 1.87 R³`.
pub fn predicted_max(spectrum: &CoherenceSpectrum) -> f64 {
    let r = spectrum.magnitudes();
    PREDICTOR_COEFFICIENTS.iter().zip(r).map(|(c, r)| c * r).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub samples: usize,
    /// Least-squares coefficients without intercept.
    pub coefficients: [f64; 4],
    /// Coefficient of determination of the refit model.
    pub r_squared_refit: f64,
    /// Squared correlation between the true contrast and the fixed-coefficient predictor.
    pub r_squared_predictor: f64,
}

/// Regresses true maximum contrast on the four coherence magnitudes.
pub fn contrast_regression(rows: &[([f64; 4], f64)]) -> Result<RegressionReport> {
    if rows.len() < 5 {
        return Err(Error::InvalidInput("need at least 5 samples".into()));
    }
    let n = rows.len();
    let x = DMatrix::from_fn(n, 4, |i, j| rows[i].0[j]);
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.1));
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let fitted = &x * &beta;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let pred: Vec<f64> = rows
        .iter()
        .map(|r| PREDICTOR_COEFFICIENTS.iter().zip(r.0).map(|(c, v)| c * v).sum())
        .collect();
    let pm = pred.iter().sum::<f64>() / n as f64;
    let cov: f64 = pred.iter().zip(y.iter()).map(|(p, v)| (p - pm) * (v - mean)).sum();
    let vp: f64 = pred.iter().map(|p| (p - pm).powi(2)).sum();
    Ok(RegressionReport {
        samples: n,
        coefficients: [beta[0], beta[1], beta[2], beta[3]],
        r_squared_refit: 1.0 - ss_res / ss_tot,
        r_squared_predictor: cov * cov / (vp * ss_tot),
    })
}

/// Phase offsets `(δ₁, δ₂)` with `P'(φ₁, φ₂) = P(φ₁ + δ₁, φ₂ + δ₂)`, read from
/// the first-order harmonics of two spectra.
pub fn fit_phase_offsets(reference: &CoherenceSpectrum, shifted: &CoherenceSpectrum) -> (f64, f64) {
    let d1 = (shifted.coefficient((1, 0)) / reference.coefficient((1, 0))).arg();
    let d2 = (shifted.coefficient((0, 1)) / reference.coefficient((0, 1))).arg();
    (d1, d2)
}

/// Single density-matrix element `|s, n⟩⟨s', m|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffDiagTerm {
    pub row: Qubit,
    pub n: usize,
    pub col: Qubit,
    pub m: usize,
}

impl OffDiagTerm {
    pub fn e_g(n: usize, m: usize) -> Self {
        OffDiagTerm {
            row: Qubit::E,
            n,
            col: Qubit::G,
            m,
        }
    }
    pub fn g_e(n: usize, m: usize) -> Self {
        OffDiagTerm {
            row: Qubit::G,
            n,
            col: Qubit::E,
            m,
        }
    }
    pub fn e_e(n: usize, m: usize) -> Self {
        OffDiagTerm {
            row: Qubit::E,
            n,
            col: Qubit::E,
            m,
        }
    }
    pub fn g_g(n: usize, m: usize) -> Self {
        OffDiagTerm {
            row: Qubit::G,
            n,
            col: Qubit::G,
            m,
        }
    }
}

/// Contribution of a unit element `|s,n⟩⟨s',m|`, rotated by `(θ, Θ)`, to
/// `P_g` at `φ₁ = φ₂ = 0`, with both verification areas equal to `kappa`
/// (or a single red pulse).
pub fn offdiag_contribution(term: OffDiagTerm, mode: VerificationMode, kappa: f64, theta: f64, big_theta: f64) -> Complex64 {
    let n_max = term.n.max(term.m) + 4;
    let t2 = match mode {
        VerificationMode::SinglePulse => 0.0,
        VerificationMode::TwoPulse => kappa,
    };
    let p = povm_ground(kappa, t2, 0.0, 0.0, n_max).total();
    let i = basis_index(term.row, term.n);
    let j = basis_index(term.col, term.m);
    let rot = Complex64::from_polar(
        1.0,
        theta / 2.0 * (term.row.sigma_z() - term.col.sigma_z()) + big_theta * (term.n as f64 - term.m as f64),
    );
    p[(j, i)] * rot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::sample_rng;
    use crate::fockspace::{random_parity_locked, random_parity_locked_density};
    use crate::preparation::build_sequence;
    use crate::sideband::{apply_pulse_density, apply_pulse};
    use approx::assert_abs_diff_eq;

    fn direct_pg(rho: &JointDensity, t1: f64, t2: f64, p1: f64, p2: f64) -> f64 {
        let mut r = rho.clone();
        if t1 > 0.0 {
            r = apply_pulse_density(&r, &PulseSpec::red(t1, p1).unwrap()).unwrap();
        }
        if t2 > 0.0 {
            r = apply_pulse_density(&r, &PulseSpec::blue(t2, p2).unwrap()).unwrap();
        }
        (0..=r.n_max()).map(|n| r.matrix()[(2 * n, 2 * n)].re).sum()
    }

    #[test]
    fn ground_rsb_gives_one() {
        let g = JointState::new_ground(6).unwrap().to_density();
        assert_abs_diff_eq!(measure_pg(&g, 1.3, 0.0, 0.4, 0.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rows_match_evolution() {
        let mut rng = sample_rng(3, 0);
        for k in 0..10 {
            let rho = random_parity_locked_density(&mut rng, 3, 6, 10).unwrap();
            let (t1, t2, p1, p2) = (0.3 + k as f64 * 0.2, 1.7 - k as f64 * 0.1, 0.2 * k as f64, 5.0 - k as f64);
            let a = measure_pg(&rho, t1, t2, p1, p2).unwrap();
            assert_abs_diff_eq!(a, direct_pg(&rho, t1, t2, p1, p2), epsilon = 1e-12);
        }
    }

    #[test]
    fn state_and_density_agree() {
        let mut rng = sample_rng(4, 0);
        let s = random_parity_locked(&mut rng, 7, 12).unwrap();
        let a = measure_pg_state(&s, 0.9, 1.1, 0.3, 2.0).unwrap();
        let b = measure_pg(&s.to_density(), 0.9, 1.1, 0.3, 2.0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        // direct state evolution
        let mut x = apply_pulse(&s, &PulseSpec::red(0.9, 0.3).unwrap()).unwrap();
        x = apply_pulse(&x, &PulseSpec::blue(1.1, 2.0).unwrap()).unwrap();
        let pg: f64 = (0..=12).map(|n| x.amp(Qubit::G, n).norm_sqr()).sum();
        assert_abs_diff_eq!(a, pg, epsilon = 1e-13);
    }

    #[test]
    fn povm_matches_evolution() {
        let mut rng = sample_rng(5, 0);
        for _ in 0..10 {
            let rho = random_parity_locked_density(&mut rng, 2, 8, 12).unwrap();
            let p = povm_ground(1.2, 0.7, 0.4, 2.9, 12);
            assert_abs_diff_eq!(p.expectation(&rho), direct_pg(&rho, 1.2, 0.7, 0.4, 2.9), epsilon = 1e-12);
        }
    }

    #[test]
    fn povm_single_pulse_reduction() {
        let p = povm_ground(1.2, 0.0, 0.4, 2.9, 10);
        assert_eq!(crate::linalg::max_abs(&p.family(PovmFamily::Second)), 0.0);
        assert_eq!(crate::linalg::max_abs(&p.family(PovmFamily::Third)), 0.0);
        let f = p.family(PovmFamily::First);
        for k in 1..=5usize {
            let i = basis_index(Qubit::E, 2 * k - 1);
            let j = basis_index(Qubit::G, 2 * k);
            let expect = -0.5 * Complex64::from_polar(1.0, 0.4) * (((2 * k) as f64).sqrt() * 1.2).sin();
            assert_abs_diff_eq!((f[(i, j)] - expect).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn second_family_constant_on_diagonals() {
        let mut rng = sample_rng(6, 0);
        let rho = random_parity_locked_density(&mut rng, 2, 6, 10).unwrap();
        let val = |p1: f64, p2: f64| trace_product(&povm_ground(1.0, 1.3, p1, p2, 10).family(PovmFamily::Second), rho.matrix()).re;
        let a = val(0.3, 0.1);
        assert_abs_diff_eq!(a, val(1.3, 1.1), epsilon = 1e-13);
        assert_abs_diff_eq!(a, val(4.0, 3.8), epsilon = 1e-13);
    }

    #[test]
    fn spectrum_dft_matches_analytic() {
        let mut rng = sample_rng(7, 0);
        let rho = random_parity_locked_density(&mut rng, 2, 7, 12).unwrap();
        let s = scan_fringe(&rho, &VerificationSpec::two_pulse(1.1, 0.9, 32)).unwrap();
        let a = fourier_spectrum(&s).unwrap();
        let b = analytic_spectrum(&rho, 1.1, 0.9);
        for h in READABLE {
            assert_abs_diff_eq!((a.coefficient(h) - b.coefficient(h)).norm(), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(a.dc, b.dc, epsilon = 1e-12);
        assert_abs_diff_eq!(a.dc, s.mean(), epsilon = 1e-12);
        assert!(a.outside < 1e-12);
    }

    #[test]
    fn aliasing_detected() {
        let rho = JointState::new_ground(4).unwrap().to_density();
        let s = scan_fringe(&rho, &VerificationSpec::two_pulse(1.0, 1.0, 8)).unwrap();
        assert!(matches!(fourier_spectrum(&s), Err(Error::Aliasing { order: 2, .. })));
        assert!(fourier_spectrum_of(&s, &[(1, 0), (0, 1), (1, -1)]).is_ok());
    }

    #[test]
    fn overlap_metric_examples() {
        let (c, v) = overlap_metrics(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(c, 0.5);
        assert_abs_diff_eq!(v, 0.8);
        let (c, v) = overlap_metrics(Complex64::new(0.3, 0.4), Complex64::new(0.0, 0.5)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c, 0.25, epsilon = 1e-15);
        assert_eq!(overlap_metrics(Complex64::new(0.3, 0.0), ZERO).unwrap(), (0.0, 0.0));
        assert!(overlap_metrics(ZERO, ZERO).is_err());
    }

    #[test]
    fn n1_blue_closed_form() {
        let (t1, tb, pp) = (1.0, 1.4, 0.7);
        let s = crate::preparation::prepare(&build_sequence(&[pp], &[t1]).unwrap(), 8).unwrap();
        let spec = VerificationSpec::single_pulse(tb, 16).with_order(PulseOrder::BlueRed);
        let v = Verifier::new(&spec, 8).unwrap();
        for &pv in &spec.grid1 {
            let pg = measure_with(&s, &v, pv, 0.0).unwrap();
            let expect = 0.5 * (1.0 + t1.cos() * tb.cos() - t1.sin() * tb.sin() * (pp - pv).cos());
            assert_abs_diff_eq!(pg, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn offdiag_examples() {
        let k = 1.1;
        for n in 0..6 {
            let v = offdiag_contribution(OffDiagTerm::e_g(n, n + 1), VerificationMode::SinglePulse, k, 0.0, 0.0);
            assert_abs_diff_eq!(v.norm(), 0.5 * (k * ((n + 1) as f64).sqrt()).sin().abs(), epsilon = 1e-14);
            for m in 0..9 {
                let d = n.abs_diff(m);
                if d != 1 && d != 3 {
                    for mode in [VerificationMode::SinglePulse, VerificationMode::TwoPulse] {
                        let v = offdiag_contribution(OffDiagTerm::e_g(n, m), mode, k, 0.3, 0.2);
                        assert_eq!(v, ZERO);
                    }
                }
            }
        }
    }

    #[test]
    fn offdiag_sum_is_trace() {
        let mut rng = sample_rng(8, 0);
        let rho = random_parity_locked_density(&mut rng, 2, 5, 9).unwrap();
        let direct = measure_pg(&rho, 0.8, 0.8, 0.0, 0.0).unwrap();
        let mut acc = ZERO;
        for i in 0..rho.dim() {
            for j in 0..rho.dim() {
                let q = |x: usize| if x.is_multiple_of(2) { Qubit::G } else { Qubit::E };
                let t = OffDiagTerm {
                    row: q(i),
                    n: i / 2,
                    col: q(j),
                    m: j / 2,
                };
                acc += rho.matrix()[(i, j)] * offdiag_contribution(t, VerificationMode::TwoPulse, 0.8, 0.0, 0.0);
            }
        }
        assert_abs_diff_eq!(acc.re, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(acc.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_json_round_trip() {
        let mut rng = sample_rng(9, 0);
        let rho = random_parity_locked_density(&mut rng, 1, 5, 9).unwrap();
        let s = analytic_spectrum(&rho, 1.0, 1.0);
        let j = s.to_json();
        assert!(j.contains("\"A\"") && j.contains("\"2,-1\""));
        let back: CoherenceSpectrum = serde_json::from_str(&j).unwrap();
        for h in READABLE {
            assert_abs_diff_eq!((back.coefficient(h) - s.coefficient(h)).norm(), 0.0, epsilon = 1e-15);
        }
        assert_eq!(predicted_max(&CoherenceSpectrum { dc: 0.5, coeffs: BTreeMap::new(), outside: 0.0 }), 0.0);
    }

    #[test]
    fn grid_validation() {
        let mut s = VerificationSpec::default();
        s.grid1 = vec![0.0, 0.0];
        assert!(s.validate().is_err());
        let mut s = VerificationSpec::single_pulse(1.0, 8);
        s.t2 = 1.0;
        assert!(s.validate().is_err());
    }
}
