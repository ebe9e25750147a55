//! Harmonic functions on `Ω_x` with prescribed boundary data.
//!
//! `h0` is 1 at `q0` and 0 on `S(x)`; `h1` vanishes at `q0` and equals `+1`
//! on the left half of `S(x)` and `-1` on the right half; `h_ω` is a scaled
//! copy of `h1` for a shifted sequence placed in the cell `F~_ω`. Boundary
//! data on `S(x)` is expanded in the Haar basis `ψ_ω`, which takes the values
//! `±2^{|ω|/2}` on the two halves of the piece `S_ω(x)`.
//!
//! A function on `Ω_x` is sampled on the truncated domain `Ω^(k)`, the union of
//! the cells above depth `x_[k]`, whose boundary is `q0` together with the
//! `2^k` points `z_ω = F~_ω q0`, `|ω| = k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicSequence, Word};
use crate::error::{GasketError, Result};
use crate::mesh::{fill_harmonic, Cell, DomainMask, GasketMesh, MeshFunction};
use crate::ratios::RatioTable;

const FIVE_THIRDS: f64 = 5.0 / 3.0;

/// `ψ_η` evaluated on the piece `S_ω(x)` with `|ω| > |η|`.
pub fn haar_value(eta: &Word, omega: &Word) -> f64 {
    if omega.len() <= eta.len() || !eta.is_prefix_of(omega) {
        return 0.0;
    }
    let s = 2f64.powf(eta.len() as f64 / 2.0);
    if omega.letters()[eta.len()] == 1 {
        s
    } else {
        -s
    }
}

/// Boundary data `a` at `q0`, mean `b` over `S(x)` and Haar coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HaarSpectrum {
    pub a: f64,
    pub b: f64,
    pub coeffs: BTreeMap<Word, f64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    word: String,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    a: f64,
    b: f64,
    #[serde(default)]
    coeffs: Vec<CoeffJson>,
}

impl Serialize for HaarSpectrum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumJson {
            a: self.a,
            b: self.b,
            coeffs: self.coeffs.iter().map(|(w, &c)| CoeffJson { word: w.to_string(), c }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HaarSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SpectrumJson::deserialize(d)?;
        let mut coeffs = BTreeMap::new();
        for cj in j.coeffs {
            let w: Word = cj.word.parse().map_err(serde::de::Error::custom)?;
            *coeffs.entry(w).or_insert(0.0) += cj.c;
        }
        Ok(HaarSpectrum { a: j.a, b: j.b, coeffs })
    }
}

impl HaarSpectrum {
    pub fn constant(c: f64) -> Self {
        Self { a: c, b: c, coeffs: BTreeMap::new() }
    }

    pub fn with_coeff(mut self, w: Word, c: f64) -> Self {
        self.coeffs.insert(w, c);
        self
    }

    /// Length of the longest word carrying a coefficient, plus one.
    pub fn resolution(&self) -> usize {
        self.coeffs.keys().map(|w| w.len() + 1).max().unwrap_or(0)
    }

    /// Boundary values on the pieces `S_ω(x)`, `|ω| = m`, in word-index order.
    pub fn boundary_values(&self, m: usize) -> Result<Vec<f64>> {
        if self.resolution() > m {
            return Err(GasketError::WordTooDeep { len: self.resolution() - 1, depth: m });
        }
        let mut vals = vec![self.b; 1 << m];
        for (eta, &c) in &self.coeffs {
            let l = eta.len();
            let base = eta.index() << (m - l);
            let half = 1usize << (m - l - 1);
            let s = c * 2f64.powf(l as f64 / 2.0);
            for v in &mut vals[base..base + half] {
                *v += s;
            }
            for v in &mut vals[base + half..base + 2 * half] {
                *v -= s;
            }
        }
        Ok(vals)
    }

    /// Projection of piecewise-constant data on the `2^m` pieces of depth `m`
    /// onto the constant and all `ψ_η` with `|η| < m`.
    pub fn project(a: f64, values: &[f64], m: usize) -> Result<Self> {
        if values.len() != 1 << m {
            return Err(GasketError::InvalidParameter(format!(
                "{} values for 2^{m} pieces",
                values.len()
            )));
        }
        let w = 0.5f64.powi(m as i32);
        // sums[l][i]: sum of values over the pieces extending the word with index i of length l
        let mut sums: Vec<Vec<f64>> = vec![values.to_vec()];
        for _ in 0..m {
            let prev = sums.last().unwrap();
            sums.push(prev.chunks(2).map(|p| p[0] + p[1]).collect());
        }
        sums.reverse();
        let mut coeffs = BTreeMap::new();
        for (l, level) in sums.iter().enumerate().take(m) {
            let children = &sums[l + 1];
            let s = 2f64.powf(l as f64 / 2.0) * w;
            for i in 0..level.len() {
                coeffs.insert(Word::from_index(i, l), s * (children[2 * i] - children[2 * i + 1]));
            }
        }
        Ok(Self { a, b: w * sums[0][0], coeffs })
    }

    /// Removes coefficients with magnitude at most `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.coeffs.retain(|_, c| c.abs() > tol);
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GasketError::Parse(e.to_string()))
    }
}

/// Vertices `z_ω`, `|ω| = m`, in word-index order.
pub fn cut_vertices(mesh: &GasketMesh, seq: &DyadicSequence, m: usize) -> Result<Vec<usize>> {
    if m > seq.depth() {
        return Err(GasketError::WordTooDeep { len: m, depth: seq.depth() });
    }
    if m > 0 && mesh.level() < seq.n(m) {
        return Err(GasketError::LevelTooSmall { needed: seq.n(m), have: mesh.level() });
    }
    Word::all_of_length(m)
        .iter()
        .map(|w| {
            let cell = seq.tilde_f(w)?.cell();
            mesh.corner(cell, 0).ok_or_else(|| GasketError::InvalidParameter("cut vertex missing".into()))
        })
        .collect()
}

/// Closed-form energies, with a bound on the part of the series beyond the
/// truncation depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Energies of the basis functions.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub exact_energy: f64,
    pub estimate: f64,
    pub l2_estimate: f64,
}

/// Basis construction for one sequence, with its ratio table.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    seq: DyadicSequence,
    table: RatioTable,
}

impl HarmonicBasis {
    pub fn new(seq: &DyadicSequence) -> Result<Self> {
        Ok(Self { seq: seq.clone(), table: RatioTable::compute(seq)? })
    }

    pub fn seq(&self) -> &DyadicSequence {
        &self.seq
    }

    pub fn table(&self) -> &RatioTable {
        &self.table
    }

    fn depth(&self) -> usize {
        self.seq.depth()
    }

    fn m0(&self, j: usize) -> f64 {
        self.table.m0(j)
    }

    fn blank(&self, mesh: &GasketMesh, k: usize) -> Result<(MeshFunction, DomainMask)> {
        if k == 0 || k > self.depth() {
            return Err(GasketError::SequenceTooShort { needed: k.max(1), have: self.depth() });
        }
        let mask = DomainMask::omega(mesh, &self.seq, k)?;
        let mut f = MeshFunction::undefined(mesh);
        for v in 0..mesh.num_vertices() {
            if mask.contains_vertex(v) {
                f.values[v] = 0.0;
            }
        }
        Ok((f, mask))
    }

    /// Writes `α + β h0^{y_j}` on the copy of `Ω_{y_j}` inside `cell`, down to
    /// the domain depth `k`.
    pub(crate) fn fill_h0_affine(&self, mesh: &GasketMesh, cell: Cell, j: usize, k: usize, alpha: f64, beta: f64, out: &mut [f64]) {
        let g = self.seq.gap(j + 1).expect("within depth") as usize;
        let m0 = self.m0(j);
        let mut top = cell;
        for _ in 0..g {
            top = top.child(0);
        }
        let corner = alpha + beta * m0;
        fill_harmonic(mesh, top, [alpha + beta, corner, corner], out);
        if j + 1 < k {
            let mut up = cell;
            for _ in 0..g - 1 {
                up = up.child(0);
            }
            for i in [1, 2] {
                self.fill_h0_affine(mesh, up.child(i), j + 1, k, alpha, beta * m0, out);
            }
        }
    }

    /// Writes `t h1^{y_j}` on the copy of `Ω_{y_j}` inside `cell`.
    fn fill_h1(&self, mesh: &GasketMesh, cell: Cell, j: usize, k: usize, t: f64, out: &mut [f64]) {
        let g = self.seq.gap(j + 1).expect("within depth") as usize;
        let d = self.table.triple(j).difference();
        let mut up = cell;
        for _ in 0..g - 1 {
            up = up.child(0);
        }
        fill_harmonic(mesh, up.child(0), [0.0, t * d, -t * d], out);
        if j + 1 < k {
            self.fill_h0_affine(mesh, up.child(1), j + 1, k, t, t * (d - 1.0), out);
            self.fill_h0_affine(mesh, up.child(2), j + 1, k, -t, -t * (d - 1.0), out);
        }
    }

    /// `h0` on `Ω^(k)`, undefined outside.
    pub fn h0_on(&self, mesh: &GasketMesh, k: usize) -> Result<MeshFunction> {
        let (mut f, _) = self.blank(mesh, k)?;
        self.fill_h0_affine(mesh, Cell::ROOT, 0, k, 0.0, 1.0, &mut f.values);
        Ok(f)
    }

    pub fn h1_on(&self, mesh: &GasketMesh, k: usize) -> Result<MeshFunction> {
        self.h_omega_on(mesh, &Word::empty(), k)
    }

    /// `h_ω = 2^{m/2} h1^{y_m} ∘ F~_ω^{-1}` on `F~_ω`, zero elsewhere on `Ω^(k)`.
    pub fn h_omega_on(&self, mesh: &GasketMesh, word: &Word, k: usize) -> Result<MeshFunction> {
        let m = word.len();
        if m >= k {
            return Err(GasketError::WordTooDeep { len: m, depth: k.saturating_sub(1) });
        }
        let (mut f, _) = self.blank(mesh, k)?;
        let cell = self.seq.tilde_f(word)?.cell();
        self.fill_h1(mesh, cell, m, k, 2f64.powf(m as f64 / 2.0), &mut f.values);
        Ok(f)
    }

    /// `a h0 + b (1 - h0) + sum c_ω h_ω` on `Ω^(k)`.
    pub fn synthesize_on(&self, mesh: &GasketMesh, spectrum: &HaarSpectrum, k: usize) -> Result<MeshFunction> {
        if spectrum.resolution() > k {
            return Err(GasketError::WordTooDeep { len: spectrum.resolution() - 1, depth: k });
        }
        let (mut f, _) = self.blank(mesh, k)?;
        self.fill_h0_affine(mesh, Cell::ROOT, 0, k, spectrum.b, spectrum.a - spectrum.b, &mut f.values);
        let mut g = f.clone();
        for (w, &c) in &spectrum.coeffs {
            if c == 0.0 {
                continue;
            }
            for v in g.values.iter_mut().filter(|v| v.is_finite()) {
                *v = 0.0;
            }
            let cell = self.seq.tilde_f(w)?.cell();
            self.fill_h1(mesh, cell, w.len(), k, c * 2f64.powf(w.len() as f64 / 2.0), &mut g.values);
            f.axpy(1.0, &g);
        }
        Ok(f)
    }

    pub fn h0(&self, mesh: &GasketMesh) -> Result<MeshFunction> {
        self.h0_on(mesh, self.depth())
    }

    pub fn h1(&self, mesh: &GasketMesh) -> Result<MeshFunction> {
        self.h1_on(mesh, self.depth())
    }

    pub fn h_omega(&self, mesh: &GasketMesh, word: &Word) -> Result<MeshFunction> {
        self.h_omega_on(mesh, word, self.depth())
    }

    pub fn synthesize(&self, mesh: &GasketMesh, spectrum: &HaarSpectrum) -> Result<MeshFunction> {
        self.synthesize_on(mesh, spectrum, self.depth())
    }

    /// `E(h0^{y_j})`: `(1 - m0)^2 sum_i 2^{2-i} (5/3)^{2 n_1 - n_i}` for the
    /// shifted sequence.
    pub fn energy_h0_at(&self, j: usize) -> SeriesValue {
        let nj = self.seq.exponent(j).expect("j within depth");
        let n = |i: usize| self.seq.exponent(j + i).map(|v| v as i64 - nj as i64);
        let n1 = n(1).expect("depth > j");
        let term = |i: usize, ni: i64| 2f64.powi(2 - i as i32) * FIVE_THIRDS.powi((2 * n1 - ni) as i32);
        let scale = (1.0 - self.m0(j)).powi(2);
        let mut sum = 0.0;
        let mut i = 1;
        if self.seq.is_periodic() {
            while let Some(ni) = n(i) {
                let t = term(i, ni);
                sum += t;
                if t < 1e-18 * sum || i > 4000 {
                    break;
                }
                i += 1;
            }
            return SeriesValue { value: scale * sum, tail_bound: 0.0 };
        }
        let mut last = 0.0;
        while let Some(ni) = n(i) {
            last = term(i, ni);
            sum += last;
            i += 1;
        }
        // successive terms shrink by at least 3/10, so the tail of the untruncated series is below 3/7 of the last term
        SeriesValue { value: scale * sum, tail_bound: scale * last * 3.0 / 7.0 }
    }

    pub fn energy_h0(&self) -> SeriesValue {
        self.energy_h0_at(0)
    }

    /// `E(h1^{y_j})`.
    pub fn energy_h1_at(&self, j: usize) -> SeriesValue {
        let n1 = self.seq.gap(j + 1).expect("within depth") as i32;
        let m0 = self.m0(j);
        let d = (1.0 - m0) / (2.0 * m0 + 1.0);
        let first = 6.0 * d * d * FIVE_THIRDS.powi(n1);
        if m0 == 0.0 || j + 1 >= self.depth() && !self.seq.is_periodic() {
            return SeriesValue { value: first, tail_bound: 0.0 };
        }
        let e0 = self.energy_h0_at(j + 1);
        let c = 2.0 * (3.0 * m0 / (2.0 * m0 + 1.0)).powi(2) * FIVE_THIRDS.powi(n1);
        SeriesValue { value: first + c * e0.value, tail_bound: c * e0.tail_bound }
    }

    pub fn energy_h1(&self) -> SeriesValue {
        self.energy_h1_at(0)
    }

    /// `E(h_ω) = 2^m (5/3)^{n_m} E(h1^{y_m})`.
    pub fn energy_h_omega(&self, word: &Word) -> Result<SeriesValue> {
        let m = word.len();
        if m >= self.depth() {
            return Err(GasketError::WordTooDeep { len: m, depth: self.depth() - 1 });
        }
        let s = 2f64.powi(m as i32) * FIVE_THIRDS.powi(self.seq.n(m) as i32);
        let e = self.energy_h1_at(m);
        Ok(SeriesValue { value: s * e.value, tail_bound: s * e.tail_bound })
    }

    /// Energy of the harmonic function with the given spectrum, with the two
    /// comparable sums `(5/3)^{n1}(a-b)^2 + sum 2^m (5/3)^{n_{m+1}} c^2` and
    /// `(1/3)^{n1}(a^2+b^2) + sum 2^m (1/3)^{n_{m+1}} c^2`.
    pub fn energy_report(&self, spectrum: &HaarSpectrum) -> Result<EnergyReport> {
        let ab = spectrum.a - spectrum.b;
        let n1 = self.seq.n(1) as i32;
        let mut exact = ab * ab * self.energy_h0().value;
        let mut estimate = FIVE_THIRDS.powi(n1) * ab * ab;
        let mut l2 = (1.0f64 / 3.0).powi(n1) * (spectrum.a.powi(2) + spectrum.b.powi(2));
        for (w, &c) in &spectrum.coeffs {
            let m = w.len();
            exact += c * c * self.energy_h_omega(w)?.value;
            let nm1 = self.seq.n(m + 1) as i32;
            estimate += 2f64.powi(m as i32) * FIVE_THIRDS.powi(nm1) * c * c;
            l2 += 2f64.powi(m as i32) * (1.0f64 / 3.0).powi(nm1) * c * c;
        }
        Ok(EnergyReport { exact_energy: exact, estimate, l2_estimate: l2 })
    }
}

pub fn eval_h0(seq: &DyadicSequence, mesh: &GasketMesh) -> Result<MeshFunction> {
    HarmonicBasis::new(seq)?.h0(mesh)
}

pub fn eval_h1(seq: &DyadicSequence, mesh: &GasketMesh) -> Result<MeshFunction> {
    HarmonicBasis::new(seq)?.h1(mesh)
}

pub fn eval_h_omega(seq: &DyadicSequence, word: &Word, mesh: &GasketMesh) -> Result<MeshFunction> {
    HarmonicBasis::new(seq)?.h_omega(mesh, word)
}

pub fn synthesize(seq: &DyadicSequence, spectrum: &HaarSpectrum, mesh: &GasketMesh) -> Result<MeshFunction> {
    HarmonicBasis::new(seq)?.synthesize(mesh, spectrum)
}

pub fn energy_report(seq: &DyadicSequence, spectrum: &HaarSpectrum) -> Result<EnergyReport> {
    HarmonicBasis::new(seq)?.energy_report(spectrum)
}
