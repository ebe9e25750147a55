//! Gluing across `S(x)`, traces on `S(x)`, and extension of harmonic
//! functions from `Ω_x` to the whole gasket.
//!
//! Extensions are built from the structure of the cut. Below `F~_ω` the cut
//! runs through the cells `E_η = F~_ω F_0^{g-1} F_{η_1} ... F_{η_r}` where `r`
//! counts the consecutive exponents starting at `n_{m+1}`; the next gap is at
//! least 2, so inside each `E_η` the cut stays within the top child `E_η F_0`.
//! The extension is the constant trace value on the part of `E_η F_0` below
//! the cut, harmonic on `E_η F_1` and `E_η F_2` with that value at their top
//! corner and 0 at the others, and 0 everywhere else below the cut.

use serde::Serialize;

use crate::dyadic::{DyadicSequence, Word};
use crate::error::{GasketError, Result};
use crate::harmonics::{cut_vertices, HaarSpectrum, HarmonicBasis};
use crate::mesh::{
    cut_units, fill_harmonic, graph_energy, graph_energy_pair, laplacian_at, Cell, DomainMask, GasketMesh,
    MeshFunction,
};
use crate::solver::{solve_constrained, SolverKind};

pub const TRACE_TOLERANCE: f64 = 1e-10;

/// Level-`n_m` energies split into cells above the line `x_[m]`, the strip
/// cells `F~_ω` (`|ω| = m`) and the cells below the strip.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StripEnergy {
    pub m: usize,
    pub level: u32,
    pub above: f64,
    pub strip: f64,
    pub below: f64,
}

#[derive(Debug, Clone)]
pub struct GluedFunction {
    pub combined: MeshFunction,
    pub energy_total: f64,
    pub energy_upper: f64,
    pub energy_lower: f64,
    pub strips: Vec<StripEnergy>,
}

/// Joins `upper` on `Ω^(K)` with `lower` on the cells below it.
pub fn glue(mesh: &GasketMesh, upper: &MeshFunction, lower: &MeshFunction, seq: &DyadicSequence) -> Result<GluedFunction> {
    upper.check_level(mesh)?;
    lower.check_level(mesh)?;
    let k = seq.depth();
    let up = DomainMask::omega(mesh, seq, k)?;
    let down = DomainMask::below(mesh, seq, k)?;
    let z = cut_vertices(mesh, seq, k)?;
    let mismatch = z.iter().map(|&p| (upper.get(p) - lower.get(p)).abs()).fold(0.0, f64::max);
    if mismatch.is_nan() || mismatch > TRACE_TOLERANCE {
        return Err(GasketError::TraceMismatch(mismatch));
    }
    let values = (0..mesh.num_vertices())
        .map(|v| if up.contains_vertex(v) { upper.get(v) } else { lower.get(v) })
        .collect();
    let combined = MeshFunction::from_values(mesh, values)?;
    let energy_upper = graph_energy(mesh, upper, Some(&up))?;
    let energy_lower = graph_energy(mesh, lower, Some(&down))?;
    let energy_total = graph_energy(mesh, &combined, Some(&DomainMask::full(mesh)))?;
    let strips = (1..=k).map(|m| strip_energy(mesh, &combined, seq, m)).collect::<Result<_>>()?;
    Ok(GluedFunction { combined, energy_total, energy_upper, energy_lower, strips })
}

/// Energy partition of `f` sampled at level `n_m`.
pub fn strip_energy(mesh: &GasketMesh, f: &MeshFunction, seq: &DyadicSequence, m: usize) -> Result<StripEnergy> {
    let level = seq.n(m);
    let coarse = GasketMesh::shared(level)?;
    let g = f.restrict_to(mesh, &coarse)?;
    let cut = cut_units(&coarse, seq, m)?;
    let (mut above, mut strip, mut below) = (0.0, 0.0, 0.0);
    for ids in coarse.cells() {
        let v = ids.map(|p| g.get(p));
        let e: f64 = [(0, 1), (0, 2), (1, 2)].iter().map(|&(p, q)| (v[p] - v[q]).powi(2)).sum();
        let top = coarse.depth_units(ids[0]);
        match top.cmp(&cut) {
            std::cmp::Ordering::Less => above += e,
            std::cmp::Ordering::Equal => strip += e,
            std::cmp::Ordering::Greater => below += e,
        }
    }
    let s = crate::mesh::renormalization(level);
    Ok(StripEnergy { m, level, above: s * above, strip: s * strip, below: s * below })
}

/// Boundary data of `upper` read at `q0` and at the `2^m` points `z_ω`,
/// projected onto the constant and `ψ_η` with `|η| < m`.
pub fn trace(mesh: &GasketMesh, upper: &MeshFunction, seq: &DyadicSequence, m: usize) -> Result<HaarSpectrum> {
    upper.check_level(mesh)?;
    let z = cut_vertices(mesh, seq, m)?;
    let vals: Vec<f64> = z.iter().map(|&p| upper.get(p)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(GasketError::InvalidParameter("function undefined on the cut".into()));
    }
    HaarSpectrum::project(upper.get(mesh.q0()), &vals, m)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub spectrum: HaarSpectrum,
    /// Energy of `upper` over the cells where it is defined.
    pub energy: f64,
    /// `(5/3)^{n1}(a-b)^2 + sum 2^m (5/3)^{n_{m+1}} c^2` of the trace.
    pub estimate: f64,
    pub ratio: f64,
}

/// [`trace`] together with the comparison of its energy sum against `E(upper)`.
pub fn trace_report(mesh: &GasketMesh, upper: &MeshFunction, seq: &DyadicSequence, m: usize) -> Result<TraceReport> {
    let spectrum = trace(mesh, upper, seq, m)?;
    let estimate = HarmonicBasis::new(seq)?.energy_report(&spectrum)?.estimate;
    let energy = graph_energy(mesh, upper, None)?;
    let ratio = if energy > 0.0 { estimate / energy } else { 0.0 };
    Ok(TraceReport { spectrum, energy, estimate, ratio })
}

/// Which basis function to extend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisTarget {
    OneMinusH0,
    Omega(Word),
}

/// Extension of a basis function to the whole gasket; on `Ω^(K)` it agrees
/// with the basis function.
pub fn extend_basis(mesh: &GasketMesh, seq: &DyadicSequence, target: &BasisTarget) -> Result<MeshFunction> {
    let basis = HarmonicBasis::new(&seq.truncated())?;
    extend_basis_with(mesh, &basis, target)
}

fn require_nonconsecutive(seq: &DyadicSequence) -> Result<u32> {
    seq.nonconsecutive_bound().ok_or(GasketError::ConsecutiveRun)
}

fn extend_basis_with(mesh: &GasketMesh, basis: &HarmonicBasis, target: &BasisTarget) -> Result<MeshFunction> {
    let seq = basis.seq();
    require_nonconsecutive(seq)?;
    let k = seq.depth();
    let (word, upper) = match target {
        BasisTarget::OneMinusH0 => {
            let h0 = basis.h0(mesh)?;
            (Word::empty(), MeshFunction { level: h0.level, values: h0.values.iter().map(|v| 1.0 - v).collect() })
        }
        BasisTarget::Omega(w) => (w.clone(), basis.h_omega(mesh, w)?),
    };
    let m = word.len();
    if m >= k {
        return Err(GasketError::WordTooDeep { len: m, depth: k - 1 });
    }
    let mut out: Vec<f64> = upper.values.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
    let up = DomainMask::omega(mesh, seq, k)?;
    let r = seq.run_length_from(m);
    if m + r >= k {
        // the run reaches the truncation, so the blocks are not resolved
        return Err(GasketError::ConsecutiveRun);
    }
    let g = seq.gap(m + 1).expect("m < depth") as usize;
    let mut d = seq.tilde_f(&word)?.cell();
    for _ in 0..g - 1 {
        d = d.child(0);
    }
    let amp = 2f64.powf(m as f64 / 2.0);
    for eta in Word::all_of_length(r) {
        let v = match target {
            BasisTarget::OneMinusH0 => 1.0,
            BasisTarget::Omega(_) if eta.letters()[0] == 1 => amp,
            BasisTarget::Omega(_) => -amp,
        };
        let e = eta
            .letters().iter().fold(d, |c, &l| c.child(l));
        let top = e.child(0);
        for id in cell_vertices(mesh, top) {
            if !up.contains_vertex(id) {
                out[id] = v;
            }
        }
        fill_harmonic(mesh, e.child(1), [v, 0.0, 0.0], &mut out);
        fill_harmonic(mesh, e.child(2), [v, 0.0, 0.0], &mut out);
    }
    MeshFunction::from_values(mesh, out)
}

/// All vertex ids of `mesh` inside a cell.
fn cell_vertices(mesh: &GasketMesh, cell: Cell) -> Vec<usize> {
    let mut ids: Vec<usize> = cell.descendants(mesh.level()).flat_map(|c| mesh.cell_corners(c)).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// `2^m 2^{r+2} (5/3)^{n_{m+1} + r}`: energy added below the cut by
/// [`extend_basis`] for a word of length `m` (or `1 - h0` with `m = 0`).
pub fn added_energy_closed_form(seq: &DyadicSequence, m: usize) -> f64 {
    let r = seq.run_length_from(m);
    2f64.powi((m + r + 2) as i32) * (5.0f64 / 3.0).powi((seq.n(m + 1) as usize + r) as i32)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionReport {
    pub energy_upper: f64,
    pub energy_total: f64,
    pub ratio: f64,
    /// `(10/3)^N` for the nonconsecutive bound `N`.
    pub reference: f64,
}

/// `a + (b - a) T(1 - h0) + sum c_ω T(h_ω)` on the whole gasket.
pub fn extend(mesh: &GasketMesh, seq: &DyadicSequence, spectrum: &HaarSpectrum) -> Result<(MeshFunction, ExtensionReport)> {
    // periodic sequences are cut at K so the basis vanishes where the extension starts
    let seq = &seq.truncated();
    let n = require_nonconsecutive(seq)?;
    let basis = HarmonicBasis::new(seq)?;
    let mut f = MeshFunction::constant(mesh, spectrum.a);
    if spectrum.b != spectrum.a {
        f.axpy(spectrum.b - spectrum.a, &extend_basis_with(mesh, &basis, &BasisTarget::OneMinusH0)?);
    }
    for (w, &c) in &spectrum.coeffs {
        if c != 0.0 {
            f.axpy(c, &extend_basis_with(mesh, &basis, &BasisTarget::Omega(w.clone()))?);
        }
    }
    let up = DomainMask::omega(mesh, seq, seq.depth())?;
    let energy_upper = graph_energy(mesh, &f, Some(&up))?;
    let energy_total = graph_energy(mesh, &f, None)?;
    let ratio = if energy_upper > 0.0 { energy_total / energy_upper } else { 1.0 };
    Ok((f, ExtensionReport { energy_upper, energy_total, ratio, reference: (10.0f64 / 3.0).powi(n as i32) }))
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub n: u32,
    pub e_min: f64,
    pub e_upper: f64,
    /// `E_min(N+1) / E_min(N)` when the next row was computed.
    pub ratio: Option<f64>,
    pub laplacian_residual: f64,
}

/// Largest `N` accepted by [`obstruction_experiment`].
pub const OBSTRUCTION_MAX_N: u32 = 8;

/// Minimal energy of an extension of `h1` below the cut for `n_j = j`,
/// `j <= N`, by solving for the free values below the cut with natural
/// conditions at the bottom corners.
pub fn obstruction_point(n: u32) -> Result<GrowthRow> {
    if !(2..=OBSTRUCTION_MAX_N).contains(&n) {
        return Err(GasketError::InvalidParameter(format!("N must lie in 2..={OBSTRUCTION_MAX_N}, got {n}")));
    }
    let seq = DyadicSequence::from_exponents(&(1..=n).collect::<Vec<_>>())?;
    let mesh = GasketMesh::shared(n + 1)?;
    let h1 = HarmonicBasis::new(&seq)?.h1(&mesh)?;
    let up = DomainMask::omega(&mesh, &seq, n as usize)?;
    let fixed: Vec<Option<f64>> =
        (0..mesh.num_vertices()).map(|v| if up.contains_vertex(v) { Some(h1.get(v)) } else { None }).collect();
    let u = solve_constrained(&mesh, &DomainMask::full(&mesh), &fixed, None, SolverKind::Direct)?;
    let e_min = graph_energy(&mesh, &u, None)?;
    let e_upper = graph_energy(&mesh, &h1, Some(&up))?;
    // mean-value defect relative to the Laplacian scale at free interior vertices
    let scale = 1.5 * 5f64.powi(mesh.level() as i32);
    let laplacian_residual = (0..mesh.num_vertices())
        .filter(|&v| fixed[v].is_none() && !mesh.is_v0(v))
        .map(|v| (laplacian_at(&mesh, &u, v) / scale).abs())
        .fold(0.0, f64::max);
    Ok(GrowthRow { n, e_min, e_upper, ratio: None, laplacian_residual })
}

/// Growth of the minimal extension energy for `N` in the given range.
pub fn obstruction_experiment(ns: std::ops::RangeInclusive<u32>) -> Result<Vec<GrowthRow>> {
    use rayon::prelude::*;
    let mut rows: Vec<GrowthRow> = ns.collect::<Vec<_>>().into_par_iter().map(obstruction_point).collect::<Result<_>>()?;
    for i in 0..rows.len().saturating_sub(1) {
        rows[i].ratio = Some(rows[i + 1].e_min / rows[i].e_min);
    }
    Ok(rows)
}

pub fn growth_csv(rows: &[GrowthRow]) -> String {
    let mut s = String::from("N,E_min,ratio\n");
    for r in rows {
        let ratio = r.ratio.map_or(String::new(), |x| format!("{x:.12}"));
        s.push_str(&format!("{},{:.12},{}\n", r.n, r.e_min, ratio));
    }
    s
}

/// `E(u, v)` over the whole gasket.
pub fn cross_energy(mesh: &GasketMesh, u: &MeshFunction, v: &MeshFunction) -> Result<f64> {
    graph_energy_pair(mesh, u, v, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn odd(k: usize) -> DyadicSequence {
        DyadicSequence::from_exponents(&(0..k as u32).map(|i| 2 * i + 1).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn added_energy_for_n2() {
        let seq = DyadicSequence::from_exponents(&[1, 3, 5, 7]).unwrap();
        let mesh = GasketMesh::build(8).unwrap();
        let basis = HarmonicBasis::new(&seq).unwrap();
        let ext = extend_basis(&mesh, &seq, &BasisTarget::Omega(Word::empty())).unwrap();
        let up = DomainMask::omega(&mesh, &seq, 4).unwrap();
        let down = DomainMask::below(&mesh, &seq, 4).unwrap();
        let e_down = graph_energy(&mesh, &ext, Some(&down)).unwrap();
        assert_abs_diff_eq!(e_down, 8.0 * (25.0 / 9.0), epsilon = 1e-9);
        let h = basis.h1(&mesh).unwrap();
        for v in 0..mesh.num_vertices() {
            if up.contains_vertex(v) {
                assert_eq!(ext.get(v), h.get(v));
            }
        }
    }

    #[test]
    fn added_energy_one_minus_h0() {
        let seq = DyadicSequence::from_exponents(&[3, 5, 7]).unwrap();
        let mesh = GasketMesh::build(8).unwrap();
        let ext = extend_basis(&mesh, &seq, &BasisTarget::OneMinusH0).unwrap();
        let down = DomainMask::below(&mesh, &seq, 3).unwrap();
        let e = graph_energy(&mesh, &ext, Some(&down)).unwrap();
        assert_abs_diff_eq!(e, 8.0 * (5.0f64 / 3.0).powi(4), epsilon = 1e-8);
        assert_abs_diff_eq!(e, added_energy_closed_form(&seq, 0), epsilon = 1e-8);
    }

    #[test]
    fn trace_of_extension_is_identity() {
        let seq = odd(4);
        let mesh = GasketMesh::build(8).unwrap();
        let s = HaarSpectrum { a: 0.5, b: -0.25, ..Default::default() }
            .with_coeff(Word::empty(), 1.0)
            .with_coeff("21".parse().unwrap(), 0.5);
        let (f, rep) = extend(&mesh, &seq, &s).unwrap();
        assert!(rep.ratio >= 1.0);
        let t = trace(&mesh, &f, &seq, 4).unwrap().pruned(1e-12);
        assert_abs_diff_eq!(t.a, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(t.b, -0.25, epsilon = 1e-13);
        assert_eq!(t.coeffs.len(), 2);
    }

    #[test]
    fn consecutive_run_rejected() {
        let seq = DyadicSequence::from_exponents(&[1, 2, 3]).unwrap();
        let mesh = GasketMesh::build(4).unwrap();
        assert!(extend_basis(&mesh, &seq, &BasisTarget::OneMinusH0).is_err());
    }

    #[test]
    fn glue_constants() {
        let seq = odd(3);
        let mesh = GasketMesh::build(6).unwrap();
        let c = MeshFunction::constant(&mesh, 1.5);
        let g = glue(&mesh, &c, &c, &seq).unwrap();
        assert_eq!(g.energy_total, 0.0);
        assert!(g.strips.iter().all(|s| s.strip == 0.0));
        let other = MeshFunction::constant(&mesh, 2.0);
        assert!(matches!(glue(&mesh, &c, &other, &seq), Err(GasketError::TraceMismatch(_))));
    }

    #[test]
    fn strip_energy_decays_for_h0() {
        let seq = odd(5);
        let mesh = GasketMesh::build(9).unwrap();
        let h = HarmonicBasis::new(&seq).unwrap().h0(&mesh).unwrap();
        let g = glue(&mesh, &h, &MeshFunction::constant(&mesh, 0.0), &seq).unwrap();
        assert_abs_diff_eq!(g.energy_total, g.energy_upper + g.energy_lower, epsilon = 1e-12);
        assert!(g.strips.windows(2).all(|w| w[1].strip < w[0].strip));
        for s in &g.strips {
            assert_abs_diff_eq!(s.above + s.strip + s.below, strip_total(&mesh, &g.combined, s.level), epsilon = 1e-9);
        }
    }

    fn strip_total(mesh: &GasketMesh, f: &MeshFunction, level: u32) -> f64 {
        let coarse = GasketMesh::build(level).unwrap();
        graph_energy(&coarse, &f.restrict_to(mesh, &coarse).unwrap(), None).unwrap()
    }

    #[test]
    fn extended_basis_is_orthogonal() {
        let seq = odd(5);
        let mesh = GasketMesh::build(9).unwrap();
        let mut fs = vec![extend_basis(&mesh, &seq, &BasisTarget::OneMinusH0).unwrap()];
        for m in 0..3 {
            for w in Word::all_of_length(m) {
                fs.push(extend_basis(&mesh, &seq, &BasisTarget::Omega(w)).unwrap());
            }
        }
        for i in 0..fs.len() {
            let ei = cross_energy(&mesh, &fs[i], &fs[i]).unwrap();
            for j in 0..i {
                let ej = cross_energy(&mesh, &fs[j], &fs[j]).unwrap();
                let c = cross_energy(&mesh, &fs[i], &fs[j]).unwrap();
                assert!(c.abs() < 1e-8 * (ei * ej).sqrt(), "{i} {j} {c}");
            }
        }
    }

    #[test]
    fn growth_ratios() {
        let rows = obstruction_experiment(2..=4).unwrap();
        assert!(rows[0].e_min >= rows[0].e_upper);
        assert!(rows[1].ratio.unwrap() > 1.4 && rows[1].ratio.unwrap() < 2.0);
        assert!(rows[2].ratio.is_none());
        assert!(growth_csv(&rows).starts_with("N,E_min,ratio\n2,"));
    }

    #[test]
    fn trace_of_constant() {
        let seq = odd(3);
        let mesh = GasketMesh::build(6).unwrap();
        let r = trace_report(&mesh, &MeshFunction::constant(&mesh, 2.5), &seq, 3).unwrap();
        assert_eq!(r.spectrum.b, 2.5);
        assert!(r.spectrum.coeffs.values().all(|c| *c == 0.0));
    }

    #[test]
    fn obstruction_small() {
        let row = obstruction_point(2).unwrap();
        assert!(row.e_min >= row.e_upper);
        assert!(row.laplacian_residual < 1e-8);
    }
}
