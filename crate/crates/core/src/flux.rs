//! Normal derivatives on `S(x)` and the Dirichlet-to-Neumann map.
//!
//! The normal derivative of a harmonic function with Haar data is again a
//! Haar series: the constant part comes from `h0`, and each `ψ_ω` is scaled by
//! the multiplier of its length. Numerically, the flux through the piece
//! below `z_ω = F~_ω q0` equals minus the inward derivative at `z_ω` of the
//! cell `F~_ω`, which is what [`finite_difference_flux`] samples.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dyadic::{DyadicSequence, Word};
use crate::error::{GasketError, Result};
use crate::harmonics::{cut_vertices, HaarSpectrum, HarmonicBasis};
use crate::mesh::{graph_energy_pair, renormalization, DomainMask, GasketMesh, MeshFunction};
use crate::ratios::dtn_multiplier_with;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryFlux {
    pub constant_part: f64,
    pub dn_at_q0: f64,
    #[serde(serialize_with = "serialize_coeffs")]
    pub coeffs: BTreeMap<Word, f64>,
}

fn serialize_coeffs<S: serde::Serializer>(c: &BTreeMap<Word, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(c.len()))?;
    for (w, v) in c {
        seq.serialize_element(&serde_json::json!({ "word": w.to_string(), "c": v }))?;
    }
    seq.end()
}

impl BoundaryFlux {
    /// Piecewise-constant flux density on the `2^m` pieces of depth `m`.
    pub fn density(&self, m: usize) -> Result<Vec<f64>> {
        HaarSpectrum { a: 0.0, b: self.constant_part, coeffs: self.coeffs.clone() }.boundary_values(m)
    }

    /// Squared `L^2(μ)` norm on `S(x)`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.constant_part.powi(2) + self.coeffs.values().map(|c| c * c).sum::<f64>()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }
}

/// Closed-form flux of the harmonic function with the given spectrum.
pub fn normal_derivative(seq: &DyadicSequence, spectrum: &HaarSpectrum) -> Result<BoundaryFlux> {
    let basis = HarmonicBasis::new(seq)?;
    normal_derivative_with(&basis, spectrum)
}

pub fn normal_derivative_with(basis: &HarmonicBasis, spectrum: &HaarSpectrum) -> Result<BoundaryFlux> {
    let seq = basis.seq();
    let s = 2.0 * (5.0f64 / 3.0).powi(seq.n(1) as i32) * (1.0 - basis.table().m0(0));
    let mut coeffs = BTreeMap::new();
    for (w, &c) in &spectrum.coeffs {
        coeffs.insert(w.clone(), dtn_multiplier_with(seq, basis.table(), w.len())? * c);
    }
    Ok(BoundaryFlux {
        constant_part: (spectrum.b - spectrum.a) * s,
        dn_at_q0: (spectrum.a - spectrum.b) * s,
        coeffs,
    })
}

/// Flux density on the pieces `S_ω(x)`, `|ω| = m`, from the inward stencil
/// `(5/3)^L (2u(z) - u(z') - u(z''))` of the level-`L` cell below each `z_ω`.
pub fn finite_difference_flux(mesh: &GasketMesh, f: &MeshFunction, seq: &DyadicSequence, m: usize) -> Result<Vec<f64>> {
    f.check_level(mesh)?;
    if m >= seq.depth() {
        return Err(GasketError::WordTooDeep { len: m, depth: seq.depth() - 1 });
    }
    let need = seq.n(m + 1);
    if mesh.level() < need {
        return Err(GasketError::LevelTooSmall { needed: need, have: mesh.level() });
    }
    let scale = 2f64.powi(m as i32) * renormalization(mesh.level());
    Word::all_of_length(m)
        .iter()
        .map(|w| {
            let mut cell = seq.tilde_f(w)?.cell();
            while cell.level < mesh.level() {
                cell = cell.child(0);
            }
            let [p, q, r] = mesh.corners(cell).expect("cell inside mesh");
            let d = 2.0 * f.get(p) - f.get(q) - f.get(r);
            if !d.is_finite() {
                return Err(GasketError::InvalidParameter(format!("function undefined near z_{w}")));
            }
            Ok(-scale * d)
        })
        .collect()
}

/// Outward derivative at `q0` from the level-`L` stencil.
pub fn dn_q0_numeric(mesh: &GasketMesh, f: &MeshFunction) -> f64 {
    let q0 = mesh.q0();
    let nb = mesh.neighbors(q0);
    renormalization(mesh.level()) * nb.iter().map(|&q| f.get(q0) - f.get(q)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussGreen {
    pub energy: f64,
    pub boundary_term: f64,
    pub residual: f64,
}

/// Compares `E(h, v)` on `Ω^(K)` at the mesh level with
/// `v(q0) ∂_n h(q0) + ∫_{S} v ∂_n h dμ`, the integral being the sum over the
/// `2^K` pieces of depth `K`.
pub fn gauss_green_check(
    mesh: &GasketMesh,
    seq: &DyadicSequence,
    spectrum: &HaarSpectrum,
    v: &MeshFunction,
) -> Result<GaussGreen> {
    let k = seq.depth();
    let basis = HarmonicBasis::new(seq)?;
    let h = basis.synthesize(mesh, spectrum)?;
    let mask = DomainMask::omega(mesh, seq, k)?;
    let energy = graph_energy_pair(mesh, &h, v, Some(&mask))?;
    let flux = normal_derivative_with(&basis, spectrum)?;
    let dens = flux.density(k)?;
    let z = cut_vertices(mesh, seq, k)?;
    let w = 0.5f64.powi(k as i32);
    let boundary_term =
        v.get(mesh.q0()) * flux.dn_at_q0 + z.iter().zip(&dens).map(|(&p, d)| w * v.get(p) * d).sum::<f64>();
    Ok(GaussGreen { energy, boundary_term, residual: (energy - boundary_term).abs() })
}

/// `sum 2^{2m} (5/3)^{2 n_{m+1}} c_ω^2`, which controls the `L^2` norm of the
/// flux; the flag reports whether the sum is finite at this truncation.
pub fn flux_norm_sum(seq: &DyadicSequence, spectrum: &HaarSpectrum) -> Result<(f64, bool)> {
    let mut sum = 0.0;
    for (w, c) in &spectrum.coeffs {
        let m = w.len();
        if m >= seq.depth() {
            return Err(GasketError::WordTooDeep { len: m, depth: seq.depth() - 1 });
        }
        sum += 4f64.powi(m as i32) * (5.0f64 / 3.0).powi(2 * seq.n(m + 1) as i32) * c * c;
    }
    Ok((sum, sum.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn h0_flux_closed_form() {
        let seq = DyadicSequence::from_exponents(&[2, 3, 5, 6]).unwrap();
        let f = normal_derivative(&seq, &HaarSpectrum { a: 1.0, b: 0.0, ..Default::default() }).unwrap();
        let m0 = crate::ratios::m0(&seq).unwrap().0;
        assert_abs_diff_eq!(f.constant_part, -2.0 * (25.0 / 9.0) * (1.0 - m0), epsilon = 1e-12);
        assert_abs_diff_eq!(f.dn_at_q0, -f.constant_part, epsilon = 1e-15);
    }

    #[test]
    fn constant_spectrum_has_no_flux() {
        let seq = DyadicSequence::from_value(1.0, 6).unwrap();
        let f = normal_derivative(&seq, &HaarSpectrum::constant(3.0)).unwrap();
        assert_eq!(f.l2_norm_sq(), 0.0);
        assert_eq!(f.dn_at_q0, 0.0);
    }

    #[test]
    fn golden_multiplier_flux() {
        let seq = DyadicSequence::from_value(1.0, 8).unwrap();
        let s = HaarSpectrum::default().with_coeff(Word::empty(), 1.0);
        let f = normal_derivative(&seq, &s).unwrap();
        assert_abs_diff_eq!(f.coeffs[&Word::empty()], 35.0 / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(flux_norm_sum(&seq, &s).unwrap().0, 25.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn h0_flux_is_level_independent() {
        let seq = DyadicSequence::from_exponents(&[1, 3, 4, 6]).unwrap();
        let mesh = GasketMesh::build(7).unwrap();
        let h = HarmonicBasis::new(&seq).unwrap().h0(&mesh).unwrap();
        let expected = normal_derivative(&seq, &HaarSpectrum { a: 1.0, b: 0.0, ..Default::default() })
            .unwrap()
            .constant_part;
        for m in 0..4 {
            for d in finite_difference_flux(&mesh, &h, &seq, m).unwrap() {
                assert_abs_diff_eq!(d, expected, epsilon = 1e-9 * expected.abs());
            }
        }
    }

    #[test]
    fn gauss_green_with_constant_v() {
        let seq = DyadicSequence::from_exponents(&[1, 2, 4]).unwrap();
        let mesh = GasketMesh::build(6).unwrap();
        let s = HaarSpectrum { a: 0.4, b: -0.2, ..Default::default() }.with_coeff("1".parse().unwrap(), 0.7);
        let v = MeshFunction::constant(&mesh, 2.0);
        let g = gauss_green_check(&mesh, &seq, &s, &v).unwrap();
        assert!(g.energy.abs() < 1e-12);
        assert!(g.residual < 1e-8);
    }

    #[test]
    fn flux_norm_within_fixed_bracket() {
        use rand::{Rng, SeedableRng};
        let seq = DyadicSequence::from_exponents(&[1, 2, 4, 5, 7, 9]).unwrap();
        let table = crate::ratios::RatioTable::compute(&seq).unwrap();
        let d: Vec<f64> = (0..seq.depth()).map(|j| table.triple(j).difference().powi(2) * 36.0).collect();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut s = HaarSpectrum::constant(rng.gen_range(-1.0..1.0));
            for _ in 0..4 {
                let m = rng.gen_range(0..seq.depth());
                s = s.with_coeff(Word::from_index(rng.gen_range(0..1 << m), m), rng.gen_range(-1.0..1.0));
            }
            let ratio = normal_derivative(&seq, &s).unwrap().l2_norm_sq() / flux_norm_sum(&seq, &s).unwrap().0;
            assert!(ratio >= lo * (1.0 - 1e-12) && ratio <= hi * (1.0 + 1e-12), "{ratio} not in [{lo}, {hi}]");
        }
        assert_eq!(flux_norm_sum(&seq, &HaarSpectrum::default()).unwrap().0, 0.0);
    }
}
