//! Green's kernel of `Ω_x` with Dirichlet conditions on `{q0} ∪ S(x)`.
//!
//! The kernel is a sum of `g(z, z') φ_z(s) φ_{z'}(t)` over piecewise harmonic
//! splines grouped in blocks. A block is a cell `P` of level `k - 1`; for a
//! cell inside the domain its splines are the three level-`k` hats at the
//! midpoints of `P` with the standard weights. At `k = n_l` the cell
//! `D = F~_η F_0^{g-1}` (`|η| = l - 1`) meets the boundary; its two splines sit
//! at `z_{η1}`, `z_{η2}` and equal a scaled copy of `h0^{y_l}` on `F~_{ηj}`
//! and a hat on `F~~_{ηj} = D F_0`.
//!
//! Everything is evaluated on `Ω^(K)` with the sequence cut at `K`, where the
//! splines are exact at every mesh level.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{DyadicSequence, Word};
use crate::error::{GasketError, Result};
use crate::harmonics::HarmonicBasis;
use crate::mesh::{
    cut_units, fill_harmonic, graph_energy_pair, renormalization, Cell, DomainMask, GasketMesh, MeshFunction,
};

const THREE_FIFTHS: f64 = 0.6;

/// Standard weight for level-`k` vertices `z`, `z'` given as lattice
/// coordinates at level `k`: `(3/10)(3/5)^k` on the diagonal, `(1/10)(3/5)^k`
/// for distinct midpoints of one `(k-1)`-cell, else 0.
pub fn g_standard(z: (u32, u32), zp: (u32, u32), k: u32) -> f64 {
    let is_new = |p: (u32, u32)| p.0 % 2 == 1 || p.1 % 2 == 1;
    if k == 0 || !is_new(z) || !is_new(zp) {
        return 0.0;
    }
    let parent = |p: (u32, u32)| (p.0 / 2, p.1 / 2);
    if parent(z) != parent(zp) {
        return 0.0;
    }
    let scale = THREE_FIFTHS.powi(k as i32);
    if z == zp {
        0.3 * scale
    } else {
        0.1 * scale
    }
}

/// Diagonal and sibling weights at the boundary vertices `z_ω`, `|ω| = l`:
/// `(m0 + m0^2)/(2 m0 + 1) (3/5)^{n_l}` and `m0^2/(2 m0 + 1) (3/5)^{n_l}`
/// with `m0 = m0(y_{l-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryWeights {
    pub diag: f64,
    pub off: f64,
    pub m0: f64,
    pub level: u32,
}

impl BoundaryWeights {
    pub fn new(seq: &DyadicSequence, l: usize) -> Result<Self> {
        let basis = HarmonicBasis::new(seq)?;
        Self::with_basis(&basis, l)
    }

    fn with_basis(basis: &HarmonicBasis, l: usize) -> Result<Self> {
        let seq = basis.seq();
        if l == 0 || (l > seq.depth() && !seq.is_periodic()) {
            return Err(GasketError::WordTooDeep { len: l, depth: seq.depth() });
        }
        let m0 = basis.table().m0(l - 1);
        let level = seq.n(l);
        let s = THREE_FIFTHS.powi(level as i32) / (2.0 * m0 + 1.0);
        Ok(Self { diag: (m0 + m0 * m0) * s, off: m0 * m0 * s, m0, level })
    }

    /// `(5/3)^{n_l}((1+m0)/m0 · diag - off)` and the same with `diag` and
    /// `off` swapped; the weights invert the spline stencil when these are 1
    /// and 0.
    pub fn identities(&self) -> (f64, f64) {
        let s = renormalization(self.level);
        let r = (1.0 + self.m0) / self.m0;
        (s * (r * self.diag - self.off), s * (r * self.off - self.diag))
    }
}

/// Weight between two level-`k` vertices (lattice coordinates at level `k`)
/// for the domain cut at depth `K`.
pub fn g_domain(seq: &DyadicSequence, z: (u32, u32), zp: (u32, u32), k: u32) -> Result<f64> {
    let seq = seq.truncated();
    let depth = seq.depth();
    for l in 1..depth {
        if seq.n(l) != k {
            continue;
        }
        let w = BoundaryWeights::new(&seq, l)?;
        for eta in Word::all_of_length(l - 1) {
            let d = d_cell(&seq, &eta, l)?;
            let pts = [d.child(1).corner_at(0, k), d.child(2).corner_at(0, k)];
            if pts.contains(&z) && pts.contains(&zp) {
                return Ok(if z == zp { w.diag } else { w.off });
            }
        }
    }
    if k == 0 {
        return Ok(0.0);
    }
    let parent = Cell { level: k - 1, a: z.0 / 2, b: z.1 / 2 };
    let bottom = (parent.depth_units() + 1) as f64 * 0.5f64.powi(k as i32 - 1);
    if bottom <= seq.partial_sum(depth) {
        Ok(g_standard(z, zp, k))
    } else {
        Ok(0.0)
    }
}

/// `F~_η F_0^{g-1}` with `g = n_l - n_{l-1}` and `|η| = l - 1`.
fn d_cell(seq: &DyadicSequence, eta: &Word, l: usize) -> Result<Cell> {
    let g = seq.gap(l).ok_or(GasketError::WordTooDeep { len: l, depth: seq.depth() })?;
    Ok((1..g).fold(seq.tilde_f(eta)?.cell(), |c, _| c.child(0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    Interior,
    Boundary { l: usize },
}

/// Splines of one cell with their weight matrix.
#[derive(Debug, Clone)]
pub struct Block {
    pub level: u32,
    pub kind: BlockKind,
    pub cell: Cell,
    pub centers: Vec<usize>,
    weights: Vec<f64>,
}

impl Block {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.centers.len() + j]
    }

    fn apply(&self, phi: &[f64; 3]) -> [f64; 3] {
        let n = self.centers.len();
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.weights[i * n + j] * phi[j]).sum();
        }
        out
    }
}

/// Per-vertex spline values: `entries[start[v]..start[v+1]]` lists the blocks
/// whose splines do not all vanish at `v`, in block order.
struct SplineTable {
    start: Vec<usize>,
    entries: Vec<(usize, [f64; 3])>,
}

/// Truncated Green's kernel `G^m` on `Ω^(K)` at a fixed mesh level.
pub struct GreenKernel {
    basis: HarmonicBasis,
    m: usize,
    mesh: Arc<GasketMesh>,
    mask: DomainMask,
    blocks: Vec<Block>,
    splines: OnceLock<SplineTable>,
}

impl std::fmt::Debug for GreenKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenKernel")
            .field("m", &self.m)
            .field("level", &self.mesh.level())
            .field("blocks", &self.blocks.len())
            .finish()
    }
}

impl GreenKernel {
    /// Kernel with levels up to `n_m` for the domain cut at `K = depth`.
    /// Needs `1 <= m <= K` and a mesh at least as fine as `n_K`.
    pub fn new(seq: &DyadicSequence, m: usize, mesh: Arc<GasketMesh>) -> Result<Self> {
        let seq = seq.truncated();
        let depth = seq.depth();
        if m == 0 || m > depth {
            return Err(GasketError::InvalidParameter(format!("truncation m = {m} must lie in 1..={depth}")));
        }
        let basis = HarmonicBasis::new(&seq)?;
        let mask = DomainMask::omega(&mesh, &seq, depth)?;
        let cut = cut_units(&mesh, &seq, depth)?;
        let level = mesh.level();
        let mut blocks = Vec::new();
        for k in 1..=seq.n(m) {
            for idx in 0..3usize.pow(k - 1) {
                let cell = Cell::from_index(idx, k - 1);
                if (cell.depth_units() + 1) << (level - (k - 1)) > cut {
                    continue;
                }
                let mids = [cell.child(0).corner_at(1, level), cell.child(0).corner_at(2, level), cell.child(1).corner_at(2, level)];
                let centers = mids.iter().map(|&(a, b)| mesh.vertex_at(a, b).expect("midpoint in mesh")).collect();
                let s = THREE_FIFTHS.powi(k as i32);
                let weights = (0..9).map(|i| if i % 4 == 0 { 0.3 * s } else { 0.1 * s }).collect();
                blocks.push(Block { level: k, kind: BlockKind::Interior, cell, centers, weights });
            }
            for l in (1..=m.min(depth - 1)).filter(|&l| seq.n(l) == k) {
                let w = BoundaryWeights::with_basis(&basis, l)?;
                for eta in Word::all_of_length(l - 1) {
                    let cell = d_cell(&seq, &eta, l)?;
                    let centers = (1..3).map(|j| mesh.corner(cell.child(j), 0).expect("cut vertex in mesh")).collect();
                    let weights = vec![w.diag, w.off, w.off, w.diag];
                    blocks.push(Block { level: k, kind: BlockKind::Boundary { l }, cell, centers, weights });
                }
            }
        }
        Ok(Self { basis, m, mesh, mask, blocks, splines: OnceLock::new() })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seq(&self) -> &DyadicSequence {
        self.basis.seq()
    }

    pub fn mesh(&self) -> &GasketMesh {
        &self.mesh
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `(z, z', g, level)` for every pair of spline centres in a block.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64, u32)> + '_ {
        self.blocks.iter().flat_map(|b| {
            let n = b.centers.len();
            (0..n * n).map(move |ij| (b.centers[ij / n], b.centers[ij % n], b.weights[ij], b.level))
        })
    }

    /// Values of the splines of `block` on the vertices of its cell.
    fn block_splines(&self, block: &Block, scratch: &mut [f64]) -> Vec<(usize, [f64; 3])> {
        let mesh = &*self.mesh;
        let ids = cell_vertices(mesh, block.cell);
        let mut vals = vec![[0.0; 3]; ids.len()];
        let n = block.centers.len();
        for i in 0..n {
            for &v in &ids {
                scratch[v] = f64::NAN;
            }
            let c = block.cell;
            match block.kind {
                BlockKind::Interior => {
                    let hats: [[[f64; 3]; 3]; 3] = [
                        [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]],
                        [[0.0, 0.0, 1.0], [0.0; 3], [1.0, 0.0, 0.0]],
                        [[0.0; 3], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
                    ];
                    for (j, corners) in hats[i].iter().enumerate() {
                        fill_harmonic(mesh, c.child(j as u8), *corners, scratch);
                    }
                }
                BlockKind::Boundary { l } => {
                    let j = i as u8 + 1;
                    let mut hat = [0.0; 3];
                    hat[j as usize] = 1.0;
                    fill_harmonic(mesh, c.child(0), hat, scratch);
                    self.basis.fill_h0_affine(mesh, c.child(j), l, self.seq().depth(), 0.0, 1.0, scratch);
                }
            }
            for (k, &v) in ids.iter().enumerate() {
                let x = scratch[v];
                vals[k][i] = if x.is_finite() { x } else { 0.0 };
            }
        }
        ids.into_iter().zip(vals).filter(|(_, p)| p.iter().any(|&x| x != 0.0)).collect()
    }

    fn table(&self) -> &SplineTable {
        self.splines.get_or_init(|| {
            let nv = self.mesh.num_vertices();
            let per_block: Vec<Vec<(usize, [f64; 3])>> = self
                .blocks
                .par_iter()
                .map_init(|| vec![f64::NAN; nv], |scratch, b| self.block_splines(b, scratch))
                .collect();
            let mut count = vec![0usize; nv + 1];
            for list in &per_block {
                for &(v, _) in list {
                    count[v + 1] += 1;
                }
            }
            for v in 0..nv {
                count[v + 1] += count[v];
            }
            let mut fill = count.clone();
            let mut entries = vec![(0usize, [0.0; 3]); count[nv]];
            for (b, list) in per_block.into_iter().enumerate() {
                for (v, phi) in list {
                    entries[fill[v]] = (b, phi);
                    fill[v] += 1;
                }
            }
            SplineTable { start: count, entries }
        })
    }

    fn entries(&self, v: usize) -> &[(usize, [f64; 3])] {
        let t = self.table();
        &t.entries[t.start[v]..t.start[v + 1]]
    }

    /// `G^m(s, t)` at two mesh vertices.
    pub fn eval(&self, s: usize, t: usize) -> f64 {
        let (es, et) = (self.entries(s), self.entries(t));
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < es.len() && j < et.len() {
            match es[i].0.cmp(&et[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let b = &self.blocks[es[i].0];
                    let gt = b.apply(&et[j].1);
                    sum += (0..b.centers.len()).map(|k| es[i].1[k] * gt[k]).sum::<f64>();
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    /// `G^m(·, t)` on the domain vertices, undefined elsewhere.
    pub fn slice(&self, t: usize) -> MeshFunction {
        let values = (0..self.mesh.num_vertices())
            .into_par_iter()
            .map(|s| if self.mask.contains_vertex(s) { self.eval(s, t) } else { f64::NAN })
            .collect();
        MeshFunction { level: self.mesh.level(), values }
    }

    /// Quadrature weight of each vertex in `Ω^(K)` for the cell-average rule.
    fn quadrature_weights(&self) -> Vec<f64> {
        let w = 3f64.powi(-(self.mesh.level() as i32)) / 3.0;
        let mut out = vec![0.0; self.mesh.num_vertices()];
        for (c, ids) in self.mesh.cells().iter().enumerate() {
            if self.mask.contains_cell(c) {
                for &v in ids {
                    out[v] += w;
                }
            }
        }
        out
    }

    /// `∫ φ_i F dμ` for the splines of every block.
    fn spline_moments(&self, forcing: &MeshFunction) -> Result<Vec<[f64; 3]>> {
        forcing.check_level(&self.mesh)?;
        let w = self.quadrature_weights();
        let mut moments = vec![[0.0; 3]; self.blocks.len()];
        for v in 0..self.mesh.num_vertices() {
            if w[v] == 0.0 {
                continue;
            }
            let f = forcing.get(v);
            if !f.is_finite() {
                return Err(GasketError::InvalidParameter(format!("forcing undefined at vertex {v}")));
            }
            for (b, phi) in self.entries(v) {
                for k in 0..3 {
                    moments[*b][k] += phi[k] * f * w[v];
                }
            }
        }
        Ok(moments)
    }

    /// `u(s) = ∫ G^m(s, t) F(t) dμ(t)` on the domain vertices.
    pub fn solve(&self, forcing: &MeshFunction) -> Result<MeshFunction> {
        let moments = self.spline_moments(forcing)?;
        let gb: Vec<[f64; 3]> = self.blocks.iter().zip(&moments).map(|(b, mo)| b.apply(mo)).collect();
        let values = (0..self.mesh.num_vertices())
            .into_par_iter()
            .map(|s| {
                if !self.mask.contains_vertex(s) {
                    return f64::NAN;
                }
                self.entries(s)
                    .iter()
                    .map(|(b, phi)| (0..3).map(|k| phi[k] * gb[*b][k]).sum::<f64>())
                    .sum()
            })
            .collect();
        Ok(MeshFunction { level: self.mesh.level(), values })
    }

    /// Level-`n_m` spline interpolant of `v`: harmonic on level-`n_m` cells
    /// inside the domain, `v(z_ω) h0^{y_m}` on `F~_ω` for `|ω| = m`.
    pub fn interpolant(&self, v: &MeshFunction) -> Result<MeshFunction> {
        v.check_level(&self.mesh)?;
        let mesh = &*self.mesh;
        let seq = self.seq();
        let (depth, level) = (seq.depth(), seq.n(self.m));
        let cut = cut_units(mesh, seq, depth)?;
        let mut out = vec![f64::NAN; mesh.num_vertices()];
        for idx in 0..3usize.pow(level) {
            let cell = Cell::from_index(idx, level);
            if (cell.depth_units() + 1) << (mesh.level() - level) <= cut {
                let corners = mesh.corners(cell).expect("cell in mesh").map(|p| v.get(p));
                fill_harmonic(mesh, cell, corners, &mut out);
            }
        }
        if self.m < depth {
            for w in Word::all_of_length(self.m) {
                let cell = seq.tilde_f(&w)?.cell();
                let z = mesh.corner(cell, 0).expect("cut vertex in mesh");
                self.basis.fill_h0_affine(mesh, cell, self.m, depth, 0.0, v.get(z), &mut out);
            }
        }
        for (p, o) in out.iter_mut().enumerate() {
            if !self.mask.contains_vertex(p) {
                *o = f64::NAN;
            } else if !o.is_finite() {
                *o = 0.0;
            }
        }
        Ok(MeshFunction { level: mesh.level(), values: out })
    }
}

fn cell_vertices(mesh: &GasketMesh, cell: Cell) -> Vec<usize> {
    let mut ids: Vec<usize> = cell.descendants(mesh.level()).flat_map(|c| mesh.cell_corners(c)).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Spline at `z_ω` for a nonempty word: `h0^{y_l} ∘ F~_ω^{-1}` on `F~_ω`,
/// the hat of `z_ω` on `F~~_ω`, zero elsewhere on `Ω^(K)`.
pub fn modified_spline(seq: &DyadicSequence, word: &Word, mesh: &GasketMesh) -> Result<MeshFunction> {
    let seq = seq.truncated();
    let l = word.len();
    if l == 0 || l >= seq.depth() {
        return Err(GasketError::WordTooDeep { len: l, depth: seq.depth() - 1 });
    }
    let basis = HarmonicBasis::new(&seq)?;
    let mask = DomainMask::omega(mesh, &seq, seq.depth())?;
    let d = d_cell(&seq, &word.parent(), l)?;
    let j = *word.letters().last().expect("nonempty");
    let mut out = vec![f64::NAN; mesh.num_vertices()];
    let mut hat = [0.0; 3];
    hat[j as usize] = 1.0;
    fill_harmonic(mesh, d.child(0), hat, &mut out);
    basis.fill_h0_affine(mesh, d.child(j), l, seq.depth(), 0.0, 1.0, &mut out);
    let values = out
        .iter()
        .enumerate()
        .map(|(p, &x)| if !mask.contains_vertex(p) { f64::NAN } else if x.is_finite() { x } else { 0.0 })
        .collect();
    Ok(MeshFunction { level: mesh.level(), values })
}

/// Both sides of `E(φ_z, v) = (5/3)^{n_l}((1+m0)/m0 v(z) - v(z') - v(w))`
/// with `z = z_ω`, `z'` its sibling and `w = z_{ω'}` for the parent word.
pub fn modified_spline_energy(
    seq: &DyadicSequence,
    word: &Word,
    mesh: &GasketMesh,
    v: &MeshFunction,
) -> Result<(f64, f64)> {
    let seq = seq.truncated();
    let phi = modified_spline(&seq, word, mesh)?;
    let mask = DomainMask::omega(mesh, &seq, seq.depth())?;
    let lhs = graph_energy_pair(mesh, &phi, v, Some(&mask))?;
    let l = word.len();
    let w = BoundaryWeights::new(&seq, l)?;
    let at = |word: &Word| -> Result<f64> {
        let cell = seq.tilde_f(word)?.cell();
        Ok(v.get(mesh.corner(cell, 0).expect("cut vertex in mesh")))
    };
    let rhs = renormalization(w.level)
        * ((1.0 + w.m0) / w.m0 * at(word)? - at(&word.sibling())? - at(&word.parent())?);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Reproducing {
    pub energy: f64,
    pub interpolant: f64,
    pub residual: f64,
}

/// `E(G^m(·, t), v)` against the level-`n_m` interpolant of `v` at `t`, for
/// `v` vanishing on the boundary of the domain.
pub fn reproducing_check(kernel: &GreenKernel, v: &MeshFunction, t: usize) -> Result<Reproducing> {
    let g = kernel.slice(t);
    let energy = graph_energy_pair(kernel.mesh(), &g, v, Some(kernel.mask()))?;
    let interpolant = kernel.interpolant(v)?.get(t);
    Ok(Reproducing { energy, interpolant, residual: (energy - interpolant).abs() })
}

/// Dirichlet problem `-Δu = F` on `Ω^(K)` through `G^m`. Needs a mesh level
/// of at least `n_m + 2`.
pub fn solve_dirichlet(seq: &DyadicSequence, forcing: &MeshFunction, m: usize) -> Result<MeshFunction> {
    let level = forcing.level;
    let seq = seq.truncated();
    if m == 0 || m > seq.depth() {
        return Err(GasketError::InvalidParameter(format!("truncation m = {m} must lie in 1..={}", seq.depth())));
    }
    let need = seq.n(m) + 2;
    if level < need {
        return Err(GasketError::LevelTooSmall { needed: need, have: level });
    }
    let kernel = GreenKernel::new(&seq, m, GasketMesh::shared(level)?)?;
    kernel.solve(forcing)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelFlux {
    pub l: usize,
    /// Largest magnitude over the pieces of depth `l` of the level-`l` term.
    pub max_abs: f64,
    /// `2^l 3^{-n_l} ||F||_∞`.
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxBound {
    /// Flux density on the `2^m` pieces of depth `m`.
    pub density: Vec<f64>,
    pub levels: Vec<LevelFlux>,
    /// Smallest `C` with `max_abs <= C · scale` at every level.
    pub constant: f64,
    pub sup_norm: f64,
}

/// Normal derivative of `∫ G^m(·, t) F(t) dμ(t)` on `S(x)`; only the boundary
/// blocks contribute, each with `-2 (5/3)^{n_{l+1}} (1 - m0(y_l)) 2^l` times
/// its weighted spline moment on the piece below `z_ω`.
pub fn solution_flux(kernel: &GreenKernel, forcing: &MeshFunction) -> Result<FluxBound> {
    let seq = kernel.seq();
    let m = kernel.m();
    let moments = kernel.spline_moments(forcing)?;
    let sup_norm = (0..forcing.values.len())
        .filter(|&v| kernel.mask().contains_vertex(v))
        .map(|v| forcing.get(v).abs())
        .fold(0.0, f64::max);
    let mut density = vec![0.0; 1 << m];
    let mut levels = Vec::new();
    let top = m.min(seq.depth() - 1);
    for l in 1..=top {
        let factor = -2.0 * renormalization(seq.n(l + 1)) * (1.0 - kernel.basis.table().m0(l)) * 2f64.powi(l as i32);
        let mut max_abs: f64 = 0.0;
        for (b, block) in kernel.blocks.iter().enumerate() {
            if block.kind != (BlockKind::Boundary { l }) {
                continue;
            }
            let gb = block.apply(&moments[b]);
            // the block of D = F~_η F_0^{g-1} carries z_{η1}, z_{η2}
            let eta = word_of_d_block(seq, block, l)?;
            for j in 0..2 {
                let term = factor * gb[j];
                max_abs = max_abs.max(term.abs());
                let w = eta.child(j as u8 + 1);
                let span = 1usize << (m - l);
                let start = w.index() * span;
                for d in &mut density[start..start + span] {
                    *d += term;
                }
            }
        }
        let scale = 2f64.powi(l as i32) * 3f64.powi(-(seq.n(l) as i32)) * sup_norm;
        levels.push(LevelFlux { l, max_abs, scale });
    }
    let constant = levels.iter().filter(|x| x.scale > 0.0).map(|x| x.max_abs / x.scale).fold(0.0, f64::max);
    Ok(FluxBound { density, levels, constant, sup_norm })
}

fn word_of_d_block(seq: &DyadicSequence, block: &Block, l: usize) -> Result<Word> {
    Word::all_of_length(l - 1)
        .into_iter()
        .find(|eta| d_cell(seq, eta, l).map(|d| d == block.cell).unwrap_or(false))
        .ok_or_else(|| GasketError::InvalidParameter("boundary block without a word".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_dirichlet_graph, SolverKind};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(kernel: &GreenKernel, rng: &mut ChaCha8Rng) -> MeshFunction {
        let mask = kernel.mask();
        let values = (0..kernel.mesh().num_vertices())
            .map(|v| match mask.flag(v) {
                crate::mesh::VertexFlag::Interior => rng.gen_range(-1.0..1.0),
                crate::mesh::VertexFlag::Boundary => 0.0,
                crate::mesh::VertexFlag::Exterior => f64::NAN,
            })
            .collect();
        MeshFunction { level: kernel.mesh().level(), values }
    }

    #[test]
    fn standard_weights() {
        assert_abs_diff_eq!(g_standard((1, 0), (1, 0), 1), 9.0 / 50.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g_standard((1, 0), (1, 1), 1), 3.0 / 50.0, epsilon = 1e-15);
        assert_eq!(g_standard((1, 0), (3, 0), 2), 0.0);
        assert_eq!(g_standard((2, 0), (2, 0), 2), 0.0);
    }

    #[test]
    fn golden_boundary_weights() {
        let seq = DyadicSequence::from_value(1.0, 8).unwrap();
        let w = BoundaryWeights::new(&seq, 1).unwrap();
        assert_abs_diff_eq!(w.diag, 117.0 / 800.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.off, 27.0 / 800.0, epsilon = 1e-12);
        let (one, zero) = w.identities();
        assert_abs_diff_eq!(one, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(zero, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn domain_weight_cases() {
        let seq = DyadicSequence::from_exponents(&[1, 2, 4, 5]).unwrap();
        let w = BoundaryWeights::new(&seq, 2).unwrap();
        let at = |w: &str, k: u32| seq.tilde_f(&w.parse().unwrap()).unwrap().cell().corner_at(0, k);
        let (z1, z2) = (at("1", 1), at("2", 2));
        assert_eq!(g_domain(&seq, z1, z1, 1).unwrap(), BoundaryWeights::new(&seq, 1).unwrap().diag);
        let (z11, z12) = (at("11", 2), at("12", 2));
        assert_eq!(g_domain(&seq, z11, z12, 2).unwrap(), w.off);
        assert_eq!(g_domain(&seq, z11, z2, 2).unwrap(), 0.0);
        // (1,0) at level 2 is a midpoint of F_0, which lies inside
        assert_eq!(g_domain(&seq, (1, 0), (1, 0), 2).unwrap(), g_standard((1, 0), (1, 0), 2));
    }

    #[test]
    fn lemma_identity() {
        let seq = DyadicSequence::from_exponents(&[1, 3, 4, 6]).unwrap();
        let mesh = GasketMesh::shared(7).unwrap();
        let kernel = GreenKernel::new(&seq, 3, mesh.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for w in ["1", "2", "21", "122"] {
            let v = random_interior(&kernel, &mut rng);
            let (lhs, rhs) = modified_spline_energy(&seq, &w.parse().unwrap(), &mesh, &v).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()), "{w}: {lhs} {rhs}");
        }
    }

    #[test]
    fn kernel_reproduces_interpolant() {
        let seq = DyadicSequence::from_exponents(&[1, 3, 4, 6]).unwrap();
        let mesh = GasketMesh::shared(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=3 {
            let kernel = GreenKernel::new(&seq, m, mesh.clone()).unwrap();
            for _ in 0..3 {
                let v = random_interior(&kernel, &mut rng);
                let t = loop {
                    let t = rng.gen_range(0..mesh.num_vertices());
                    if kernel.mask().contains_vertex(t) {
                        break t;
                    }
                };
                let r = reproducing_check(&kernel, &v, t).unwrap();
                assert!(r.residual < 1e-9, "m={m}: {r:?}");
            }
        }
    }

    #[test]
    fn kernel_symmetric_monotone_and_zero_on_boundary() {
        let seq = DyadicSequence::from_exponents(&[2, 3, 5]).unwrap();
        let mesh = GasketMesh::shared(6).unwrap();
        let k1 = GreenKernel::new(&seq, 1, mesh.clone()).unwrap();
        let k2 = GreenKernel::new(&seq, 2, mesh.clone()).unwrap();
        let bnd = k2.mask().boundary();
        let inside: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| k2.mask().contains_vertex(v)).step_by(7).collect();
        for &s in &inside {
            for &t in &inside {
                assert_abs_diff_eq!(k2.eval(s, t), k2.eval(t, s), epsilon = 1e-15);
                assert!(k2.eval(s, t) >= k1.eval(s, t) - 1e-15);
                assert!(k1.eval(s, t) >= 0.0);
            }
            for &b in &bnd {
                assert_eq!(k2.eval(s, b), 0.0);
            }
        }
        assert!(k2.terms().all(|(_, _, g, _)| g >= 0.0));
    }

    #[test]
    fn zero_forcing() {
        let seq = DyadicSequence::from_value(1.0, 4).unwrap();
        let mesh = GasketMesh::build(5).unwrap();
        let u = solve_dirichlet(&seq, &MeshFunction::constant(&mesh, 0.0), 3).unwrap();
        assert!(u.values.iter().all(|v| v.is_nan() || *v == 0.0));
        assert!(solve_dirichlet(&seq, &MeshFunction::constant(&mesh, 0.0), 4).is_err());
    }

    #[test]
    fn unit_forcing_matches_graph_solve() {
        let seq = DyadicSequence::from_value(1.0, 5).unwrap().truncated();
        let mesh = GasketMesh::shared(7).unwrap();
        let f = MeshFunction::constant(&mesh, 1.0);
        let u = solve_dirichlet(&seq, &f, 4).unwrap();
        let mask = DomainMask::omega(&mesh, &seq, 5).unwrap();
        let zero = MeshFunction::constant(&mesh, 0.0);
        let oracle = solve_dirichlet_graph(&mesh, &mask, &zero, Some(&f), SolverKind::Direct).unwrap();
        let err = u.max_abs_diff(&oracle);
        let rel = err / oracle.max_abs();
        assert!(rel < 0.02, "relative error {rel}");
        assert_eq!(u.get(mesh.q0()), 0.0);
        assert!(u.values.iter().all(|v| v.is_nan() || *v >= 0.0));
    }

    #[test]
    fn flux_decays_for_unit_forcing() {
        let seq = DyadicSequence::from_value(1.0, 6).unwrap();
        let mesh = GasketMesh::shared(7).unwrap();
        let kernel = GreenKernel::new(&seq, 5, mesh.clone()).unwrap();
        let fb = solution_flux(&kernel, &MeshFunction::constant(&mesh, 1.0)).unwrap();
        assert!(fb.density.iter().all(|d| *d < 0.0));
        for w in fb.levels.windows(2) {
            assert!(w[1].max_abs < w[0].max_abs);
        }
        let zero = solution_flux(&kernel, &MeshFunction::constant(&mesh, 0.0)).unwrap();
        assert!(zero.density.iter().all(|d| *d == 0.0));
    }
}
