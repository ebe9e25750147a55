//! Level-`k` graph approximations of the gasket.
//!
//! Vertices live on a triangular lattice: at level `k` the point with lattice
//! coordinates `(a, b)` sits at `q0 + (a / 2^k)(q1 - q0) + (b / 2^k)(q2 - q0)`
//! and its depth below `q0` is `(a + b) / 2^k`. A level-`k` cell is an upward
//! triangle with top corner `(a, b)`, left corner `(a + 1, b)` (towards `q1`)
//! and right corner `(a, b + 1)` (towards `q2`). Cells are enumerated in
//! lexicographic address order, so the index of a cell written in base 3 is
//! its address, and vertices are numbered by first appearance in that scan.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::dyadic::DyadicSequence;
use crate::error::{GasketError, Result};

pub const DEFAULT_MAX_LEVEL: u32 = 12;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// A cell `F_w(SG)` by level and top-corner lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub level: u32,
    pub a: u32,
    pub b: u32,
}

impl Cell {
    pub const ROOT: Cell = Cell { level: 0, a: 0, b: 0 };

    pub fn child(self, i: u8) -> Cell {
        let (da, db) = match i {
            0 => (0, 0),
            1 => (1, 0),
            _ => (0, 1),
        };
        Cell { level: self.level + 1, a: 2 * self.a + da, b: 2 * self.b + db }
    }

    /// Corner `j` (0 top, 1 left, 2 right) in lattice coordinates at `level`.
    pub fn corner_at(self, j: usize, level: u32) -> (u32, u32) {
        debug_assert!(level >= self.level);
        let s = level - self.level;
        let (a, b) = (self.a << s, self.b << s);
        let e = 1u32 << s;
        match j {
            0 => (a, b),
            1 => (a + e, b),
            _ => (a, b + e),
        }
    }

    /// Depth of the top corner in units of `2^-level`.
    pub fn depth_units(self) -> u64 {
        self.a as u64 + self.b as u64
    }

    /// Index of this cell in the lexicographic enumeration of its level.
    pub fn index(self) -> usize {
        let mut idx = 0usize;
        for k in (0..self.level).rev() {
            let da = (self.a >> k) & 1;
            let db = (self.b >> k) & 1;
            idx = idx * 3 + if da == 1 { 1 } else if db == 1 { 2 } else { 0 };
        }
        idx
    }

    /// Range of level-`level` descendant indices.
    pub fn descendants(self, level: u32) -> std::ops::Range<usize> {
        let span = 3usize.pow(level - self.level);
        let start = self.index() * span;
        start..start + span
    }

    pub fn from_index(index: usize, level: u32) -> Cell {
        let mut digits = Vec::with_capacity(level as usize);
        let mut i = index;
        for _ in 0..level {
            digits.push((i % 3) as u8);
            i /= 3;
        }
        digits.iter().rev().fold(Cell::ROOT, |c, &d| c.child(d))
    }

    /// Mirror image under the vertical reflection fixing `q0`.
    pub fn reflect(self) -> Cell {
        Cell { level: self.level, a: self.b, b: self.a }
    }
}

/// Planar position of a lattice point at the given level.
pub fn lattice_point(a: u32, b: u32, level: u32) -> (f64, f64) {
    let s = (2f64).powi(-(level as i32));
    let (ta, tb) = (a as f64 * s, b as f64 * s);
    (0.5 - 0.5 * ta + 0.5 * tb, SQRT3_2 * (1.0 - ta - tb))
}

#[derive(Debug)]
pub struct GasketMesh {
    level: u32,
    lattice: Vec<(u32, u32)>,
    index: HashMap<(u32, u32), usize>,
    cells: Vec<[usize; 3]>,
    nbr_start: Vec<usize>,
    nbrs: Vec<usize>,
}

impl GasketMesh {
    pub fn build(level: u32) -> Result<Self> {
        Self::build_with_max(level, DEFAULT_MAX_LEVEL)
    }

    pub fn build_with_max(level: u32, max_level: u32) -> Result<Self> {
        if level > max_level {
            return Err(GasketError::LevelTooLarge { requested: level, max: max_level });
        }
        let ncells = 3usize.pow(level);
        let nverts = 3 * (ncells + 1) / 2;
        let mut lattice = Vec::with_capacity(nverts);
        let mut index = HashMap::with_capacity(nverts);
        let mut cells = Vec::with_capacity(ncells);
        let mut stack = vec![Cell::ROOT];
        // depth-first traversal visiting children in order 0, 1, 2
        while let Some(c) = stack.pop() {
            if c.level == level {
                let mut ids = [0usize; 3];
                for (j, id) in ids.iter_mut().enumerate() {
                    let p = c.corner_at(j, level);
                    *id = *index.entry(p).or_insert_with(|| {
                        lattice.push(p);
                        lattice.len() - 1
                    });
                }
                cells.push(ids);
            } else {
                for i in (0..3).rev() {
                    stack.push(c.child(i));
                }
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(4); lattice.len()];
        for ids in &cells {
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                adj[ids[p]].push(ids[q]);
                adj[ids[q]].push(ids[p]);
            }
        }
        let mut nbr_start = Vec::with_capacity(lattice.len() + 1);
        let mut nbrs = Vec::with_capacity(2 * 3 * ncells);
        nbr_start.push(0);
        for list in adj {
            nbrs.extend(list);
            nbr_start.push(nbrs.len());
        }
        Ok(Self { level, lattice, index, cells, nbr_start, nbrs })
    }

    /// Process-wide cache of meshes by level.
    pub fn shared(level: u32) -> Result<Arc<GasketMesh>> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Arc<GasketMesh>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(m) = cache.lock().expect("mesh cache poisoned").get(&level) {
            return Ok(m.clone());
        }
        let mesh = Arc::new(GasketMesh::build(level)?);
        Ok(cache.lock().expect("mesh cache poisoned").entry(level).or_insert(mesh).clone())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_vertices(&self) -> usize {
        self.lattice.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        3 * self.cells.len()
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell_corners(&self, index: usize) -> [usize; 3] {
        self.cells[index]
    }

    pub fn lattice(&self, v: usize) -> (u32, u32) {
        self.lattice[v]
    }

    pub fn coords(&self, v: usize) -> (f64, f64) {
        let (a, b) = self.lattice[v];
        lattice_point(a, b, self.level)
    }

    /// Depth of a vertex below `q0` in units of `2^-level`.
    pub fn depth_units(&self, v: usize) -> u64 {
        let (a, b) = self.lattice[v];
        a as u64 + b as u64
    }

    pub fn vertex_at(&self, a: u32, b: u32) -> Option<usize> {
        self.index.get(&(a, b)).copied()
    }

    /// Vertex id of corner `j` of a cell no finer than this mesh.
    pub fn corner(&self, cell: Cell, j: usize) -> Option<usize> {
        if cell.level > self.level {
            return None;
        }
        let (a, b) = cell.corner_at(j, self.level);
        self.vertex_at(a, b)
    }

    pub fn corners(&self, cell: Cell) -> Option<[usize; 3]> {
        Some([self.corner(cell, 0)?, self.corner(cell, 1)?, self.corner(cell, 2)?])
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.nbrs[self.nbr_start[v]..self.nbr_start[v + 1]]
    }

    pub fn q0(&self) -> usize {
        self.vertex_at(0, 0).expect("q0 present")
    }

    pub fn boundary_vertices(&self) -> [usize; 3] {
        let e = 1u32 << self.level;
        [self.q0(), self.vertex_at(e, 0).expect("q1"), self.vertex_at(0, e).expect("q2")]
    }

    pub fn is_v0(&self, v: usize) -> bool {
        let (a, b) = self.lattice[v];
        let e = 1u32 << self.level;
        (a, b) == (0, 0) || (a, b) == (e, 0) || (a, b) == (0, e)
    }

    /// Id of the mirror vertex under the vertical reflection.
    pub fn reflect_vertex(&self, v: usize) -> usize {
        let (a, b) = self.lattice[v];
        self.vertex_at(b, a).expect("mesh is reflection symmetric")
    }

    /// Vertex of this mesh corresponding to vertex `v` of a coarser mesh.
    pub fn embed_from(&self, coarse: &GasketMesh, v: usize) -> Option<usize> {
        if coarse.level > self.level {
            return None;
        }
        let s = self.level - coarse.level;
        let (a, b) = coarse.lattice[v];
        self.vertex_at(a << s, b << s)
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct V {
            id: usize,
            x: f64,
            y: f64,
        }
        #[derive(Serialize)]
        struct Export {
            level: u32,
            vertices: Vec<V>,
            edges: Vec<[usize; 2]>,
        }
        let vertices = (0..self.num_vertices())
            .map(|id| {
                let (x, y) = self.coords(id);
                V { id, x, y }
            })
            .collect();
        let edges = self
            .cells
            .iter()
            .flat_map(|c| [[c[0], c[1]], [c[0], c[2]], [c[1], c[2]]])
            .map(|[p, q]| [p.min(q), p.max(q)])
            .collect();
        serde_json::to_value(Export { level: self.level, vertices, edges }).expect("serializable")
    }
}

/// Values on the vertices of a level-`k` mesh. `NaN` marks vertices where the
/// function is undefined (outside the domain it was built on).
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFunction {
    pub level: u32,
    pub values: Vec<f64>,
}

impl MeshFunction {
    pub fn constant(mesh: &GasketMesh, c: f64) -> Self {
        Self { level: mesh.level, values: vec![c; mesh.num_vertices()] }
    }

    pub fn undefined(mesh: &GasketMesh) -> Self {
        Self::constant(mesh, f64::NAN)
    }

    pub fn from_values(mesh: &GasketMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(GasketError::InvalidParameter(format!(
                "{} values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        Ok(Self { level: mesh.level, values })
    }

    /// Samples `f(x, y)` at every vertex.
    pub fn sample(mesh: &GasketMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..mesh.num_vertices())
            .map(|v| {
                let (x, y) = mesh.coords(v);
                f(x, y)
            })
            .collect();
        Self { level: mesh.level, values }
    }

    pub fn check_level(&self, mesh: &GasketMesh) -> Result<()> {
        if self.level != mesh.level || self.values.len() != mesh.num_vertices() {
            return Err(GasketError::LevelMismatch { expected: mesh.level, found: self.level });
        }
        Ok(())
    }

    pub fn get(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn is_defined(&self, v: usize) -> bool {
        self.values[v].is_finite()
    }

    /// `self + k * other` where both are defined; undefined elsewhere.
    pub fn axpy(&mut self, k: f64, other: &MeshFunction) {
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += k * o;
        }
    }

    pub fn scaled(&self, k: f64) -> MeshFunction {
        MeshFunction { level: self.level, values: self.values.iter().map(|v| k * v).collect() }
    }

    /// Largest difference over vertices where both functions are defined.
    pub fn max_abs_diff(&self, other: &MeshFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Values read off at the vertices of a coarser mesh.
    pub fn restrict_to(&self, fine: &GasketMesh, coarse: &GasketMesh) -> Result<MeshFunction> {
        self.check_level(fine)?;
        let values = (0..coarse.num_vertices())
            .map(|v| fine.embed_from(coarse, v).map_or(f64::NAN, |w| self.values[w]))
            .collect();
        Ok(MeshFunction { level: coarse.level, values })
    }

    /// CSV with header `vertex_id,x,y,value`, skipping undefined vertices.
    pub fn to_csv(&self, mesh: &GasketMesh) -> String {
        let mut out = String::from("vertex_id,x,y,value\n");
        for (v, val) in self.values.iter().enumerate() {
            if val.is_finite() {
                let (x, y) = mesh.coords(v);
                let _ = writeln!(out, "{v},{x:.17e},{y:.17e},{val:.17e}");
            }
        }
        out
    }

    pub fn from_csv(mesh: &GasketMesh, text: &str) -> Result<MeshFunction> {
        let mut f = MeshFunction::undefined(mesh);
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || GasketError::Parse(format!("line {}: {line}", i + 1));
            if cols.len() != 4 {
                return Err(bad());
            }
            let id: usize = cols[0].trim().parse().map_err(|_| bad())?;
            let val: f64 = cols[3].trim().parse().map_err(|_| bad())?;
            if id >= mesh.num_vertices() {
                return Err(bad());
            }
            f.values[id] = val;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VertexFlag {
    Interior,
    Boundary,
    Exterior,
}

/// A union of level-`k` cells together with its vertex classification.
/// Boundary vertices are vertices of the region that lie in `V0` or touch a
/// cell outside the region.
#[derive(Debug, Clone)]
pub struct DomainMask {
    pub level: u32,
    cell_in: Vec<bool>,
    flags: Vec<VertexFlag>,
}

impl DomainMask {
    pub fn from_cells(mesh: &GasketMesh, cell_in: Vec<bool>) -> Result<Self> {
        if cell_in.len() != mesh.num_cells() {
            return Err(GasketError::InvalidParameter("cell mask has the wrong length".into()));
        }
        let mut touches_in = vec![false; mesh.num_vertices()];
        let mut touches_out = vec![false; mesh.num_vertices()];
        for (c, ids) in mesh.cells().iter().enumerate() {
            let t = if cell_in[c] { &mut touches_in } else { &mut touches_out };
            for &v in ids {
                t[v] = true;
            }
        }
        let flags = (0..mesh.num_vertices())
            .map(|v| {
                if !touches_in[v] {
                    VertexFlag::Exterior
                } else if touches_out[v] || mesh.is_v0(v) {
                    VertexFlag::Boundary
                } else {
                    VertexFlag::Interior
                }
            })
            .collect();
        Ok(Self { level: mesh.level, cell_in, flags })
    }

    pub fn full(mesh: &GasketMesh) -> Self {
        Self::from_cells(mesh, vec![true; mesh.num_cells()]).expect("lengths agree")
    }

    /// Cells lying above the line at depth `x_[m]`.
    pub fn omega(mesh: &GasketMesh, seq: &DyadicSequence, m: usize) -> Result<Self> {
        let cut = cut_units(mesh, seq, m)?;
        Self::by_depth(mesh, |top| top < cut)
    }

    /// Cells lying below the line at depth `x_[m]`.
    pub fn below(mesh: &GasketMesh, seq: &DyadicSequence, m: usize) -> Result<Self> {
        let cut = cut_units(mesh, seq, m)?;
        Self::by_depth(mesh, |top| top >= cut)
    }

    fn by_depth(mesh: &GasketMesh, keep: impl Fn(u64) -> bool) -> Result<Self> {
        let cell_in = mesh.cells().iter().map(|ids| keep(mesh.depth_units(ids[0]))).collect();
        Self::from_cells(mesh, cell_in)
    }

    pub fn contains_cell(&self, c: usize) -> bool {
        self.cell_in[c]
    }

    pub fn cells_in(&self) -> &[bool] {
        &self.cell_in
    }

    pub fn flag(&self, v: usize) -> VertexFlag {
        self.flags[v]
    }

    pub fn flags(&self) -> &[VertexFlag] {
        &self.flags
    }

    pub fn boundary(&self) -> Vec<usize> {
        self.vertices_with(VertexFlag::Boundary)
    }

    pub fn interior(&self) -> Vec<usize> {
        self.vertices_with(VertexFlag::Interior)
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.flags[v] != VertexFlag::Exterior
    }

    fn vertices_with(&self, f: VertexFlag) -> Vec<usize> {
        self.flags.iter().enumerate().filter(|(_, &g)| g == f).map(|(v, _)| v).collect()
    }

    pub fn num_cells_in(&self) -> usize {
        self.cell_in.iter().filter(|&&b| b).count()
    }
}

/// `x_[m] * 2^level`, checking the mesh resolves the cut.
pub fn cut_units(mesh: &GasketMesh, seq: &DyadicSequence, m: usize) -> Result<u64> {
    if m == 0 || m > seq.depth() {
        return Err(GasketError::SequenceTooShort { needed: m.max(1), have: seq.depth() });
    }
    let need = seq.n(m);
    if mesh.level < need {
        return Err(GasketError::LevelTooSmall { needed: need, have: mesh.level });
    }
    Ok(seq.partial_sum_units(m, mesh.level))
}

/// Midpoint values of the 1/5-2/5 rule: `[m01, m02, m12]`.
pub fn extension_midpoints(v: [f64; 3]) -> [f64; 3] {
    [
        // grouped so that mirror-image cells round identically
        (2.0 * (v[0] + v[1]) + v[2]) / 5.0,
        (2.0 * (v[0] + v[2]) + v[1]) / 5.0,
        (v[0] + 2.0 * (v[1] + v[2])) / 5.0,
    ]
}

/// Writes the harmonic function with the given corner values on `cell` into
/// every vertex of `mesh` inside the cell.
pub fn fill_harmonic(mesh: &GasketMesh, cell: Cell, corners: [f64; 3], out: &mut [f64]) {
    if cell.level == mesh.level {
        for (j, &val) in corners.iter().enumerate() {
            if let Some(v) = mesh.corner(cell, j) {
                out[v] = val;
            }
        }
        return;
    }
    let [m01, m02, m12] = extension_midpoints(corners);
    fill_harmonic(mesh, cell.child(0), [corners[0], m01, m02], out);
    fill_harmonic(mesh, cell.child(1), [m01, corners[1], m12], out);
    fill_harmonic(mesh, cell.child(2), [m02, m12, corners[2]], out);
}

/// One step of harmonic extension from `coarse` to `fine` (one level finer).
/// Cells with an undefined corner are left undefined.
pub fn harmonic_extend(coarse: &GasketMesh, fine: &GasketMesh, f: &MeshFunction) -> Result<MeshFunction> {
    f.check_level(coarse)?;
    if fine.level != coarse.level + 1 {
        return Err(GasketError::LevelMismatch { expected: coarse.level + 1, found: fine.level });
    }
    extend_to(coarse, fine, f)
}

/// Piecewise-harmonic refinement of `f` to any finer mesh.
pub fn extend_to(coarse: &GasketMesh, fine: &GasketMesh, f: &MeshFunction) -> Result<MeshFunction> {
    f.check_level(coarse)?;
    if fine.level < coarse.level {
        return Err(GasketError::LevelTooSmall { needed: coarse.level, have: fine.level });
    }
    let mut out = vec![f64::NAN; fine.num_vertices()];
    for (c, ids) in coarse.cells().iter().enumerate() {
        let vals = [f.values[ids[0]], f.values[ids[1]], f.values[ids[2]]];
        if vals.iter().all(|v| v.is_finite()) {
            fill_harmonic(fine, Cell::from_index(c, coarse.level), vals, &mut out);
        }
    }
    Ok(MeshFunction { level: fine.level, values: out })
}

/// Renormalized bilinear graph energy `(5/3)^k sum (f(p)-f(q))(g(p)-g(q))`
/// over the edges of the cells in `mask` (all cells where both functions are
/// defined when no mask is given).
pub fn graph_energy_pair(
    mesh: &GasketMesh,
    f: &MeshFunction,
    g: &MeshFunction,
    mask: Option<&DomainMask>,
) -> Result<f64> {
    f.check_level(mesh)?;
    g.check_level(mesh)?;
    let mut sum = 0.0;
    for (c, ids) in mesh.cells().iter().enumerate() {
        if let Some(m) = mask {
            if !m.contains_cell(c) {
                continue;
            }
        }
        let fv = ids.map(|v| f.values[v]);
        let gv = ids.map(|v| g.values[v]);
        if fv.iter().chain(&gv).any(|v| !v.is_finite()) {
            if mask.is_some() {
                return Err(GasketError::InvalidParameter(format!(
                    "function undefined on cell {c} inside the mask"
                )));
            }
            continue;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            sum += (fv[p] - fv[q]) * (gv[p] - gv[q]);
        }
    }
    Ok(renormalization(mesh.level) * sum)
}

pub fn graph_energy(mesh: &GasketMesh, f: &MeshFunction, mask: Option<&DomainMask>) -> Result<f64> {
    graph_energy_pair(mesh, f, f, mask)
}

pub fn renormalization(level: u32) -> f64 {
    (5.0f64 / 3.0).powi(level as i32)
}

/// Cell-average quadrature against the standard self-similar measure.
pub fn integrate(mesh: &GasketMesh, f: &MeshFunction, mask: Option<&DomainMask>) -> Result<f64> {
    f.check_level(mesh)?;
    let w = 3f64.powi(-(mesh.level as i32)) / 3.0;
    let mut sum = 0.0;
    for (c, ids) in mesh.cells().iter().enumerate() {
        if let Some(m) = mask {
            if !m.contains_cell(c) {
                continue;
            }
        }
        let s: f64 = ids.iter().map(|&v| f.values[v]).sum();
        if !s.is_finite() {
            if mask.is_some() {
                return Err(GasketError::InvalidParameter(format!(
                    "function undefined on cell {c} inside the mask"
                )));
            }
            continue;
        }
        sum += w * s;
    }
    Ok(sum)
}

/// Discrete Laplacian `(3/2) 5^k (sum_{q~p} f(q) - deg(p) f(p))` at a vertex.
pub fn laplacian_at(mesh: &GasketMesh, f: &MeshFunction, v: usize) -> f64 {
    let nb = mesh.neighbors(v);
    let s: f64 = nb.iter().map(|&q| f.values[q]).sum();
    1.5 * 5f64.powi(mesh.level as i32) * (s - nb.len() as f64 * f.values[v])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for (k, nv, ne) in [(0, 3, 3), (1, 6, 9), (5, 366, 729)] {
            let m = GasketMesh::build(k).unwrap();
            assert_eq!(m.num_vertices(), nv);
            assert_eq!(m.num_edges(), ne);
        }
        assert!(GasketMesh::build(13).is_err());
    }

    #[test]
    fn degrees() {
        let m = GasketMesh::build(4).unwrap();
        for v in 0..m.num_vertices() {
            let d = m.neighbors(v).len();
            assert_eq!(d, if m.is_v0(v) { 2 } else { 4 });
        }
    }

    #[test]
    fn cell_index_round_trip() {
        for level in 0..5 {
            for i in 0..3usize.pow(level) {
                assert_eq!(Cell::from_index(i, level).index(), i);
            }
        }
    }

    #[test]
    fn mesh_cell_order_matches_index() {
        let m = GasketMesh::build(3).unwrap();
        for (i, ids) in m.cells().iter().enumerate() {
            assert_eq!(m.corners(Cell::from_index(i, 3)).unwrap(), *ids);
        }
    }

    #[test]
    fn refinement_preserves_ordering() {
        // vertices of level k keep their relative order inside level k+1
        let a = GasketMesh::build(3).unwrap();
        let b = GasketMesh::build(4).unwrap();
        let embedded: Vec<usize> = (0..a.num_vertices()).map(|v| b.embed_from(&a, v).unwrap()).collect();
        assert!(embedded.windows(2).all(|w| w[0] < w[1]));
        for (c, ids) in a.cells().iter().enumerate() {
            let cell = Cell::from_index(c, 3);
            assert_eq!(b.corners(cell).unwrap(), ids.map(|v| embedded[v]));
        }
    }

    #[test]
    fn extension_of_v0_data() {
        assert_eq!(extension_midpoints([1.0, 0.0, 0.0]), [0.4, 0.4, 0.2]);
        let m0 = GasketMesh::build(0).unwrap();
        let mut f = MeshFunction::constant(&m0, 0.0);
        f.values[m0.q0()] = 1.0;
        let mut e_prev = graph_energy(&m0, &f, None).unwrap();
        assert!((e_prev - 2.0).abs() < 1e-15);
        let mut cur = f;
        for k in 1..8 {
            let coarse = GasketMesh::build(k - 1).unwrap();
            let fine = GasketMesh::build(k).unwrap();
            cur = harmonic_extend(&coarse, &fine, &cur).unwrap();
            let e = graph_energy(&fine, &cur, None).unwrap();
            assert!((e - e_prev).abs() < 1e-12);
            e_prev = e;
        }
    }

    #[test]
    fn constant_extends_to_constant() {
        let c = GasketMesh::build(2).unwrap();
        let f = GasketMesh::build(3).unwrap();
        let g = harmonic_extend(&c, &f, &MeshFunction::constant(&c, 1.0)).unwrap();
        assert!(g.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert_eq!(graph_energy(&f, &g, None).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_examples() {
        let m = GasketMesh::build(4).unwrap();
        assert!((integrate(&m, &MeshFunction::constant(&m, 1.0), None).unwrap() - 1.0).abs() < 1e-14);
        let mut out = vec![0.0; m.num_vertices()];
        fill_harmonic(&m, Cell::ROOT, [1.0, 0.0, 0.0], &mut out);
        let h = MeshFunction::from_values(&m, out).unwrap();
        assert!((integrate(&m, &h, None).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let cell = Cell::ROOT.child(1).child(2);
        let ind: Vec<bool> = (0..m.num_cells()).map(|c| cell.descendants(4).contains(&c)).collect();
        let mask = DomainMask::from_cells(&m, ind).unwrap();
        let v = integrate(&m, &MeshFunction::constant(&m, 1.0), Some(&mask)).unwrap();
        assert!((v - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn omega_mask_boundary() {
        let seq = DyadicSequence::from_exponents(&[1, 3, 4]).unwrap();
        let m = GasketMesh::build(6).unwrap();
        for k in 1..=3 {
            let mask = DomainMask::omega(&m, &seq, k).unwrap();
            let b = mask.boundary();
            assert_eq!(b.len(), 1 + (1 << k));
            assert!(b.contains(&m.q0()));
        }
    }

    #[test]
    fn json_export_shape() {
        let m = GasketMesh::build(1).unwrap();
        let j = m.to_json();
        assert_eq!(j["level"], 1);
        assert_eq!(j["vertices"].as_array().unwrap().len(), 6);
        assert_eq!(j["edges"].as_array().unwrap().len(), 9);
    }

    #[test]
    fn csv_round_trip() {
        let m = GasketMesh::build(2).unwrap();
        let f = MeshFunction::sample(&m, |x, y| x * x - 0.3 * y);
        let back = MeshFunction::from_csv(&m, &f.to_csv(&m)).unwrap();
        assert_eq!(back, f);
    }
}
