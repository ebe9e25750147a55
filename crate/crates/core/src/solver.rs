//! Brute-force graph solvers for `-Δ_k u = F` on a union of level-`k` cells.
//!
//! The primary solver condenses the cell tree bottom-up: every vertex outside
//! `V0` is a midpoint of exactly one coarser cell, so it can be eliminated
//! when that cell's three children are merged. What remains is a 3x3 system
//! on `V0`, after which values are recovered top-down. The elimination is
//! generic over the scalar type so the same code runs in `f64` and in exact
//! rational arithmetic. A matrix-free conjugate gradient solver is kept as an
//! independent cross-check for Dirichlet problems.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{GasketError, Result};
use crate::mesh::{DomainMask, GasketMesh, MeshFunction, VertexFlag};

/// Highest level accepted by the exact rational solver.
pub const EXACT_MAX_LEVEL: u32 = 6;
pub const CG_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    ConjugateGradient,
    Exact,
}

pub trait Scalar:
    Clone
    + Send
    + Sync
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn magnitude(&self) -> f64;
    /// Whether a pivot should be treated as zero relative to `scale`.
    fn negligible(&self, scale: f64) -> bool;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn negligible(&self, scale: f64) -> bool {
        self.abs() <= 1e-13 * scale
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn magnitude(&self) -> f64 {
        Scalar::to_f64(self).abs()
    }
    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
}

/// Solves `A x = b` for a small dense system by Gaussian elimination with
/// partial pivoting; `rhs` holds several right-hand sides as columns.
fn dense_solve<T: Scalar>(mut a: Vec<Vec<T>>, mut rhs: Vec<Vec<T>>) -> Result<Vec<Vec<T>>> {
    let n = a.len();
    let scale = a.iter().flatten().map(|v| v.magnitude()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].magnitude().total_cmp(&a[j][col].magnitude()))
            .expect("nonempty");
        if a[piv][col].negligible(scale) {
            return Err(GasketError::Singular("floating component without boundary data".into()));
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col].clone() / a[col][col].clone();
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let t = f.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - t;
            }
            for k in 0..rhs[row].len() {
                let t = f.clone() * rhs[col][k].clone();
                rhs[row][k] = rhs[row][k].clone() - t;
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..rhs[col].len() {
            let mut s = rhs[col][k].clone();
            for j in col + 1..n {
                s = s - a[col][j].clone() * rhs[j][k].clone();
            }
            rhs[col][k] = s / a[col][col].clone();
        }
    }
    Ok(rhs)
}

#[derive(Clone)]
struct Condensed<T> {
    s: [[T; 3]; 3],
    r: [T; 3],
    touched: [bool; 3],
}

#[derive(Clone)]
struct Elimination<T> {
    free: [bool; 3],
    x: [[T; 3]; 3],
    y: [T; 3],
}

fn zero3<T: Scalar>() -> [T; 3] {
    [T::zero(), T::zero(), T::zero()]
}

fn zero33<T: Scalar>() -> [[T; 3]; 3] {
    [zero3(), zero3(), zero3()]
}

const CHILD_SLOTS: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];

/// Minimizes `(1/2) E_k(u) - sum_p w_p F(p) u(p)` over functions on the cells
/// of `mask`, with `fixed` values imposed where given. Free vertices on the
/// edge of the region receive the natural boundary condition; interior free
/// vertices satisfy `-Δ_k u = F`. Vertices outside the region are `NaN`.
pub fn solve_constrained_generic<T: Scalar>(
    mesh: &GasketMesh,
    mask: &DomainMask,
    fixed: &[Option<f64>],
    forcing: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let level = mesh.level();
    if mask.level != level || fixed.len() != mesh.num_vertices() {
        return Err(GasketError::LevelMismatch { expected: level, found: mask.level });
    }
    if let Some(f) = forcing {
        if f.len() != mesh.num_vertices() {
            return Err(GasketError::LevelMismatch { expected: level, found: u32::MAX });
        }
    }
    // corner ids per level, bottom-up
    let mut ids: Vec<Vec<[usize; 3]>> = vec![Vec::new(); level as usize + 1];
    ids[level as usize] = mesh.cells().to_vec();
    for j in (0..level as usize).rev() {
        let child = &ids[j + 1];
        ids[j] = (0..child.len() / 3)
            .map(|i| [child[3 * i][0], child[3 * i + 1][1], child[3 * i + 2][2]])
            .collect();
    }
    let fixed_t: Vec<Option<T>> = fixed.iter().map(|v| v.map(T::from_f64)).collect();
    for v in fixed.iter().flatten() {
        if !v.is_finite() {
            return Err(GasketError::InvalidParameter("non-finite boundary value".into()));
        }
    }
    // per-cell load: (1/3) mu(cell) F(p) scaled by (3/5)^k, i.e. F(p) / (3 * 5^k)
    let load = T::one() / T::from_f64(3.0 * 5f64.powi(level as i32));
    let leaf: Vec<Condensed<T>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            if !mask.contains_cell(c) {
                return Condensed { s: zero33(), r: zero3(), touched: [false; 3] };
            }
            let two = T::from_f64(2.0);
            let m1 = T::zero() - T::one();
            let s = [
                [two.clone(), m1.clone(), m1.clone()],
                [m1.clone(), two.clone(), m1.clone()],
                [m1.clone(), m1, two],
            ];
            let r = match forcing {
                Some(f) => ids[level as usize][c].map(|v| {
                    let fv = if f[v].is_finite() { f[v] } else { 0.0 };
                    load.clone() * T::from_f64(fv)
                }),
                None => zero3(),
            };
            Condensed { s, r, touched: [true; 3] }
        })
        .collect();

    let mut elims: Vec<Vec<Elimination<T>>> = vec![Vec::new(); level as usize];
    let mut cur = leaf;
    for j in (0..level as usize).rev() {
        let results: Vec<Result<(Condensed<T>, Elimination<T>)>> = (0..cur.len() / 3)
            .into_par_iter()
            .map(|i| {
                let kids = [&cur[3 * i], &cur[3 * i + 1], &cur[3 * i + 2]];
                let child_ids = [ids[j + 1][3 * i], ids[j + 1][3 * i + 1], ids[j + 1][3 * i + 2]];
                let mids = [child_ids[0][1], child_ids[0][2], child_ids[1][2]];
                merge_children(kids, mids, &fixed_t)
            })
            .collect();
        let mut next = Vec::with_capacity(results.len());
        let mut el = Vec::with_capacity(results.len());
        for r in results {
            let (c, e) = r?;
            next.push(c);
            el.push(e);
        }
        elims[j] = el;
        cur = next;
    }

    // root: solve for free touched corners of V0
    let root = &cur[0];
    let corners = ids[0][0];
    let mut u: Vec<Option<T>> = vec![None; mesh.num_vertices()];
    let mut free = Vec::new();
    for k in 0..3 {
        match &fixed_t[corners[k]] {
            Some(v) => u[corners[k]] = Some(v.clone()),
            None if root.touched[k] => free.push(k),
            None => {}
        }
    }
    if !free.is_empty() {
        let a: Vec<Vec<T>> = free.iter().map(|&p| free.iter().map(|&q| root.s[p][q].clone()).collect()).collect();
        let b: Vec<Vec<T>> = free
            .iter()
            .map(|&p| {
                let mut s = root.r[p].clone();
                for q in 0..3 {
                    if let Some(v) = &fixed_t[corners[q]] {
                        s = s - root.s[p][q].clone() * v.clone();
                    }
                }
                vec![s]
            })
            .collect();
        let sol = dense_solve(a, b)?;
        for (t, &p) in free.iter().enumerate() {
            u[corners[p]] = Some(sol[t][0].clone());
        }
    }

    // top-down recovery of eliminated midpoints
    for j in 0..level as usize {
        let updates: Vec<[Option<(usize, T)>; 3]> = elims[j]
            .par_iter()
            .enumerate()
            .map(|(i, e)| {
                let c = ids[j][i];
                let uc: [T; 3] = c.map(|v| u[v].clone().unwrap_or_else(T::zero));
                let mids = [ids[j + 1][3 * i][1], ids[j + 1][3 * i][2], ids[j + 1][3 * i + 1][2]];
                let mut out: [Option<(usize, T)>; 3] = [None, None, None];
                for t in 0..3 {
                    if e.free[t] {
                        let mut v = e.y[t].clone();
                        for k in 0..3 {
                            v = v - e.x[t][k].clone() * uc[k].clone();
                        }
                        out[t] = Some((mids[t], v));
                    } else if let Some(val) = &fixed_t[mids[t]] {
                        out[t] = Some((mids[t], val.clone()));
                    }
                }
                out
            })
            .collect();
        for (id, val) in updates.into_iter().flatten().flatten() {
            u[id] = Some(val);
        }
    }
    Ok(u
        .into_iter()
        .enumerate()
        .map(|(v, x)| match x {
            Some(val) if mask.contains_vertex(v) => val.to_f64(),
            _ => f64::NAN,
        })
        .collect())
}

fn merge_children<T: Scalar>(
    kids: [&Condensed<T>; 3],
    mids: [usize; 3],
    fixed: &[Option<T>],
) -> Result<(Condensed<T>, Elimination<T>)> {
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); 6]; 6];
    let mut r: Vec<T> = vec![T::zero(); 6];
    let mut touched = [false; 6];
    for (c, slots) in kids.iter().zip(CHILD_SLOTS) {
        for p in 0..3 {
            touched[slots[p]] |= c.touched[p];
            r[slots[p]] = r[slots[p]].clone() + c.r[p].clone();
            for q in 0..3 {
                k[slots[p]][slots[q]] = k[slots[p]][slots[q]].clone() + c.s[p][q].clone();
            }
        }
    }
    // substitute fixed midpoints
    for t in 0..3 {
        if let Some(val) = &fixed[mids[t]] {
            let col = 3 + t;
            for row in 0..6 {
                if row != col {
                    r[row] = r[row].clone() - k[row][col].clone() * val.clone();
                }
            }
        }
    }
    let free: [bool; 3] = std::array::from_fn(|t| touched[3 + t] && fixed[mids[t]].is_none());
    let fidx: Vec<usize> = (0..3).filter(|&t| free[t]).map(|t| 3 + t).collect();
    let mut elim = Elimination { free, x: zero33(), y: zero3() };
    let mut s: [[T; 3]; 3] = std::array::from_fn(|p| std::array::from_fn(|q| k[p][q].clone()));
    let mut rc: [T; 3] = std::array::from_fn(|p| r[p].clone());
    if !fidx.is_empty() {
        let a: Vec<Vec<T>> = fidx.iter().map(|&p| fidx.iter().map(|&q| k[p][q].clone()).collect()).collect();
        // columns: three corner couplings then the load
        let b: Vec<Vec<T>> = fidx
            .iter()
            .map(|&p| {
                let mut row: Vec<T> = (0..3).map(|q| k[p][q].clone()).collect();
                row.push(r[p].clone());
                row
            })
            .collect();
        let sol = dense_solve(a, b)?;
        for (t_i, &p) in fidx.iter().enumerate() {
            let t = p - 3;
            for q in 0..3 {
                elim.x[t][q] = sol[t_i][q].clone();
            }
            elim.y[t] = sol[t_i][3].clone();
        }
        for p in 0..3 {
            for (t_i, &f) in fidx.iter().enumerate() {
                let kpf = k[p][f].clone();
                if kpf.is_zero() {
                    continue;
                }
                for q in 0..3 {
                    s[p][q] = s[p][q].clone() - kpf.clone() * sol[t_i][q].clone();
                }
                rc[p] = rc[p].clone() - kpf * sol[t_i][3].clone();
            }
        }
    }
    let touched_c = [touched[0], touched[1], touched[2]];
    Ok((Condensed { s, r: rc, touched: touched_c }, elim))
}

/// Constrained minimization with the chosen backend. `ConjugateGradient`
/// requires every free vertex to be interior to the region.
pub fn solve_constrained(
    mesh: &GasketMesh,
    mask: &DomainMask,
    fixed: &[Option<f64>],
    forcing: Option<&[f64]>,
    kind: SolverKind,
) -> Result<MeshFunction> {
    let values = match kind {
        SolverKind::Direct => solve_constrained_generic::<f64>(mesh, mask, fixed, forcing)?,
        SolverKind::Exact => {
            if mesh.level() > EXACT_MAX_LEVEL {
                return Err(GasketError::LevelTooLarge { requested: mesh.level(), max: EXACT_MAX_LEVEL });
            }
            solve_constrained_generic::<BigRational>(mesh, mask, fixed, forcing)?
        }
        SolverKind::ConjugateGradient => conjugate_gradient(mesh, mask, fixed, forcing)?,
    };
    MeshFunction::from_values(mesh, values)
}

/// Dirichlet problem `-Δ_k u = F` inside `mask` with `u = boundary` on the
/// mask's boundary vertices.
pub fn solve_dirichlet_graph(
    mesh: &GasketMesh,
    mask: &DomainMask,
    boundary: &MeshFunction,
    forcing: Option<&MeshFunction>,
    kind: SolverKind,
) -> Result<MeshFunction> {
    boundary.check_level(mesh)?;
    if let Some(f) = forcing {
        f.check_level(mesh)?;
    }
    let bverts = mask.boundary();
    if bverts.is_empty() {
        return Err(GasketError::Singular("empty boundary".into()));
    }
    let mut fixed = vec![None; mesh.num_vertices()];
    for v in bverts {
        let val = boundary.get(v);
        if !val.is_finite() {
            return Err(GasketError::InvalidParameter(format!("boundary value missing at vertex {v}")));
        }
        fixed[v] = Some(val);
    }
    solve_constrained(mesh, mask, &fixed, forcing.map(|f| f.values.as_slice()), kind)
}

fn conjugate_gradient(
    mesh: &GasketMesh,
    mask: &DomainMask,
    fixed: &[Option<f64>],
    forcing: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let n = mesh.num_vertices();
    let free: Vec<usize> =
        (0..n).filter(|&v| mask.flag(v) != VertexFlag::Exterior && fixed[v].is_none()).collect();
    if free.iter().any(|&v| mask.flag(v) != VertexFlag::Interior) {
        return Err(GasketError::InvalidParameter(
            "conjugate gradient needs Dirichlet data on the whole region boundary".into(),
        ));
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in free.iter().enumerate() {
        pos[v] = i;
    }
    // interior rows of the graph Laplacian: 4u(p) - sum u(q) = F(p) / ((3/2) 5^k)
    let c = 1.0 / (1.5 * 5f64.powi(mesh.level() as i32));
    let mut b = vec![0.0; free.len()];
    for (i, &v) in free.iter().enumerate() {
        if let Some(f) = forcing {
            b[i] = c * if f[v].is_finite() { f[v] } else { 0.0 };
        }
        for &q in mesh.neighbors(v) {
            if let Some(val) = fixed[q] {
                b[i] += val;
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let v = free[i];
            let mut s = 4.0 * x[i];
            for &q in mesh.neighbors(v) {
                if pos[q] != usize::MAX {
                    s -= x[pos[q]];
                }
            }
            *o = s;
        });
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; free.len()];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; free.len()];
    let bnorm = dot(&b, &b).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    let max_iter = 50 * n;
    let mut it = 0;
    while rr.sqrt() > CG_TOLERANCE * bnorm {
        if it >= max_iter {
            return Err(GasketError::NotConverged { iterations: it, residual: rr.sqrt() / bnorm });
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        it += 1;
    }
    let mut out = vec![f64::NAN; n];
    for v in 0..n {
        if mask.contains_vertex(v) {
            if let Some(val) = fixed[v] {
                out[v] = val;
            }
        }
    }
    for (i, &v) in free.iter().enumerate() {
        out[v] = x[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{graph_energy, laplacian_at};

    fn v0_boundary(mesh: &GasketMesh, vals: [f64; 3]) -> MeshFunction {
        let mut f = MeshFunction::undefined(mesh);
        for (v, x) in mesh.boundary_vertices().iter().zip(vals) {
            f.values[*v] = x;
        }
        f
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let mesh = GasketMesh::build(4).unwrap();
        let mask = DomainMask::full(&mesh);
        let u = solve_dirichlet_graph(&mesh, &mask, &v0_boundary(&mesh, [2.5; 3]), None, SolverKind::Direct)
            .unwrap();
        assert!(u.values.iter().all(|&x| (x - 2.5).abs() < 1e-13));
    }

    #[test]
    fn matches_harmonic_extension_and_cg() {
        let mesh = GasketMesh::build(5).unwrap();
        let mask = DomainMask::full(&mesh);
        let bd = v0_boundary(&mesh, [1.0, 0.0, -0.5]);
        let direct = solve_dirichlet_graph(&mesh, &mask, &bd, None, SolverKind::Direct).unwrap();
        let cg = solve_dirichlet_graph(&mesh, &mask, &bd, None, SolverKind::ConjugateGradient).unwrap();
        let mut ext = vec![0.0; mesh.num_vertices()];
        crate::mesh::fill_harmonic(&mesh, crate::mesh::Cell::ROOT, [1.0, 0.0, -0.5], &mut ext);
        for v in 0..mesh.num_vertices() {
            assert!((direct.values[v] - ext[v]).abs() < 1e-13);
            assert!((cg.values[v] - ext[v]).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_mode_agrees() {
        let mesh = GasketMesh::build(3).unwrap();
        let mask = DomainMask::full(&mesh);
        let bd = v0_boundary(&mesh, [0.0; 3]);
        let f = MeshFunction::constant(&mesh, 1.0);
        let a = solve_dirichlet_graph(&mesh, &mask, &bd, Some(&f), SolverKind::Direct).unwrap();
        let b = solve_dirichlet_graph(&mesh, &mask, &bd, Some(&f), SolverKind::Exact).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
        for v in 0..mesh.num_vertices() {
            if !mesh.is_v0(v) {
                assert!((laplacian_at(&mesh, &b, v) + 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn natural_condition_minimizes_energy() {
        // V0 data (1, 0, t) has energy 1 + (1-t)^2 + t^2, minimal at t = 1/2
        let mesh = GasketMesh::build(3).unwrap();
        let mask = DomainMask::full(&mesh);
        let mut fixed = vec![None; mesh.num_vertices()];
        let [q0, q1, q2] = mesh.boundary_vertices();
        fixed[q0] = Some(1.0);
        fixed[q1] = Some(0.0);
        let u = solve_constrained(&mesh, &mask, &fixed, None, SolverKind::Direct).unwrap();
        assert!((u.values[q2] - 0.5).abs() < 1e-13);
        let e = graph_energy(&mesh, &u, None).unwrap();
        assert!((e - 1.5).abs() < 1e-12);
    }

    #[test]
    fn floating_region_is_singular() {
        let mesh = GasketMesh::build(2).unwrap();
        let mask = DomainMask::full(&mesh);
        let fixed = vec![None; mesh.num_vertices()];
        assert!(solve_constrained(&mesh, &mask, &fixed, None, SolverKind::Direct).is_err());
    }
}
