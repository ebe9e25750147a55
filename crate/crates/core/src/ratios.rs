//! The ratio `m0(x)`: the value at the two bottom corners of the top cell of
//! the harmonic function on `Ω_x` equal to 1 at `q0` and 0 on `S(x)`.
//!
//! Writing `y_j` for the `j`-fold shift of `x` and `g_k = n_k - n_{k-1}` for
//! the gaps, the ratios satisfy `m0(y_j) = Φ_{g_{j+2}}(m0(y_{j+1}))` with
//! `Φ_g(t) = 1 / (1 + 2 (5/3)^g (1 - t))`. A truncated sequence ends with a
//! single-term domain whose ratio is 0, and the recursion is evaluated
//! upwards from there. A periodic sequence closes the recursion into a
//! Möbius fixed point, solved as a quadratic.

use serde::Serialize;

use crate::dyadic::DyadicSequence;
use crate::error::{GasketError, Result};

pub const M0_MAX: f64 = 0.3;

fn phi(gap: u32, t: f64) -> f64 {
    1.0 / (1.0 + 2.0 * (5.0f64 / 3.0).powi(gap as i32) * (1.0 - t))
}

/// `m1 = (1 - m0^2)/(2 m0 + 1)` and `m2 = (m0 - m0^2)/(2 m0 + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioTriple {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

impl RatioTriple {
    pub fn from_m0(m0: f64) -> Self {
        let d = 2.0 * m0 + 1.0;
        Self { m0, m1: (1.0 - m0 * m0) / d, m2: (m0 - m0 * m0) / d }
    }

    /// `m1 - m2 = (1 - m0)/(2 m0 + 1)`.
    pub fn difference(&self) -> f64 {
        (1.0 - self.m0) / (2.0 * self.m0 + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioTable {
    /// `m0(y_0), ..., m0(y_{K-1})` with `y_0 = x`.
    pub m0_per_level: Vec<f64>,
    /// Per-level error estimate: the change from dropping the last exponent
    /// for truncated sequences, the fixed-point residual for periodic ones.
    pub est_error: Vec<f64>,
    pub depth: usize,
    pub exact: bool,
}

impl RatioTable {
    pub fn compute(seq: &DyadicSequence) -> Result<Self> {
        let k = seq.depth();
        if seq.is_periodic() {
            let (vals, resid) = periodic_table(seq, k);
            return Ok(Self { m0_per_level: vals, est_error: vec![resid; k], depth: k, exact: true });
        }
        let full = truncated_table(seq, k);
        let est_error = if k >= 2 {
            let shorter = truncated_table(seq, k - 1);
            (0..k).map(|j| if j < k - 1 { (full[j] - shorter[j]).abs() } else { 0.0 }).collect()
        } else {
            vec![0.0; k]
        };
        Ok(Self { m0_per_level: full, est_error, depth: k, exact: false })
    }

    pub fn m0(&self, j: usize) -> f64 {
        self.m0_per_level[j]
    }

    pub fn triple(&self, j: usize) -> RatioTriple {
        RatioTriple::from_m0(self.m0_per_level[j])
    }

    pub fn to_json(&self) -> serde_json::Value {
        let levels: Vec<serde_json::Value> = (0..self.depth)
            .map(|j| {
                let t = self.triple(j);
                serde_json::json!({
                    "level": j, "m0": t.m0, "m1": t.m1, "m2": t.m2, "error": self.est_error[j]
                })
            })
            .collect();
        serde_json::json!({ "depth": self.depth, "exact": self.exact, "levels": levels })
    }
}

/// `m0(y_j)` for `j < depth`, using only the first `depth` exponents.
fn truncated_table(seq: &DyadicSequence, depth: usize) -> Vec<f64> {
    let mut vals = vec![0.0; depth];
    for j in (0..depth.saturating_sub(1)).rev() {
        vals[j] = phi(seq.gap(j + 2).expect("within depth"), vals[j + 1]);
    }
    vals
}

fn periodic_table(seq: &DyadicSequence, depth: usize) -> (Vec<f64>, f64) {
    // gaps from index j0 + 2 on are periodic
    let cycle_len = seq.cycle_gaps().len();
    let j0 = seq.head_gaps().len().saturating_sub(1);
    // Möbius matrix of Φ_{g(j0+2)} ∘ ... ∘ Φ_{g(j0+1+r)}
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..cycle_len {
        let rho = (5.0f64 / 3.0).powi(seq.gap(j0 + 2 + i).unwrap() as i32);
        let a = [[0.0, 1.0], [-2.0 * rho, 1.0 + 2.0 * rho]];
        m = [
            [m[0][0] * a[0][0] + m[0][1] * a[1][0], m[0][0] * a[0][1] + m[0][1] * a[1][1]],
            [m[1][0] * a[0][0] + m[1][1] * a[1][0], m[1][0] * a[0][1] + m[1][1] * a[1][1]],
        ];
    }
    // t = (A t + B)/(C t + D)  <=>  C t^2 + (D - A) t - B = 0
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let (qa, qb, qc) = (c, d - a, -b);
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    let q = -0.5 * (qb + qb.signum() * disc);
    let roots = [q / qa, qc / q];
    let mut t = roots
        .iter()
        .copied()
        .filter(|r| r.is_finite() && *r >= -1e-9 && *r <= M0_MAX + 1e-9)
        .fold(f64::NAN, |acc, r| if acc.is_nan() { r } else { acc.min(r) });
    if !t.is_finite() {
        t = 0.0;
    }
    let cycle = |t: f64| {
        let mut v = t;
        for i in (0..cycle_len).rev() {
            v = phi(seq.gap(j0 + 2 + i).unwrap(), v);
        }
        v
    };
    for _ in 0..4 {
        t = cycle(t);
    }
    let resid = (cycle(t) - t).abs();
    // fill j0..j0+r-1 from the cycle, then the head below j0
    let span = (j0 + cycle_len).max(depth);
    let mut vals = vec![0.0; span + 1];
    vals[j0 + cycle_len] = t;
    for j in (0..j0 + cycle_len).rev() {
        vals[j] = phi(seq.gap(j + 2).unwrap(), vals[j + 1]);
    }
    for j in j0 + cycle_len + 1..=span {
        vals[j] = vals[j0 + (j - j0) % cycle_len];
    }
    vals.truncate(depth);
    (vals, resid)
}

/// `m0(x)` with its error bound; see [`RatioTable`].
pub fn m0(seq: &DyadicSequence) -> Result<(f64, f64)> {
    if !seq.is_periodic() && seq.depth() < 2 {
        return Err(GasketError::SequenceTooShort { needed: 2, have: seq.depth() });
    }
    let t = RatioTable::compute(seq)?;
    Ok((t.m0(0), t.est_error[0]))
}

pub fn ratio_triple(seq: &DyadicSequence) -> Result<RatioTriple> {
    Ok(RatioTriple::from_m0(m0(seq)?.0))
}

/// Residual of `(1 - m0(y)) m0(x) = (1/2)(5/3)^{n1 - n2}(1 - m0(x))`.
pub fn shift_identity_residual(seq: &DyadicSequence) -> Result<f64> {
    if !seq.is_periodic() && seq.depth() < 3 {
        return Err(GasketError::SequenceTooShort { needed: 3, have: seq.depth() });
    }
    let t = RatioTable::compute(seq)?;
    let (mx, my) = (t.m0(0), t.m0(1));
    let g = seq.gap(2).expect("depth >= 2");
    Ok(((1.0 - my) * mx - 0.5 * (0.6f64).powi(g as i32) * (1.0 - mx)).abs())
}

/// `6 * 2^m (5/3)^{n_{m+1}} (1 - m0(y_m)) / (2 m0(y_m) + 1)`.
pub fn dtn_multiplier(seq: &DyadicSequence, m: usize) -> Result<f64> {
    let t = RatioTable::compute(seq)?;
    dtn_multiplier_with(seq, &t, m)
}

pub fn dtn_multiplier_with(seq: &DyadicSequence, table: &RatioTable, m: usize) -> Result<f64> {
    if m >= seq.depth() {
        return Err(GasketError::WordTooDeep { len: m, depth: seq.depth() });
    }
    let r = table.triple(m);
    Ok(6.0 * 2f64.powi(m as i32) * (5.0f64 / 3.0).powi(seq.n(m + 1) as i32) * r.difference())
}

/// `(x, m0(x))` on an even grid, for plotting.
pub fn sweep(from: f64, to: f64, count: usize, depth: usize) -> Result<Vec<(f64, f64)>> {
    if count == 0 || !(from > 0.0 && to <= 1.0 && from <= to) {
        return Err(GasketError::InvalidParameter(format!("bad sweep {from}:{to}:{count}")));
    }
    (0..count)
        .map(|i| {
            let x = if count == 1 { from } else { from + (to - from) * i as f64 / (count - 1) as f64 };
            let seq = DyadicSequence::from_value(x, depth)?;
            let v = if seq.is_periodic() || seq.depth() >= 2 { m0(&seq)?.0 } else { 0.0 };
            Ok((x, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Independent oracle: evaluate the nested fraction top-down by recursion.
    fn oracle_m0(exps: &[u32]) -> f64 {
        if exps.len() < 2 {
            return 0.0;
        }
        let inner = oracle_m0(&exps[1..].iter().map(|n| n - exps[0]).collect::<Vec<_>>());
        let r = (5.0f64 / 3.0).powi((exps[1] - exps[0]) as i32);
        1.0 / (1.0 + 2.0 * r * (1.0 - inner))
    }

    #[test]
    fn golden_x_equals_one() {
        let seq = DyadicSequence::from_value(1.0, 16).unwrap();
        let (v, err) = m0(&seq).unwrap();
        assert_abs_diff_eq!(v, 0.3, epsilon = 1e-14);
        assert!(err < 1e-14);
        let t = ratio_triple(&seq).unwrap();
        assert_abs_diff_eq!(t.m1, 91.0 / 160.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.m2, 21.0 / 160.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dtn_multiplier(&seq, 0).unwrap(), 35.0 / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dtn_multiplier(&seq, 1).unwrap(), 175.0 / 12.0, epsilon = 1e-12);
    }

    #[test]
    fn truncated_x_one_converges() {
        let seq = DyadicSequence::from_exponents(&(1..=40).collect::<Vec<_>>()).unwrap();
        assert_abs_diff_eq!(m0(&seq).unwrap().0, 0.3, epsilon = 1e-14);
    }

    #[test]
    fn periodic_table_matches_long_truncation() {
        let p = DyadicSequence::with_cycle(&[2, 1], &[3, 1, 2], 12).unwrap();
        let exps = p.with_depth(80).unwrap().exponents();
        let long = DyadicSequence::from_exponents(&exps).unwrap();
        let a = RatioTable::compute(&p).unwrap();
        let b = RatioTable::compute(&long).unwrap();
        for j in 0..12 {
            assert_abs_diff_eq!(a.m0(j), b.m0(j), epsilon = 1e-13);
        }
    }

    #[test]
    fn large_gap_decay() {
        for n2 in [5u32, 10, 20, 30] {
            let seq = DyadicSequence::from_exponents(&[1, n2]).unwrap();
            let v = m0(&seq).unwrap().0;
            let ratio = v / (5.0f64 / 3.0).powi(1 - n2 as i32);
            assert!(ratio > 0.25 && ratio < 1.0, "n2 = {n2}: {ratio}");
        }
    }

    #[test]
    fn residual_examples() {
        let one = DyadicSequence::from_value(1.0, 10).unwrap();
        assert!(shift_identity_residual(&one).unwrap() < 1e-10);
        let s = DyadicSequence::from_exponents(&[2, 5, 6, 9]).unwrap();
        assert!(shift_identity_residual(&s).unwrap() < 1e-9);
    }

    #[test]
    fn zero_limit_triple() {
        let t = RatioTriple::from_m0(0.0);
        assert_eq!((t.m0, t.m1, t.m2), (0.0, 1.0, 0.0));
    }

    fn random_seq() -> impl Strategy<Value = DyadicSequence> {
        proptest::collection::vec(1u32..6, 2..20).prop_map(|gaps| {
            let mut n = 0;
            let exps: Vec<u32> = gaps
                .iter()
                .map(|g| {
                    n += g;
                    n
                })
                .collect();
            DyadicSequence::from_exponents(&exps).unwrap()
        })
    }

    proptest! {
        #[test]
        fn matches_recursive_oracle(seq in random_seq()) {
            let v = m0(&seq).unwrap().0;
            prop_assert!((v - oracle_m0(&seq.exponents())).abs() < 1e-14);
        }

        #[test]
        fn bounds_and_sum(seq in random_seq()) {
            let table = RatioTable::compute(&seq).unwrap();
            for j in 0..table.depth {
                let t = table.triple(j);
                prop_assert!((0.0..=M0_MAX).contains(&t.m0));
                prop_assert!((t.m0 + t.m1 + t.m2 - 1.0).abs() < 1e-12);
                prop_assert!(t.difference() >= 7.0 / 16.0 - 1e-15);
            }
        }

        #[test]
        fn successive_truncations_within_bound(seq in random_seq()) {
            let k = seq.depth();
            let (v, err) = m0(&seq).unwrap();
            let shorter = m0(&seq.with_depth(k - 1).unwrap()).map(|p| p.0).unwrap_or(0.0);
            prop_assert!((v - shorter).abs() <= err + 1e-15);
        }

        #[test]
        fn multiplier_positive(seq in random_seq(), m in 0usize..20) {
            let m = m % seq.depth();
            prop_assert!(dtn_multiplier(&seq, m).unwrap() > 0.0);
        }
    }
}
