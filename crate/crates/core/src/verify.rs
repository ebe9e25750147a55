//! Named check groups with pinned tolerances, shared by the CLI and the
//! acceptance tests.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{hausdorff_deficit, hausdorff_dimension, DyadicSequence, Word};
use crate::error::{GasketError, Result};
use crate::extension::{
    added_energy_closed_form, extend, extend_basis, glue, obstruction_experiment, BasisTarget,
};
use crate::flux::{finite_difference_flux, gauss_green_check};
use crate::greens::{reproducing_check, solution_flux, BoundaryWeights, GreenKernel};
use crate::harmonics::{HaarSpectrum, HarmonicBasis};
use crate::mesh::{graph_energy, graph_energy_pair, DomainMask, GasketMesh, MeshFunction, VertexFlag};
use crate::ratios::{dtn_multiplier, shift_identity_residual, RatioTable, M0_MAX};
use crate::solver::{solve_dirichlet_graph, SolverKind};

/// Tolerances used by the checks.
pub mod tol {
    pub const RATIO_SUM: f64 = 1e-12;
    /// Shift identity residual against the truncation error estimate.
    pub const SHIFT_FACTOR: f64 = 10.0;
    pub const GOLDEN: f64 = 1e-10;
    pub const ORACLE_SUP: f64 = 1e-7;
    pub const ENERGY_REL: f64 = 0.01;
    pub const ORTHOGONAL_REL: f64 = 1e-8;
    pub const GAUSS_GREEN: f64 = 1e-5;
    pub const DTN_VS_ENERGY: f64 = 1e-9;
    pub const FLUX_LEVEL: f64 = 1e-9;
    pub const ADDED_ENERGY: f64 = 1e-9;
    pub const GROWTH_RANGE: (f64, f64) = (1.4, 2.0);
    pub const HARMONIC_RESIDUAL: f64 = 1e-8;
    pub const HAUSDORFF_GOLDEN: f64 = 1e-10;
    pub const HAUSDORFF_AT_50: f64 = 0.999;
    pub const REPRODUCING: f64 = 1e-7;
    pub const WEIGHT_IDENTITIES: f64 = 1e-10;
    pub const GREEN_REL_SUP: f64 = 0.02;
    pub const TRACE_MATCH: f64 = 1e-10;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Ratios,
    Golden,
    Oracle,
    Energies,
    Dtn,
    Glue,
    Extension,
    Hausdorff,
    Green,
}

impl Group {
    pub const ALL: [Group; 9] = [
        Group::Ratios,
        Group::Golden,
        Group::Oracle,
        Group::Energies,
        Group::Dtn,
        Group::Glue,
        Group::Extension,
        Group::Hausdorff,
        Group::Green,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::Ratios => "ratios",
            Group::Golden => "golden",
            Group::Oracle => "oracle",
            Group::Energies => "energies",
            Group::Dtn => "dtn",
            Group::Glue => "glue",
            Group::Extension => "extension",
            Group::Hausdorff => "hausdorff",
            Group::Green => "green",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| GasketError::Parse(format!("unknown check group '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Number of random samples; `None` uses each group's default.
    pub trials: Option<usize>,
    pub x: Option<f64>,
    pub m: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 42, trials: None, x: None, m: None }
    }
}

impl VerifyConfig {
    fn rng(&self, group: Group) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (group as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

/// One measured quantity compared against a bound.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, passed: value <= bound }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, passed: value >= bound }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), value: v, bound: 1.0, passed: ok }
    }

    /// A recorded quantity with no pass criterion beyond being finite.
    pub fn record(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, bound: f64::INFINITY, passed: value.is_finite() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub group: Group,
    pub checks: Vec<Check>,
    pub seconds: f64,
    pub passed: bool,
}

impl fmt::Display for GroupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {} ({:.2} s)", if self.passed { "PASS" } else { "FAIL" }, self.group, self.seconds)?;
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            if c.bound.is_finite() {
                writeln!(f, "  {mark} {:<44} {:>14.6e}  bound {:.3e}", c.name, c.value, c.bound)?;
            } else {
                writeln!(f, "  {mark} {:<44} {:>14.6e}", c.name, c.value)?;
            }
        }
        Ok(())
    }
}

pub fn run(group: Group, cfg: &VerifyConfig) -> Result<GroupReport> {
    let start = Instant::now();
    let checks = match group {
        Group::Ratios => ratios(cfg)?,
        Group::Golden => golden()?,
        Group::Oracle => oracle(cfg)?,
        Group::Energies => energies(cfg)?,
        Group::Dtn => dtn(cfg)?,
        Group::Glue => glue_checks(cfg)?,
        Group::Extension => extension(cfg)?,
        Group::Hausdorff => hausdorff()?,
        Group::Green => green(cfg)?,
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(GroupReport { group, checks, seconds: start.elapsed().as_secs_f64(), passed })
}

pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<GroupReport>> {
    Group::ALL.iter().map(|&g| run(g, cfg)).collect()
}

/// Truncated sequence with random gaps in `1..=max_gap`.
pub fn random_sequence(rng: &mut impl Rng, depth: usize, max_gap: u32) -> DyadicSequence {
    let mut n = 0;
    let exps: Vec<u32> = (0..depth)
        .map(|_| {
            n += rng.gen_range(1..=max_gap);
            n
        })
        .collect();
    DyadicSequence::from_exponents(&exps).expect("increasing exponents")
}

/// Random sequence whose runs of consecutive exponents are shorter than `n`
/// and stop at least one exponent before the end.
fn random_nonconsecutive(rng: &mut impl Rng, depth: usize, n: usize) -> DyadicSequence {
    loop {
        let mut exps = Vec::with_capacity(depth);
        let mut cur = rng.gen_range(1..=3u32);
        let mut run = 1;
        exps.push(cur);
        while exps.len() < depth {
            let gap = if run + 1 < n && rng.gen_bool(0.5) { 1 } else { rng.gen_range(2..=3) };
            run = if gap == 1 { run + 1 } else { 1 };
            cur += gap;
            exps.push(cur);
        }
        let seq = DyadicSequence::from_exponents(&exps).expect("increasing exponents");
        if seq.gap(depth) != Some(1) && seq.nonconsecutive_bound().is_some() {
            return seq;
        }
    }
}

fn random_word(rng: &mut impl Rng, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    Word::from_index(rng.gen_range(0..1usize << len), len)
}

fn random_spectrum(rng: &mut impl Rng, terms: usize, max_len: usize) -> HaarSpectrum {
    let mut s = HaarSpectrum { a: rng.gen_range(-1.0..1.0), b: rng.gen_range(-1.0..1.0), ..Default::default() };
    let available = (1usize << (max_len + 1)) - 1;
    while s.coeffs.len() < terms.min(available) {
        s = s.with_coeff(random_word(rng, max_len), rng.gen_range(-1.0..1.0));
    }
    s
}

fn ratios(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = cfg.rng(Group::Ratios);
    let (mut lo, mut hi, mut sum_err, mut shift) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for _ in 0..cfg.trials(1000) {
        let depth = rng.gen_range(3..=20);
        let seq = random_sequence(&mut rng, depth, 4);
        let table = RatioTable::compute(&seq)?;
        for j in 0..table.depth {
            let t = table.triple(j);
            lo = lo.min(t.m0);
            hi = hi.max(t.m0);
            sum_err = sum_err.max((t.m0 + t.m1 + t.m2 - 1.0).abs());
        }
        // the identity is exact for the truncated sequence, so the error estimate
        // is floored at one ulp of the values involved
        let bound = tol::SHIFT_FACTOR * table.est_error[0].max(f64::EPSILON);
        shift = shift.max(shift_identity_residual(&seq)? / bound);
    }
    Ok(vec![
        Check::at_least("min m0", lo, 0.0),
        Check::at_most("max m0", hi, M0_MAX),
        Check::at_most("max |m0+m1+m2-1|", sum_err, tol::RATIO_SUM),
        Check::at_most("max shift residual / (10 x truncation error)", shift, 1.0),
    ])
}

fn golden() -> Result<Vec<Check>> {
    let seq = DyadicSequence::from_value(1.0, 12)?;
    let basis = HarmonicBasis::new(&seq)?;
    let t = basis.table().triple(0);
    let w: Word = "1".parse()?;
    let cases = [
        ("m0 - 3/10", t.m0, 0.3),
        ("m1 - 91/160", t.m1, 91.0 / 160.0),
        ("m2 - 21/160", t.m2, 21.0 / 160.0),
        ("E(h0) - 7/3", basis.energy_h0().value, 7.0 / 3.0),
        ("E(h1) - 35/8", basis.energy_h1().value, 35.0 / 8.0),
        ("E(h_1) - 175/12", basis.energy_h_omega(&w)?.value, 175.0 / 12.0),
        ("multiplier(0) - 35/8", dtn_multiplier(&seq, 0)?, 35.0 / 8.0),
    ];
    Ok(cases.iter().map(|(n, v, e)| Check::at_most(*n, (v - e).abs(), tol::GOLDEN)).collect())
}

fn oracle(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = cfg.rng(Group::Oracle);
    let mut worst = 0.0f64;
    for _ in 0..cfg.trials(20) {
        let (seq, level) = loop {
            let depth = rng.gen_range(2..=4);
            let seq = random_sequence(&mut rng, depth, 2);
            let level = seq.n(depth) + 4;
            if level <= 10 {
                break (seq, level);
            }
        };
        let spectrum = random_spectrum(&mut rng, 4, seq.depth() - 1);
        let mesh = GasketMesh::shared(level)?;
        let h = HarmonicBasis::new(&seq)?.synthesize(&mesh, &spectrum)?;
        let mask = DomainMask::omega(&mesh, &seq, seq.depth())?;
        let u = solve_dirichlet_graph(&mesh, &mask, &h, None, SolverKind::Direct)?;
        worst = worst.max(u.max_abs_diff(&h));
    }
    Ok(vec![Check::at_most("max sup |synthesized - graph solve|", worst, tol::ORACLE_SUP)])
}

/// Number of exponents resolved at `level`.
fn resolved_depth(seq: &DyadicSequence, level: u32) -> usize {
    (1..).take_while(|&k| seq.exponent(k).is_some_and(|n| n <= level)).count()
}

/// Finest level used by the energy group.
const ENERGY_MAX_LEVEL: u32 = 12;

fn energies(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let patterns: Vec<(&str, DyadicSequence)> = match cfg.x {
        Some(x) => vec![("x", DyadicSequence::from_value(x, 64)?)],
        None => vec![
            ("x=1", DyadicSequence::from_value(1.0, 64)?),
            ("odd", DyadicSequence::arithmetic(1, 2, 64)?),
            ("periodic 1,2", DyadicSequence::periodic(&[1, 2], 64)?),
        ],
    };
    for (label, seq) in patterns {
        let basis = HarmonicBasis::new(&seq)?;
        let words: Vec<Word> = ["", "1", "2", "12"].iter().map(|w| w.parse()).collect::<Result<_>>()?;
        let k_top = (1..seq.depth()).take_while(|&k| seq.n(k) + 5 <= ENERGY_MAX_LEVEL).last().unwrap_or(1);
        let top = seq.n(k_top) + 5;
        let mut prev = vec![0.0; 2 + words.len()];
        let mut monotone = true;
        let mut last = Vec::new();
        for level in seq.n(1)..=top {
            let k = resolved_depth(&seq, level);
            let mesh = GasketMesh::shared(level)?;
            let mut fs = vec![basis.h0_on(&mesh, k)?];
            for w in &words {
                fs.push(if w.len() < k { basis.h_omega_on(&mesh, w, k)? } else { MeshFunction::constant(&mesh, 0.0) });
            }
            let mask = DomainMask::omega(&mesh, &seq, k)?;
            let e: Vec<f64> = fs.iter().map(|f| graph_energy(&mesh, f, Some(&mask))).collect::<Result<_>>()?;
            monotone &= e.iter().zip(&prev).all(|(a, b)| *a >= *b - 1e-12 * f64::abs(*b));
            prev = e.clone();
            if level == top {
                let mut cross = 0.0f64;
                for i in 0..fs.len() {
                    for j in 0..i {
                        let c = graph_energy_pair(&mesh, &fs[i], &fs[j], Some(&mask))?;
                        let g = (e[i] * e[j]).sqrt();
                        if g > 0.0 {
                            cross = cross.max(c.abs() / g);
                        }
                    }
                }
                checks.push(Check::at_most(format!("{label}: max relative cross-energy"), cross, tol::ORTHOGONAL_REL));
                last = e;
            }
        }
        checks.push(Check::flag(format!("{label}: energies nondecreasing in level"), monotone));
        let mut closed = vec![basis.energy_h0().value];
        for w in &words {
            closed.push(basis.energy_h_omega(w)?.value);
        }
        let rel = last.iter().zip(&closed).map(|(g, c)| (g - c).abs() / c).fold(0.0, f64::max);
        checks.push(Check::at_most(format!("{label}: relative gap to closed forms at n_K+5"), rel, tol::ENERGY_REL));
    }
    Ok(checks)
}

fn dtn(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = cfg.rng(Group::Dtn);
    let trials = cfg.trials(20);
    let (mut gg, mut mult) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let depth = rng.gen_range(2..=4);
        let seq = random_sequence(&mut rng, depth, 2);
        let level = (seq.n(depth) + 2).min(10);
        let mesh = GasketMesh::shared(level)?;
        let spectrum = random_spectrum(&mut rng, 4, depth - 1);
        let v = MeshFunction { level, values: (0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let g = gauss_green_check(&mesh, &seq, &spectrum, &v)?;
        gg = gg.max(g.residual / g.energy.abs().max(1.0));
        let basis = HarmonicBasis::new(&seq)?;
        for m in 0..depth {
            let w = random_word(&mut rng, m);
            let w = Word::from_index(w.index() % (1 << m), m);
            let e = basis.energy_h_omega(&w)?.value;
            mult = mult.max((dtn_multiplier(&seq, m)? - e).abs() / e.max(1.0));
        }
    }
    let fd = flux_level_spread(&mut rng, trials)?;
    Ok(vec![
        Check::at_most("Gauss-Green residual (relative to max(1,|E|))", gg, tol::GAUSS_GREEN),
        Check::at_most("|multiplier - E(h_w)| / max(1, E)", mult, tol::DTN_VS_ENERGY),
        Check::at_most("finite-difference flux spread across levels", fd, tol::FLUX_LEVEL),
    ])
}

/// Largest relative spread of the finite-difference flux of `h0`, `h1` and
/// `h_ω` over the levels from `n_K` to `n_K + 3`.
fn flux_level_spread(rng: &mut ChaCha8Rng, trials: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..trials.min(10) {
        let depth = rng.gen_range(2..=4);
        let seq = random_sequence(rng, depth, 2);
        let basis = HarmonicBasis::new(&seq)?;
        let top = (seq.n(depth) + 3).min(10);
        let words: Vec<Word> = (0..depth).map(|m| Word::from_index(rng.gen_range(0..1 << m), m)).collect();
        for w in &words {
            let mut reference: Option<Vec<Vec<f64>>> = None;
            for level in seq.n(depth)..=top {
                let mesh = GasketMesh::shared(level)?;
                let fs = [basis.h0(&mesh)?, basis.h_omega(&mesh, w)?];
                let d: Vec<Vec<f64>> = fs
                    .iter()
                    .flat_map(|f| (0..depth).map(move |m| (f, m)))
                    .map(|(f, m)| finite_difference_flux(&mesh, f, &seq, m))
                    .collect::<Result<_>>()?;
                if let Some(r) = &reference {
                    for (a, b) in r.iter().zip(&d) {
                        let s = a.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
                        let diff = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                        worst = worst.max(diff / s);
                    }
                } else {
                    reference = Some(d);
                }
            }
        }
    }
    Ok(worst)
}

fn glue_checks(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = cfg.rng(Group::Glue);
    let mut checks = Vec::new();
    let seq = DyadicSequence::from_exponents(&[1, 3, 5, 7, 9])?;
    let mesh = GasketMesh::shared(9)?;
    let c = MeshFunction::constant(&mesh, 1.25);
    let g = glue(&mesh, &c, &c, &seq)?;
    let strip_max = g.strips.iter().map(|s| s.strip).fold(0.0, f64::max);
    checks.push(Check::at_most("constants: total energy", g.energy_total, 0.0));
    checks.push(Check::at_most("constants: largest strip energy", strip_max, 0.0));

    let h = HarmonicBasis::new(&seq)?.h0(&mesh)?;
    let g = glue(&mesh, &h, &MeshFunction::constant(&mesh, 0.0), &seq)?;
    let split = (g.energy_total - g.energy_upper - g.energy_lower).abs();
    checks.push(Check::at_most("h0|0: |E - E+ - E-|", split, 1e-12 * g.energy_total));
    let decreasing = g.strips.windows(2).all(|w| w[1].strip < w[0].strip);
    checks.push(Check::flag("h0|0: strip energies strictly decreasing in m", decreasing));

    // random harmonic data above, its extension below
    let mut worst = 0.0f64;
    let mut positive = true;
    for _ in 0..cfg.trials(10) {
        let s = random_spectrum(&mut rng, 3, 3);
        let upper = HarmonicBasis::new(&seq)?.synthesize(&mesh, &s)?;
        let (lower, _) = extend(&mesh, &seq, &s)?;
        let g = glue(&mesh, &upper, &lower, &seq)?;
        for st in &g.strips {
            let denom = st.above + st.below;
            if denom > 0.0 {
                worst = worst.max(st.strip / denom);
            }
            positive &= st.strip >= 0.0;
        }
    }
    checks.push(Check::flag("random pairs: strip energies nonnegative", positive));
    checks.push(Check::record("random pairs: max strip / (above + below)", worst));
    Ok(checks)
}

fn extension(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = cfg.rng(Group::Extension);
    let mut checks = Vec::new();
    // n_m = 2m - 1
    let seq = DyadicSequence::from_exponents(&[1, 3, 5, 7])?;
    let mesh = GasketMesh::shared(8)?;
    let ext = extend_basis(&mesh, &seq, &BasisTarget::Omega(Word::empty()))?;
    let below = DomainMask::below(&mesh, &seq, seq.depth())?;
    let added = graph_energy(&mesh, &ext, Some(&below))?;
    let target = 8.0 * (5.0f64 / 3.0).powi(2);
    checks.push(Check::at_most("n_m=2m-1: |added energy - 8(5/3)^2|", (added - target).abs(), tol::ADDED_ENERGY));

    let n = 2;
    let (mut lo, mut hi, mut graph_gap) = (f64::INFINITY, 0.0f64, 0.0f64);
    for i in 0..cfg.trials(100) {
        let depth = rng.gen_range(3..=6);
        let seq = random_nonconsecutive(&mut rng, depth, n);
        let mut m = rng.gen_range(0..depth - 1);
        while m + seq.run_length_from(m) >= depth {
            m -= 1;
        }
        let w = Word::from_index(rng.gen_range(0..1 << m), m);
        let basis = HarmonicBasis::new(&seq)?;
        let total = basis.energy_h_omega(&w)?.value + added_energy_closed_form(&seq, m);
        let ratio = total / (2f64.powi(m as i32) * (5.0f64 / 3.0).powi(seq.n(m + 1) as i32));
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        let level = seq.n(depth);
        if i < 10 && level <= 9 {
            let mesh = GasketMesh::shared(level)?;
            let e = graph_energy(&mesh, &extend_basis(&mesh, &seq, &BasisTarget::Omega(w.clone()))?, None)?;
            graph_gap = graph_gap.max((e - total).abs() / total);
        }
    }
    let c_n = 8.0 + 2f64.powi(n as i32 + 1) * (5.0f64 / 3.0).powi(n as i32 - 1);
    checks.push(Check::at_most("N=2: graph vs closed-form extension energy", graph_gap, 1e-9));
    checks.push(Check::at_least("N=2: min E(ext h_w) / (2^m (5/3)^n_{m+1})", lo, 1.0));
    checks.push(Check::at_most("N=2: max E(ext h_w) / (2^m (5/3)^n_{m+1})", hi, c_n));

    // operator norm samples
    let mut norm = 0.0f64;
    let seq = DyadicSequence::from_exponents(&[1, 3, 5, 7])?;
    let mesh = GasketMesh::shared(8)?;
    for _ in 0..cfg.trials(100).min(10) {
        let s = random_spectrum(&mut rng, 4, 2);
        let (_, rep) = extend(&mesh, &seq, &s)?;
        norm = norm.max(rep.ratio / rep.reference);
    }
    checks.push(Check::record("N=2: max E(Tu) / ((10/3)^N E(u))", norm));

    let rows = obstruction_experiment(3..=7)?;
    let (glo, ghi) = tol::GROWTH_RANGE;
    for r in rows.iter().filter(|r| r.n <= 6) {
        let q = r.ratio.expect("next row present");
        checks.push(Check::flag(format!("E_min({})/E_min({}) = {q:.4} in [{glo}, {ghi}]", r.n + 1, r.n), (glo..=ghi).contains(&q)));
    }
    let residual = rows.iter().map(|r| r.laplacian_residual).fold(0.0, f64::max);
    checks.push(Check::at_most("minimal extension Laplacian residual", residual, tol::HARMONIC_RESIDUAL));
    let base = crate::extension::obstruction_point(2)?;
    checks.push(Check::at_least("E_min(2) - E+(h1)", base.e_min - base.e_upper, 0.0));
    Ok(checks)
}

fn hausdorff() -> Result<Vec<Check>> {
    let golden = ((1.0 + 5f64.sqrt()) / 2.0).log2();
    let mut increasing = true;
    let mut prev = f64::INFINITY;
    for n in 2..=60 {
        let d = hausdorff_deficit(n)?;
        increasing &= d < prev;
        prev = d;
    }
    Ok(vec![
        Check::at_most("|s(2) - log2(golden ratio)|", (hausdorff_dimension(2)? - golden).abs(), tol::HAUSDORFF_GOLDEN),
        Check::flag("s(N) strictly increasing for N in 2..=60", increasing),
        Check::at_least("s(50)", hausdorff_dimension(50)?, tol::HAUSDORFF_AT_50),
    ])
}

fn random_vanishing(mask: &DomainMask, level: u32, rng: &mut impl Rng) -> MeshFunction {
    let values = mask
        .flags()
        .iter()
        .map(|f| match f {
            VertexFlag::Interior => rng.gen_range(-1.0..1.0),
            VertexFlag::Boundary => 0.0,
            VertexFlag::Exterior => f64::NAN,
        })
        .collect();
    MeshFunction { level, values }
}

fn green(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = cfg.rng(Group::Green);
    let mut checks = Vec::new();
    let x = cfg.x.unwrap_or(1.0);
    let ms: Vec<usize> = match cfg.m {
        Some(m) => vec![m],
        None => vec![1, 2, 3],
    };
    let mut worst = 0.0f64;
    let mut identities = 0.0f64;
    for &m in &ms {
        let seq = DyadicSequence::from_value(x, m + 1)?.truncated();
        if seq.depth() < m + 1 {
            return Err(GasketError::SequenceTooShort { needed: m + 1, have: seq.depth() });
        }
        let level = seq.n(m + 1) + 1;
        let mesh = GasketMesh::shared(level)?;
        let kernel = GreenKernel::new(&seq, m, mesh.clone())?;
        let inside: Vec<usize> = kernel.mask().interior();
        for _ in 0..cfg.trials(5) {
            let v = random_vanishing(kernel.mask(), level, &mut rng);
            let t = inside[rng.gen_range(0..inside.len())];
            worst = worst.max(reproducing_check(&kernel, &v, t)?.residual);
        }
        for l in 1..=m {
            let (one, zero) = BoundaryWeights::new(&DyadicSequence::from_value(x, 64)?, l)?.identities();
            identities = identities.max((one - 1.0).abs()).max(zero.abs());
        }
    }
    checks.push(Check::at_most("reproducing identity residual", worst, tol::REPRODUCING));
    checks.push(Check::at_most("weight identities |.-1|, |.|", identities, tol::WEIGHT_IDENTITIES));

    // F = 1 against the graph solve, x = 1, m = 4, level n_4 + 3
    let seq = DyadicSequence::from_value(1.0, 5)?.truncated();
    let mesh = GasketMesh::shared(seq.n(4) + 3)?;
    let one = MeshFunction::constant(&mesh, 1.0);
    let kernel = GreenKernel::new(&seq, 4, mesh.clone())?;
    let u = kernel.solve(&one)?;
    let oracle = solve_dirichlet_graph(
        &mesh,
        kernel.mask(),
        &MeshFunction::constant(&mesh, 0.0),
        Some(&one),
        SolverKind::Direct,
    )?;
    let rel = u.max_abs_diff(&oracle) / oracle.max_abs();
    checks.push(Check::at_most("F=1, x=1, m=4: relative sup error", rel, tol::GREEN_REL_SUP));
    let nonneg = u.values.iter().all(|v| v.is_nan() || *v >= 0.0) && u.get(mesh.q0()) == 0.0;
    checks.push(Check::flag("F=1: u >= 0 and u(q0) = 0", nonneg));

    // flux of the solution on S(x)
    let seq = DyadicSequence::from_value(1.0, 7)?.truncated();
    let mesh = GasketMesh::shared(8)?;
    let one = MeshFunction::constant(&mesh, 1.0);
    let k5 = GreenKernel::new(&seq, 5, mesh.clone())?;
    let k6 = GreenKernel::new(&seq, 6, mesh.clone())?;
    let f5 = solution_flux(&k5, &one)?;
    let f6 = solution_flux(&k6, &one)?;
    let decays = f6.levels.windows(2).all(|w| w[1].max_abs < w[0].max_abs);
    checks.push(Check::flag("F=1: per-level flux decreasing", decays));
    let last = f6.levels.windows(2).last().map(|w| w[1].max_abs / w[0].max_abs).unwrap_or(0.0);
    checks.push(Check::record("F=1: last per-level decay ratio (2/3 expected)", last));
    checks.push(Check::record("flux bound constant C", f6.constant));
    let tail: f64 = f6.levels.iter().filter(|l| l.l > 5).map(|l| f6.constant * l.scale).sum();
    let diff = f6
        .density
        .iter()
        .enumerate()
        .map(|(i, d)| (d - f5.density[i >> 1]).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("|flux(m=6) - flux(m=5)| vs tail bound", diff, tail));
    Ok(checks)
}
