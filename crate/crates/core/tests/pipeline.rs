use gasket_bvp::extension::{extend, trace};
use gasket_bvp::flux::{finite_difference_flux, normal_derivative};
use gasket_bvp::mesh::{graph_energy, laplacian_at, renormalization};
use gasket_bvp::solver::{solve_dirichlet_graph, SolverKind};
use gasket_bvp::{DomainMask, DyadicSequence, GasketMesh, HaarSpectrum, HarmonicBasis, MeshFunction, Word};
use proptest::prelude::*;

fn sequence() -> impl Strategy<Value = DyadicSequence> {
    prop::collection::vec(1u32..=2, 2..=4).prop_map(|gaps| {
        let exps: Vec<u32> = gaps.iter().scan(0, |n, g| {
            *n += g;
            Some(*n)
        }).collect();
        DyadicSequence::from_exponents(&exps).unwrap()
    })
}

fn spectrum(depth: usize) -> impl Strategy<Value = HaarSpectrum> {
    let words = prop::collection::vec((0..depth, any::<u32>(), -1.0f64..1.0), 0..4);
    (-1.0f64..1.0, -1.0f64..1.0, words).prop_map(|(a, b, ws)| {
        ws.into_iter().fold(HaarSpectrum { a, b, ..Default::default() }, |s, (m, i, c)| {
            s.with_coeff(Word::from_index(i as usize % (1 << m), m), c)
        })
    })
}

fn seq_and_spectrum() -> impl Strategy<Value = (DyadicSequence, HaarSpectrum)> {
    sequence().prop_flat_map(|seq| {
        let d = seq.depth();
        (Just(seq), spectrum(d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesized_function_is_harmonic((seq, s) in seq_and_spectrum()) {
        let level = seq.n(seq.depth()) + 2;
        let mesh = GasketMesh::shared(level).unwrap();
        let h = HarmonicBasis::new(&seq).unwrap().synthesize(&mesh, &s).unwrap();
        let mask = DomainMask::omega(&mesh, &seq, seq.depth()).unwrap();
        let scale = renormalization(level) * 4.0;
        for v in mask.interior() {
            prop_assert!((laplacian_at(&mesh, &h, v) / scale).abs() < 1e-10);
        }
    }

    #[test]
    fn graph_energy_matches_closed_form((seq, s) in seq_and_spectrum()) {
        let level = seq.n(seq.depth()) + 1;
        let mesh = GasketMesh::shared(level).unwrap();
        let basis = HarmonicBasis::new(&seq).unwrap();
        let h = basis.synthesize(&mesh, &s).unwrap();
        let mask = DomainMask::omega(&mesh, &seq, seq.depth()).unwrap();
        let e = graph_energy(&mesh, &h, Some(&mask)).unwrap();
        let closed = basis.energy_report(&s).unwrap().exact_energy;
        prop_assert!((e - closed).abs() <= 1e-9 * closed.max(1.0), "{} vs {}", e, closed);
    }

    #[test]
    fn dirichlet_solve_reproduces_synthesis((seq, s) in seq_and_spectrum()) {
        let level = seq.n(seq.depth()) + 2;
        let mesh = GasketMesh::shared(level).unwrap();
        let h = HarmonicBasis::new(&seq).unwrap().synthesize(&mesh, &s).unwrap();
        let mask = DomainMask::omega(&mesh, &seq, seq.depth()).unwrap();
        let u = solve_dirichlet_graph(&mesh, &mask, &h, None, SolverKind::Direct).unwrap();
        prop_assert!(u.max_abs_diff(&h) < 1e-9);
    }
}

#[test]
fn flux_from_graph_matches_multipliers() {
    let seq = DyadicSequence::from_exponents(&[1, 3, 4, 6]).unwrap();
    let mesh = GasketMesh::build(8).unwrap();
    let s = HaarSpectrum { a: 0.3, b: -0.1, ..Default::default() }
        .with_coeff(Word::empty(), 0.8)
        .with_coeff("2".parse().unwrap(), -0.4)
        .with_coeff("12".parse().unwrap(), 0.25);
    let h = HarmonicBasis::new(&seq).unwrap().synthesize(&mesh, &s).unwrap();
    let expected = normal_derivative(&seq, &s).unwrap().density(3).unwrap();
    let measured = finite_difference_flux(&mesh, &h, &seq, 3).unwrap();
    for (a, b) in measured.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn extension_round_trip() {
    let seq = DyadicSequence::arithmetic(1, 2, 4).unwrap().truncated();
    let mesh = GasketMesh::build(9).unwrap();
    let s = HaarSpectrum { a: 1.0, b: 0.5, ..Default::default() }
        .with_coeff("1".parse().unwrap(), -0.3)
        .with_coeff("21".parse().unwrap(), 0.2);
    let (f, report) = extend(&mesh, &seq, &s).unwrap();
    assert!(f.values.iter().all(|v| v.is_finite()));
    assert!(report.energy_total >= report.energy_upper);
    assert!(report.ratio <= report.reference);
    let t = trace(&mesh, &f, &seq, 4).unwrap().pruned(1e-12);
    assert!((t.b - 0.5).abs() < 1e-12);
    assert!((t.coeffs[&"21".parse::<Word>().unwrap()] - 0.2).abs() < 1e-12);
}

#[test]
fn csv_round_trip() {
    let mesh = GasketMesh::build(4).unwrap();
    let f = MeshFunction::sample(&mesh, |x, y| x * x - y);
    let g = MeshFunction::from_csv(&mesh, &f.to_csv(&mesh)).unwrap();
    assert_eq!(f, g);
}
