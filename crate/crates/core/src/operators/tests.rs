use num_complex::Complex64;

use super::*;
use crate::domains::{build_grid, DomainSpec, GridScheme};
use crate::kernel::orthonormalize;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn disc_setup(n: usize, res: f64) -> (QuadratureGrid, OrthonormalBasis, OrthonormalBasis) {
    let dom = DomainSpec::disc();
    let grid = build_grid(&dom, res, GridScheme::Polar).unwrap();
    let basis = orthonormalize(&dom, &grid, n, DEFAULT_GRAM_CUTOFF).unwrap();
    let frame = orthonormalize(&dom, &grid, n + DEFAULT_GUARD, DEFAULT_GRAM_CUTOFF).unwrap();
    (grid, basis, frame)
}

#[test]
fn disc_conj_z_singular_values() {
    let (grid, basis, frame) = disc_setup(30, 0.04);
    let h = hankel(&SymbolFn::conj_coord(0), &basis, &frame, &grid).unwrap();
    assert_eq!(h.singular_values.len(), 31);
    for (j, s) in h.singular_values.iter().enumerate() {
        let want = 1.0 / (((j + 1) * (j + 2)) as f64).sqrt();
        assert!((s - want).abs() < 1e-4, "σ_{j} = {s}, want {want}");
    }
}

#[test]
fn holomorphic_symbol_gives_zero_hankel() {
    let (grid, basis, frame) = disc_setup(20, 0.05);
    let h = hankel(&SymbolFn::coord_power(0, 1), &basis, &frame, &grid).unwrap();
    assert!(h.sigma0() <= 1e-8, "{}", h.sigma0());
}

#[test]
fn multiplication_by_one_is_identity() {
    let (grid, basis, _) = disc_setup(15, 0.05);
    let m = mult_matrix(&SymbolFn::constant(c(1.0, 0.0)), &basis, &grid).unwrap();
    assert!(m.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-8));
}

#[test]
fn multiplication_column_norms() {
    let (grid, basis, _) = disc_setup(15, 0.05);
    let m = mult_matrix(&SymbolFn::conj_coord(0), &basis, &grid).unwrap();
    // Σ_j ‖z̄ e_j‖² is basis independent: Σ_j (j+1)/(j+2)
    let want: f64 = (0..=15).map(|j| (j + 1) as f64 / (j + 2) as f64).sum();
    let got: f64 = (0..16).map(|k| m.gram[(k, k)].re).sum();
    assert!((got - want).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn projection_properties() {
    let (grid, basis, _) = disc_setup(10, 0.05);
    let zbar: Vec<Complex64> = grid.nodes().map(|z| z[0].conj()).collect();
    let p = project(&basis, &grid, &zbar).unwrap();
    assert!(p.iter().all(|v| v.norm() < 1e-10));

    let f: Vec<Complex64> = grid.nodes().map(|z| z[0].norm_sqr() + z[0] * z[0] * c(0.0, 2.0)).collect();
    let pf = project(&basis, &grid, &f).unwrap();
    let ppf = project(&basis, &grid, &pf).unwrap();
    let worst = pf.iter().zip(&ppf).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
    // P(|z|²) = 1/2, P(z²) = z²
    let z = grid.node(17)[0];
    assert!((pf[17] - (c(0.5, 0.0) + z * z * c(0.0, 2.0))).norm() < 1e-9);
}

#[test]
fn hankel_is_dominated_by_multiplication() {
    let (grid, basis, frame) = disc_setup(12, 0.05);
    let s = SymbolFn::abs2(0);
    let h = hankel(&s, &basis, &frame, &grid).unwrap();
    let m = mult_matrix(&s, &basis, &grid).unwrap();
    for (a, b) in h.singular_values.iter().zip(&m.singular_values) {
        assert!(*a <= b + 1e-10);
    }
}

#[test]
fn holomorphic_perturbation_does_not_change_hankel() {
    let (grid, basis, frame) = disc_setup(12, 0.05);
    let a = hankel(&SymbolFn::conj_coord(0), &basis, &frame, &grid).unwrap();
    let sym = SymbolFn::sum(SymbolFn::conj_coord(0), SymbolFn::coord_power(0, 2));
    let b = hankel(&sym, &basis, &frame, &grid).unwrap();
    for (x, y) in a.singular_values.iter().zip(&b.singular_values) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn disc_probe_decays_towards_boundary() {
    let (grid, basis, frame) = disc_setup(30, 0.04);
    let h = hankel(&SymbolFn::conj_coord(0), &basis, &frame, &grid).unwrap();
    let ts: Vec<f64> = (0..8).map(|k| 0.1 + 0.1 * k as f64).collect();
    let centers: Vec<Vec<Complex64>> = ts.iter().map(|&t| vec![c(t, 0.0)]).collect();
    let p = weak_null_probe(&h, &basis, &centers).unwrap();
    for w in p.windows(2) {
        assert!(w[1] < w[0], "{p:?}");
    }
    // ‖H s_ζ‖² = Berezin transform of |z|² minus |ζ|², with
    // Berezin(|z|²)(ζ) = (1 − r)² Σ (n+1)²/(n+2) rⁿ, r = |ζ|²
    for (&t, &v) in ts.iter().zip(&p).take(4) {
        let r = t * t;
        let ber: f64 = (0..400i32).map(|n| ((n + 1) * (n + 1)) as f64 / (n + 2) as f64 * r.powi(n)).sum::<f64>() * (1.0 - r).powi(2);
        let want = (ber - r).sqrt();
        assert!((v - want).abs() < 1e-6, "t = {t}: {v} vs {want}");
    }
    let csv = probe_csv(&ts, &p);
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn bidisc_probe_stays_away_from_zero_on_a_flat_face() {
    let dom = DomainSpec::polydisc(2);
    let grid = build_grid(&dom, 0.2, GridScheme::Polar).unwrap();
    let (h, basis) = hankel_matrix(&dom, &grid, &SymbolFn::conj_coord(1), 6, DEFAULT_GUARD, IndexSet::PerVariable).unwrap();
    // approach (1, 0) along the first coordinate axis
    let centers: Vec<Vec<Complex64>> = (1..8).map(|k| vec![c(0.1 * k as f64 + 0.1, 0.0), c(0.0, 0.0)]).collect();
    let p = weak_null_probe(&h, &basis, &centers).unwrap();
    assert!(p.iter().all(|&v| v >= 0.3), "{p:?}");
    // tensor structure: σ(z̄₂) repeats with the first-variable degrees
    let top = h.sigma0();
    assert!((top - 0.5f64.sqrt()).abs() < 1e-3, "{top}");
    assert_eq!(h.count_above(0.9 * top), 7);
}

#[test]
fn compactness_indicator_separates_examples() {
    let (grid, basis, frame) = disc_setup(10, 0.05);
    let (_, basis2, frame2) = disc_setup(20, 0.05);
    let s = SymbolFn::conj_coord(0);
    let a = hankel(&s, &basis, &frame, &grid).unwrap();
    let b = hankel(&s, &basis2, &frame2, &grid).unwrap();
    let ind = compactness_indicator(&[&a, &b], &[vec![0.9, 0.5, 0.2, 0.05]]);
    assert!(ind.compact && !ind.count_grows && ind.probe_decays && ind.bounded);

    let ind = compactness_indicator(&[&a, &b], &[vec![0.6, 0.6, 0.59, 0.6]]);
    assert!(!ind.compact);
}

#[test]
fn spectrum_csv_rows() {
    let (grid, basis, frame) = disc_setup(4, 0.1);
    let h = hankel(&SymbolFn::conj_coord(0), &basis, &frame, &grid).unwrap();
    let csv = h.spectrum_csv(true);
    assert!(csv.starts_with("N,k,sigma\n4,0,"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn tail_trend_quartiles() {
    assert!((tail_trend(&[4.0, 4.0, 3.0, 2.0, 1.0, 1.0, 1.0, 1.0], 1e-12) - 0.25).abs() < 1e-15);
    assert_eq!(tail_trend(&[0.0; 6], 1e-8), 0.0);
    assert_eq!(tail_trend(&[2.0], 1e-8), 1.0);
}
