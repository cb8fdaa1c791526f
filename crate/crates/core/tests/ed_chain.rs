use fracising::ed::*;
use fracising::kernel::build_kernel;
use fracising::mpo::build_dense_hamiltonian;
use fracising::quadratic::{critical_field, finite_gap, BdgRealSpaceModel};
use fracising::Error;

mod common;
use common::order;

fn spec(q: f64, g: f64, l: usize) -> SpinChainSpec {
    SpinChainSpec::new(&build_kernel(order(q), 1.0, l).unwrap(), g, l).unwrap()
}

fn grid() -> Vec<f64> {
    (0..17).map(|i| 0.4 + 0.05 * i as f64).collect()
}

fn peak(q: f64, l: usize) -> PeakEstimate {
    let fields = grid();
    let scan = scan_field(&spec(q, 1.0, l), &fields, DEFAULT_PIN).unwrap();
    let s: Vec<f64> = scan.iter().map(|p| p.half_entropy).collect();
    entropy_peak_gc(&fields, &s).unwrap()
}

#[test]
fn two_site_ferromagnet_is_degenerate() {
    let r = lowest_states(&spec(2.0, 0.0, 2), 2).unwrap();
    assert!((r.energies()[0] + 1.0).abs() < 1e-12);
    assert!((r.energies()[1] + 1.0).abs() < 1e-12);
    assert!(r.gap().abs() < 1e-12);
}

#[test]
fn nearest_neighbour_gap_is_free_fermion_gap() {
    for &g in &[0.8, 1.0, 1.2] {
        let ed = lowest_states(&spec(2.0, g, 10), 2).unwrap();
        let bdg = finite_gap(&BdgRealSpaceModel::new(order(2.0), 1.0, g, 10).unwrap()).unwrap();
        assert!((ed.gap() - bdg).abs() < 1e-8, "g={g}: {} vs {bdg}", ed.gap());
    }
}

#[test]
fn ground_energy_matches_dense_oracle() {
    let q = order(1.5);
    let gc = critical_field(q, 1.0);
    let kernel = build_kernel(q, 1.0, 12).unwrap();
    let dense = build_dense_hamiltonian(&kernel, gc, 12).unwrap().eigenvalues();
    let ed = lowest_states(&SpinChainSpec::new(&kernel, gc, 12).unwrap(), 3).unwrap();
    for (a, b) in ed.energies().iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn every_pair_meets_variance_target() {
    let r = lowest_states(&spec(1.5, 0.7, 12), 4).unwrap();
    assert!(r.states.iter().all(|p| p.variance < VARIANCE_TARGET));
}

#[test]
fn reflection_symmetric_entropy() {
    let l = 12;
    let r = lowest_states(&spec(1.5, 0.8, l), 1).unwrap();
    let psi = &r.ground().vector;
    for cut in 1..l {
        let a = bipartite_entropy(psi, l, cut).unwrap();
        let b = bipartite_entropy(psi, l, l - cut).unwrap();
        assert!((a - b).abs() < 1e-10, "cut {cut}");
    }
}

#[test]
fn strong_field_is_a_product_state() {
    let r = lowest_states(&spec(1.5, 1e6, 10), 1).unwrap();
    assert!(bipartite_entropy(&r.ground().vector, 10, 5).unwrap() < 1e-9);
}

#[test]
fn entropy_peak_drifts_toward_bulk_field() {
    let gc = critical_field(order(1.5), 1.0);
    let p: Vec<f64> = [8, 10, 12].iter().map(|&l| peak(1.5, l).position).collect();
    assert!(p[0] < p[1] && p[1] < p[2], "{p:?}");
    assert!(p.iter().all(|x| (x - gc).abs() < 0.2 * gc));
    // frozen
    assert!((p[2] - 0.8014).abs() < 1e-3, "{}", p[2]);
}

#[test]
fn nearest_neighbour_peak_sits_below_one() {
    let a = peak(2.0, 10).position;
    let b = peak(2.0, 12).position;
    assert!(b < 1.0 && b > a, "{a} {b}");
}

#[test]
fn synthetic_gaussian_peak() {
    let g: Vec<f64> = (0..21).map(|i| 0.5 + 0.03 * i as f64).collect();
    // deterministic pseudo-noise at the 1e-4 level
    let s: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, &x)| (-(x - 0.8) * (x - 0.8) / 0.02).exp() + 1e-4 * ((i * 7919 % 13) as f64 / 6.0 - 1.0))
        .collect();
    let p = entropy_peak_gc(&g, &s).unwrap();
    assert!((p.position - 0.8).abs() < 0.01);
    assert!(p.uncertainty < 0.01);
}

#[test]
fn monotone_entropy_has_no_interior_peak() {
    let g: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
    let s: Vec<f64> = g.iter().map(|x| x * x).collect();
    assert!(matches!(entropy_peak_gc(&g, &s), Err(Error::NoInteriorPeak)));
}

#[test]
fn size_limit() {
    let k = build_kernel(order(1.5), 1.0, 16).unwrap();
    assert!(matches!(SpinChainSpec::new(&k, 1.0, 15), Err(Error::SizeLimit { .. })));
}
