mod common;

use common::dense_h_sites;
use proptest::prelude::*;
use xxz_core::disorder::{sample_omega, DistributionSpec};
use xxz_core::lattice::{boundary, deform, BoundaryKind, Depth, Region};
use xxz_core::operators::*;
use xxz_core::Error;

fn omega_for(lambda: &Region, seed: u64) -> Disorder {
    sample_omega(lambda, &DistributionSpec::Uniform01, seed, 0).unwrap()
}

fn selector(lambda: &Region, s: Selector) -> OperatorMatrix {
    build_projector(lambda, &s).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
    }
}

fn dense_eigenvalues(m: &faer::Mat<f64>) -> Vec<f64> {
    let e = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
    let s = e.S().column_vector();
    sorted((0..s.nrows()).map(|i| s[i]).collect())
}

#[test]
fn bond_operator_at_delta_two() {
    let h = bond_operator(2.0).unwrap();
    assert_close(&dense_eigenvalues(&h), &[-1.0, -0.25, 0.0, 0.25], 1e-12);
    for i in 0..4 {
        assert_eq!(h[(i, 0)], 0.0);
        assert_eq!(h[(0, i)], 0.0);
    }
}

#[test]
fn bond_operator_has_unit_norm() {
    for delta in [1.01, 1.5, 2.0, 5.0, 10.0, 1e3] {
        let ev = dense_eigenvalues(&bond_operator(delta).unwrap());
        let norm = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((norm - 1.0).abs() < 1e-12, "{delta}: {ev:?}");
    }
    for delta in [1.0, 0.5, f64::NAN] {
        assert!(bond_operator(delta).is_err());
    }
}

#[test]
fn two_site_spectrum() {
    let lambda = Region::new([1, 2]).unwrap();
    let params = ModelParams::new(2.0, 0.0).unwrap();
    let h = build_hamiltonian(
        &lambda,
        &params,
        Some(&Disorder::zero(&lambda)),
        Flavor::Full,
    )
    .unwrap();
    assert_close(
        &sorted(h.eigenvalues().unwrap()),
        &[0.0, 0.75, 1.0, 1.25],
        1e-12,
    );
    let free = build_hamiltonian(&lambda, &params, None, Flavor::Free).unwrap();
    let d = diagonalize(&free, DEGENERACY_TOL).unwrap();
    assert_close(&d.eigenvalues(), &[0.0, 0.75, 1.0, 1.25], 1e-12);
}

#[test]
fn vacuum_is_annihilated() {
    for (lambda, lam) in [
        (Region::interval(0, 7), 0.0),
        (Region::new([0, 1, 2, 5, 6]).unwrap(), 4.0),
    ] {
        let params = ModelParams::new(1.5, lam).unwrap();
        let h = build_hamiltonian(&lambda, &params, Some(&omega_for(&lambda, 3)), Flavor::Full)
            .unwrap();
        for c in 0..1u64 << lambda.len() {
            assert_eq!(h.element(c, 0), 0.0);
            assert_eq!(h.element(0, c), 0.0);
        }
    }
}

#[test]
fn hamiltonian_conserves_particle_number() {
    let lambda = Region::interval(1, 6);
    let params = ModelParams::new(2.0, 1.0).unwrap();
    let omega = omega_for(&lambda, 11);
    let h = build_hamiltonian(&lambda, &params, Some(&omega), Flavor::Full).unwrap();
    assert!(h.conserves_n());
    let n = selector(&lambda, Selector::Number(lambda.clone()));
    assert!(h.commutator(&n).unwrap().max_abs() < 1e-12);

    // the same commutator on the full tensor-product space
    let full = full_space_hamiltonian(
        &lambda,
        &params,
        Some(&omega),
        Flavor::Full,
        &KronOptions::default(),
    )
    .unwrap();
    let number = full_space_number_operator(&lambda).unwrap();
    let comm = &full * &number - &number * &full;
    assert!(comm.norm_max() < 1e-12);
    assert_close(
        &dense_eigenvalues(&full),
        &sorted(h.eigenvalues().unwrap()),
        1e-10,
    );
}

#[test]
fn projector_examples() {
    let lambda = Region::interval(0, 5);
    let q0 = selector(&lambda, Selector::ClusterCount(0));
    let vac = selector(&lambda, Selector::Empty(lambda.clone()));
    assert_eq!(q0.sub(&vac).unwrap().max_abs(), 0.0);
    for s in [
        Region::new([2]).unwrap(),
        Region::interval(1, 4),
        Region::empty(),
    ] {
        assert_eq!(selector(&lambda, Selector::Empty(s)).element(0, 0), 1.0);
    }
    let chi2_q1 = selector(&lambda, Selector::Particles(2))
        .matmul(&selector(&lambda, Selector::ClustersUpTo(1)))
        .unwrap();
    assert_eq!(chi2_q1.trace(), 5.0);

    let hat = selector(&lambda, Selector::WeightedClustersUpTo(2));
    assert_eq!(hat.element(0, 0), 1.5);
    assert_eq!(hat.element(0b101, 0b101), 1.0);
    assert_eq!(hat.element(0b10101, 0b10101), 0.0);

    let pi = selector(&lambda, Selector::Config(Region::new([1, 2]).unwrap()));
    assert_eq!(pi.trace(), 1.0);
    assert_eq!(pi.element(0b110, 0b110), 1.0);

    assert!(build_projector(&lambda, &Selector::Empty(Region::new([9]).unwrap())).is_err());
    assert!(build_projector(&lambda, &Selector::WeightedClustersUpTo(0)).is_err());
}

#[test]
fn diagonal_families_commute() {
    let lambda = Region::new([0, 1, 2, 4, 5, 6]).unwrap();
    let params = ModelParams::new(2.0, 1.0).unwrap();
    let v = build_hamiltonian(
        &lambda,
        &params,
        Some(&omega_for(&lambda, 2)),
        Flavor::Field,
    )
    .unwrap();
    let s = Region::new([1, 4]).unwrap();
    let family = [
        selector(&lambda, Selector::Clusters),
        selector(&lambda, Selector::Number(lambda.clone())),
        v,
        selector(&lambda, Selector::ClusterCount(2)),
        selector(&lambda, Selector::Empty(s.clone())),
        selector(&lambda, Selector::Occupied(s)),
    ];
    for a in &family {
        for b in &family {
            assert!(a.commutator(b).unwrap().max_abs() < 1e-12);
        }
    }
}

#[test]
fn dressed_flavor_adds_weighted_cluster_projector() {
    let lambda = Region::interval(0, 5);
    let params = ModelParams::new(3.0, 2.0).unwrap();
    let omega = omega_for(&lambda, 5);
    let h = build_hamiltonian(&lambda, &params, Some(&omega), Flavor::Full).unwrap();
    let g = params.gap();
    for k in 1..=3 {
        let dressed =
            build_hamiltonian(&lambda, &params, Some(&omega), Flavor::Dressed(k)).unwrap();
        let q = selector(&lambda, Selector::WeightedClustersUpTo(k));
        let expected = h.add_scaled(&q, k as f64 * g).unwrap();
        assert!(dressed.sub(&expected).unwrap().max_abs() < 1e-14);
        assert!(dressed.min_eigenvalue().unwrap() >= (k as f64 + 1.0) * g - 1e-12);
    }
    let dressed0 = build_hamiltonian(&lambda, &params, Some(&omega), Flavor::Dressed(0)).unwrap();
    let expected = h
        .add_scaled(&selector(&lambda, Selector::ClusterCount(0)), g)
        .unwrap();
    assert!(dressed0.sub(&expected).unwrap().max_abs() < 1e-14);
}

#[test]
fn missing_field_is_rejected() {
    let lambda = Region::interval(0, 3);
    let params = ModelParams::new(2.0, 1.0).unwrap();
    assert!(build_hamiltonian(&lambda, &params, None, Flavor::Full).is_err());
    assert!(build_hamiltonian(&lambda, &params, None, Flavor::Field).is_err());
    let short = Disorder::zero(&Region::interval(0, 2));
    assert!(build_hamiltonian(&lambda, &params, Some(&short), Flavor::Full).is_err());
    assert!(matches!(
        ModelParams::new(1.0, 1.0),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn crossing_bonds_of_a_prefix() {
    let lambda = Region::interval(0, 5);
    let params = ModelParams::new(2.0, 1.0).unwrap();
    let omega = omega_for(&lambda, 8);
    let k = Region::interval(0, 2);
    let d = build_decoupled(&lambda, &k, &params, &omega).unwrap();
    let h23 = bond_term(&lambda, &params, 2).unwrap();
    assert_eq!(d.crossing.sub(&h23).unwrap().max_abs(), 0.0);
    let h = build_hamiltonian(&lambda, &params, Some(&omega), Flavor::Full).unwrap();
    assert!(h.sub(&d.split.add(&d.crossing).unwrap()).unwrap().max_abs() < 1e-14);
    assert!(build_decoupled(&lambda, &Region::empty(), &params, &omega).is_err());
    assert!(build_decoupled(&lambda, &Region::new([7]).unwrap(), &params, &omega).is_err());
}

#[test]
fn crossing_bonds_live_on_the_boundary() {
    let lambda = Region::new([0, 1, 2, 3, 4, 5, 6, 8, 9]).unwrap();
    let one = Selector::Identity.resolve(&lambda).unwrap();
    for delta in [1.5, 2.0, 10.0] {
        let params = ModelParams::new(delta, 1.0).unwrap();
        let omega = omega_for(&lambda, 4);
        for k in [
            Region::interval(2, 4),
            Region::interval(0, 1),
            Region::new([3, 4, 8]).unwrap(),
        ] {
            let gamma = build_decoupled(&lambda, &k, &params, &omega)
                .unwrap()
                .crossing;
            let edge = Selector::Occupied(boundary(&lambda, &k, BoundaryKind::Full).unwrap())
                .resolve(&lambda)
                .unwrap();
            assert!(gamma.sub(&gamma.weighted(&edge, &edge)).unwrap().max_abs() < 1e-12);
            if k.is_connected() {
                let empty_k = Selector::Empty(k.clone()).resolve(&lambda).unwrap();
                assert!(gamma.weighted(&empty_k, &one).norm().unwrap() <= 1.0 / delta + 1e-12);
            }
        }
    }
}

#[test]
fn interval_endpoints() {
    assert_eq!(
        energy_interval(IntervalKind::UpTo, 1, 2.0).unwrap().upper,
        0.875
    );
    let band = energy_interval(IntervalKind::Band, 1, 2.0).unwrap();
    assert_eq!((band.lower, band.upper), (0.5, 0.875));
    let cluster = energy_interval(IntervalKind::ClusterBand, 1, 2.0).unwrap();
    assert_eq!((cluster.lower, cluster.upper), (0.5, 1.0));
    assert!(cluster.contains(0.5) && !cluster.contains(1.0));
    for delta in [1.5, 4.0, 10.0] {
        assert_eq!(
            energy_interval(IntervalKind::ClusterBand, 0, delta)
                .unwrap()
                .lower,
            1.0 - 1.0 / delta
        );
    }
    assert!(energy_interval(IntervalKind::UpTo, 1, 1.0).is_err());
}

#[test]
fn spectrum_has_a_gap_above_the_vacuum() {
    for len in [4i64, 7, 10] {
        let lambda = Region::interval(0, len - 1);
        let params = ModelParams::new(2.0, 3.0).unwrap();
        let h = build_hamiltonian(
            &lambda,
            &params,
            Some(&omega_for(&lambda, len as u64)),
            Flavor::Full,
        )
        .unwrap();
        let d = diagonalize(&h, DEGENERACY_TOL).unwrap();
        for e in d.eigenvalues() {
            assert!(!(1e-10..0.5 - 1e-10).contains(&e), "{e}");
        }
        assert!(d.reconstruction_residual(&h).unwrap() <= 1e-10 * h.norm().unwrap());
        for k in 1..=2 {
            let window = energy_interval(IntervalKind::UpTo, k, 2.0).unwrap();
            let bound = k as f64 * (len as f64).powi(2 * k as i32) + 1.0;
            assert!((d.spectral_count(&window) as f64) <= bound);
        }
    }
}

#[test]
fn spectral_projectors_resolve_the_identity() {
    let lambda = Region::interval(0, 4);
    let params = ModelParams::new(2.0, 0.0).unwrap();
    let h = build_hamiltonian(&lambda, &params, None, Flavor::Free).unwrap();
    let d = diagonalize(&h, DEGENERACY_TOL).unwrap();
    let mut sum = selector(&lambda, Selector::Identity).scale(0.0);
    let mut weighted = sum.clone();
    for c in d.clusters() {
        let p = d.cluster_projector(&c);
        assert!(p.matmul(&p).unwrap().sub(&p).unwrap().max_abs() < 1e-10);
        assert!((p.trace() - c.multiplicity() as f64).abs() < 1e-10);
        sum = sum.add(&p).unwrap();
        weighted = weighted.add_scaled(&p, c.energy).unwrap();
    }
    assert!(
        sum.sub(&selector(&lambda, Selector::Identity))
            .unwrap()
            .max_abs()
            < 1e-10
    );
    assert!(weighted.sub(&h).unwrap().max_abs() < 1e-10);
}

#[test]
fn free_hamiltonian_is_sandwiched_by_cluster_counts() {
    for len in 1..=8i64 {
        let lambda = Region::interval(0, len - 1);
        let w = selector(&lambda, Selector::Clusters);
        let hop = hopping_operator(&lambda).unwrap();
        for sign in [-0.5, 0.5] {
            assert!(w.add_scaled(&hop, sign).unwrap().min_eigenvalue().unwrap() >= -1e-12);
        }
        for delta in [1.5, 2.0, 5.0, 10.0] {
            let params = ModelParams::new(delta, 0.0).unwrap();
            let h0 = build_hamiltonian(&lambda, &params, None, Flavor::Free).unwrap();
            let g = params.gap();
            assert!(h0.add_scaled(&w, -g).unwrap().min_eigenvalue().unwrap() >= -1e-12);
            assert!(
                w.scale(1.0 + 1.0 / delta)
                    .sub(&h0)
                    .unwrap()
                    .min_eigenvalue()
                    .unwrap()
                    >= -1e-12
            );
        }
    }
}

#[test]
fn hamiltonian_commutes_with_component_projectors() {
    let lambda = Region::new([0, 1, 2, 5, 6, 7, 8]).unwrap();
    let params = ModelParams::new(2.0, 1.0).unwrap();
    let h =
        build_hamiltonian(&lambda, &params, Some(&omega_for(&lambda, 6)), Flavor::Full).unwrap();
    for m in [
        Region::new([1]).unwrap(),
        Region::new([6, 8]).unwrap(),
        Region::new([0, 7]).unwrap(),
    ] {
        let closure = deform(&lambda, &m, Depth::Infinite).unwrap();
        for s in [
            Selector::Empty(closure.clone()),
            Selector::Occupied(closure),
        ] {
            assert!(h.commutator(&selector(&lambda, s)).unwrap().max_abs() < 1e-12);
        }
    }
}

#[test]
fn block_dump_round_trips() {
    let lambda = Region::interval(0, 4);
    let params = ModelParams::new(2.0, 1.0).unwrap();
    let h =
        build_hamiltonian(&lambda, &params, Some(&omega_for(&lambda, 1)), Flavor::Full).unwrap();
    let mut bytes = Vec::new();
    write_blocks(&h, &mut bytes).unwrap();
    let back = read_blocks(bytes.as_slice()).unwrap();
    assert_eq!(back.len(), h.blocks().len());
    for (m, b) in back.iter().zip(h.blocks()) {
        assert_eq!(m, &b.to_dense());
    }
}

fn sites_strategy() -> impl Strategy<Value = Vec<i64>> {
    proptest::sample::subsequence((0i64..10).collect::<Vec<_>>(), 1..=7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sector_blocks_match_dense_construction(sites in sites_strategy(), delta in 1.05f64..12.0, lam in 0.0f64..6.0, seed in 0u64..1000) {
        let lambda = Region::new(sites.iter().copied()).unwrap();
        let params = ModelParams::new(delta, lam).unwrap();
        let omega = omega_for(&lambda, seed);
        let h = build_hamiltonian(&lambda, &params, Some(&omega), Flavor::Full).unwrap().to_full_dense().unwrap();
        let field: Vec<f64> = omega.on(&lambda).unwrap().iter().map(|w| lam * w).collect();
        let all = (1u64 << sites.len()) - 1;
        let oracle = dense_h_sites(&sites, all, &field, delta);
        prop_assert!((&h - &oracle).norm_max() < 1e-14);
    }

    #[test]
    fn sparse_storage_matches_dense(sites in sites_strategy(), k in 0usize..3, seed in 0u64..1000) {
        let lambda = Region::new(sites.iter().copied()).unwrap();
        let params = ModelParams::new(2.5, 1.5).unwrap();
        let omega = omega_for(&lambda, seed);
        let flavor = Flavor::Dressed(k);
        let dense = build_hamiltonian(&lambda, &params, Some(&omega), flavor).unwrap();
        let sparse = build_hamiltonian_with(&lambda, &params, Some(&omega), flavor, BuildOptions { sparse_threshold: 2 }).unwrap();
        prop_assert!(dense.sub(&sparse).unwrap().max_abs() < 1e-14);
    }
}
