mod common;

use common::{bits, dense_h, proj, shifted_inverse};
use xxz_core::disorder::{sample_omega, DistributionSpec};
use xxz_core::identities::*;
use xxz_core::lattice::{exact_cluster_census, Region};
use xxz_core::operators::{
    bond_term, build_hamiltonian, build_projector, hopping_operator, Disorder, Flavor, ModelParams,
    Selector,
};
use xxz_core::Error;

fn omega_for(lambda: &Region, seed: u64) -> Disorder {
    sample_omega(lambda, &DistributionSpec::Uniform01, seed, 0).unwrap()
}

fn all_pass(reports: &[IdentityReport]) {
    for r in reports {
        assert!(r.pass || r.info, "{r:?}");
    }
}

#[test]
fn edge_bond_norm_at_delta_two() {
    let lambda = Region::interval(0, 5);
    let params = ModelParams::new(2.0, 1.0).unwrap();
    for i in 0..5 {
        let h = bond_term(&lambda, &params, i).unwrap();
        let empty_i = Selector::Empty(Region::new([i]).unwrap())
            .resolve(&lambda)
            .unwrap();
        let one = Selector::Identity.resolve(&lambda).unwrap();
        assert!((h.weighted(&empty_i, &one).norm().unwrap() - 0.25).abs() < 1e-12);
    }
    let reports = check_appendix_a(&lambda, &params, DEFAULT_TOL).unwrap();
    all_pass(&reports);
    let diag = reports
        .iter()
        .filter(|r| r.id.starts_with("pminus"))
        .map(|r| r.residual)
        .fold(0.0f64, f64::max);
    assert_eq!(diag, 0.0);
}

#[test]
fn bond_spectrum_is_reported_as_info() {
    let lambda = Region::interval(0, 3);
    let reports =
        check_appendix_a(&lambda, &ModelParams::new(2.0, 1.0).unwrap(), DEFAULT_TOL).unwrap();
    let r = reports.iter().find(|r| r.id == "bond_spectrum").unwrap();
    assert!(r.info);
    assert!(r.notes.contains("0.250000"), "{}", r.notes);
}

#[test]
fn cluster_hopping_inequality_on_eight_sites() {
    let lambda = Region::interval(0, 7);
    let w = build_projector(&lambda, &Selector::Clusters).unwrap();
    let hop = hopping_operator(&lambda).unwrap();
    for sign in [-0.5, 0.5] {
        assert!(w.add_scaled(&hop, sign).unwrap().min_eigenvalue().unwrap() >= -1e-12);
    }
    let params = ModelParams::new(3.0, 2.0).unwrap();
    all_pass(
        &check_positivity_and_spectrum(&lambda, &params, &omega_for(&lambda, 4), DEFAULT_TOL)
            .unwrap(),
    );
}

#[test]
fn vacuum_is_the_ground_state() {
    let lambda = Region::interval(0, 6);
    let params = ModelParams::new(2.0, 3.0).unwrap();
    let h =
        build_hamiltonian(&lambda, &params, Some(&omega_for(&lambda, 9)), Flavor::Full).unwrap();
    assert!(h.min_eigenvalue().unwrap().abs() < 1e-12);
    for c in 0..1u64 << 7 {
        assert_eq!(h.element(c, 0), 0.0);
    }
    let excited = h.compress(|c| c != 0).min_eigenvalue().unwrap();
    assert!(excited >= params.gap() - 1e-12);
}

#[test]
fn resolvent_identities_examples() {
    let lambda = Region::interval(1, 8);
    let params = ModelParams::new(8.0, 5.0).unwrap();
    let omega = omega_for(&lambda, 21);
    let mid = check_resolvent_identities(&lambda, &params, &omega, 0.4, 1, DEFAULT_TOL).unwrap();
    assert_eq!(mid.len(), 3);
    for r in &mid {
        assert!(r.residual < 1e-9, "{r:?}");
    }
    let below = check_resolvent_identities(&lambda, &params, &omega, -5.0, 1, DEFAULT_TOL).unwrap();
    for r in &below {
        assert!(r.residual < 1e-11, "{r:?}");
    }
}

#[test]
fn resolvent_identity_rejects_energy_on_spectrum() {
    let lambda = Region::interval(0, 3);
    let params = ModelParams::new(2.0, 1.0).unwrap();
    let err = check_resolvent_identities(
        &lambda,
        &params,
        &omega_for(&lambda, 1),
        0.0,
        1,
        DEFAULT_TOL,
    );
    assert!(matches!(err, Err(Error::Singular(_))));
}

#[test]
fn trace_count_examples() {
    let l4 = Region::interval(0, 3);
    let q = build_projector(&l4, &Selector::ClustersUpTo(1)).unwrap();
    assert_eq!(q.trace(), 10.0);
    assert_eq!(exact_cluster_census(&l4, 2).unwrap()[1], 3);
    assert_eq!(cluster_census_formula(&l4, 2)[1], 3);

    let l6 = Region::interval(0, 5);
    let params = ModelParams::new(2.0, 1.0).unwrap();
    let omegas: Vec<Disorder> = (0..20)
        .map(|d| sample_omega(&l6, &DistributionSpec::Uniform01, 5, d).unwrap())
        .collect();
    let reports = check_trace_counts(&l6, 2, &params, &omegas, DEFAULT_TOL).unwrap();
    all_pass(&reports);
    let count = reports
        .iter()
        .find(|r| r.id == "low_energy_count_bound")
        .unwrap();
    assert!(count.notes.contains("bound 2593"), "{}", count.notes);
}

#[test]
fn census_formula_matches_enumeration_on_disconnected_regions() {
    for sites in [
        vec![0, 1, 2, 5, 6, 9],
        vec![0, 2, 4, 6],
        vec![3, 4, 5, 6, 7, 8, 9, 20],
    ] {
        let lambda = Region::new(sites).unwrap();
        for n in 0..=lambda.len() {
            let exact = exact_cluster_census(&lambda, n).unwrap();
            let formula = cluster_census_formula(&lambda, n);
            for m in 0..exact.len().max(formula.len()) {
                assert_eq!(
                    exact.get(m).copied().unwrap_or(0),
                    formula.get(m).copied().unwrap_or(0)
                );
            }
        }
    }
}

#[test]
fn decoupling_formula_against_dense_evaluation() {
    let len = 9;
    let (delta, lam, e) = (8.0, 5.0, 0.3);
    let field: Vec<f64> = (0..len)
        .map(|p| lam * (0.05 + ((p * 7 + 3) % 10) as f64 / 10.0))
        .collect();
    let all = (1u64 << len) - 1;
    let (a, m, k, k1, b) = (
        bits(&[4]),
        bits(&[4]),
        bits(&[3, 4, 5]),
        bits(&[2, 3, 4, 5, 6]),
        bits(&[1, 2, 3, 4, 5, 6, 7]),
    );
    let (ex_k, in_k, ex_k1) = (bits(&[2, 6]), bits(&[3, 5]), bits(&[1, 7]));
    let crossing = |set: u64| -> Vec<usize> {
        (0..len - 1)
            .filter(|&p| (set >> p & 1) != (set >> (p + 1) & 1))
            .collect()
    };
    let inside = |set: u64| -> Vec<usize> {
        (0..len - 1)
            .filter(|&p| set >> p & 1 == 1 && set >> (p + 1) & 1 == 1)
            .collect()
    };
    let k1c = all & !k1;
    let h = dense_h(len, &(0..len - 1).collect::<Vec<_>>(), all, &field, delta);
    let zero = vec![0.0; len];
    let gamma_k = dense_h(len, &crossing(k), 0, &zero, delta);
    let gamma_k1 = dense_h(len, &crossing(k1), 0, &zero, delta);
    let masked = |set: u64| -> Vec<f64> {
        (0..len)
            .map(|p| if set >> p & 1 == 1 { field[p] } else { 0.0 })
            .collect()
    };
    let h_k = dense_h(len, &inside(k), k, &masked(k), delta);
    let h_out = dense_h(len, &inside(k1c), k1c, &masked(k1c), delta);
    let (r, r_k, r_out) = (
        shifted_inverse(&h, e),
        shifted_inverse(&h_k, e),
        shifted_inverse(&h_out, e),
    );
    let occ = |s: u64| proj(len, move |c| c & s != 0);
    let emp = |s: u64| proj(len, move |c| c & s == 0);

    let lhs = &occ(a) * &emp(all & !m) * &r * &emp(b);
    let rhs = &emp(all & !m & k)
        * &occ(a)
        * &r_k
        * &emp(all & !k)
        * &occ(in_k)
        * &gamma_k
        * &occ(ex_k)
        * &r
        * &occ(ex_k)
        * &gamma_k1
        * &occ(ex_k1)
        * &emp(k1)
        * &r_out
        * &emp(b & k1c)
        * &emp(b);
    let diff = &lhs - &rhs;
    let lhs_size = lhs.norm_max();
    assert!(lhs_size > 1e-8, "{lhs_size}");
    assert!(
        diff.norm_max() < 1e-10 * lhs_size,
        "{} vs {lhs_size}",
        diff.norm_max()
    );

    let lambda = Region::interval(0, 8);
    let omega =
        Disorder::from_values(&lambda, &field.iter().map(|f| f / lam).collect::<Vec<_>>()).unwrap();
    let geometry = DecouplingGeometry {
        a: Region::new([4]).unwrap(),
        m: Region::new([4]).unwrap(),
        k: Region::interval(3, 5),
        b: Region::interval(1, 7),
    };
    let params = ModelParams::new(delta, lam).unwrap();
    let reports = check_decoupling(&lambda, &params, &omega, e, &geometry, DEFAULT_TOL).unwrap();
    assert_eq!(reports.len(), 5);
    all_pass(&reports);
}

#[test]
fn decoupling_example_on_twelve_sites() {
    let lambda = Region::interval(0, 11);
    let geometry = DecouplingGeometry {
        a: Region::new([5]).unwrap(),
        m: Region::interval(4, 6),
        k: Region::interval(3, 8),
        b: Region::interval(2, 9),
    };
    let params = ModelParams::new(8.0, 5.0).unwrap();
    let reports = check_decoupling(
        &lambda,
        &params,
        &omega_for(&lambda, 17),
        0.3,
        &geometry,
        DEFAULT_TOL,
    )
    .unwrap();
    for r in &reports {
        assert!(r.pass && r.residual < 1e-9, "{r:?}");
    }
    let outer = reports.iter().find(|r| r.id == "decoupling_outer").unwrap();
    assert!(outer.residual < 1e-9);
    let independence = reports
        .iter()
        .find(|r| r.id == "decoupling_independence")
        .unwrap();
    assert_eq!(independence.residual, 0.0);
}

#[test]
fn decoupling_names_the_failing_inclusion() {
    let lambda = Region::interval(0, 11);
    let params = ModelParams::new(8.0, 5.0).unwrap();
    let omega = omega_for(&lambda, 1);
    let base = DecouplingGeometry {
        a: Region::new([5]).unwrap(),
        m: Region::interval(4, 6),
        k: Region::interval(3, 8),
        b: Region::interval(2, 9),
    };
    let cases = [
        (
            DecouplingGeometry {
                m: Region::interval(3, 6),
                ..base.clone()
            },
            "M ⊆ [K]_{-1}",
        ),
        (
            DecouplingGeometry {
                a: Region::new([9]).unwrap(),
                ..base.clone()
            },
            "A ⊆ M",
        ),
        (
            DecouplingGeometry {
                b: Region::interval(3, 9),
                ..base.clone()
            },
            "[K]_1 ⊆ B",
        ),
    ];
    for (geometry, what) in cases {
        match check_decoupling(&lambda, &params, &omega, 0.3, &geometry, DEFAULT_TOL) {
            Err(Error::Precondition(msg)) => assert!(msg.contains(what), "{msg}"),
            other => panic!("expected a precondition error, got {other:?}"),
        }
    }
}

#[test]
fn battery_lists_every_identity() {
    let config = BatteryConfig {
        geometries: default_geometries(3, 2).unwrap()[3..].to_vec(),
        deltas: vec![2.0],
        lambda: 3.0,
        draws: 2,
        seed: 1,
        tol: DEFAULT_TOL,
    };
    let outcome = identity_battery(&config).unwrap();
    assert_eq!(outcome.summary.len(), REGISTRY.len());
    assert_eq!(outcome.total_failures(), 0, "{:?}", outcome.failures);
    for s in &outcome.summary {
        assert!(s.checks > 0, "{} not exercised", s.id);
    }
}
