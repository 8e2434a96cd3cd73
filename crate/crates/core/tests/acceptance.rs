//! Acceptance runs: one line per criterion, nonzero exit if any criterion fails.

mod common;

use common::{dense_h_sites, proj, shifted_inverse, spectral_norm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};
use xxz_core::disorder::{
    dynloc_expectation, event_probability, frac_moment_scan, sample_omega, wegner_scan,
    DistributionSpec, Dressing, McConfig,
};
use xxz_core::identities::{check_decoupling, identity_battery, BatteryConfig, DecouplingGeometry};
use xxz_core::lattice::{binomial, deform, exact_cluster_census, Depth, Region};
use xxz_core::operators::{
    build_hamiltonian, diagonalize, energy_interval, Disorder, Flavor, IntervalKind, ModelParams,
    Selector, DEGENERACY_TOL,
};
use xxz_core::probes::{
    ct_certificate, dressed_resolvent_block, energy_reduction_check, evolution_bound,
    evolution_decay_check, DecayProfile, ProbeFlavor, ProbeParams, ReductionOptions,
};
use xxz_core::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn omega_for(lambda: &Region, seed: u64, stream: u64) -> Disorder {
    sample_omega(lambda, &DistributionSpec::Uniform01, seed, stream).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn describe_fit(p: &DecayProfile) -> String {
    let ci = p
        .rate_ci
        .map_or("none".to_string(), |(lo, hi)| format!("[{lo:.3}, {hi:.3}]"));
    format!("rate {:.3}, 95% CI {ci}, R^2 {:.4}", p.rate, p.r_squared)
}

fn identity_battery_run() -> Outcome {
    let mut config = BatteryConfig::standard(50, 2024).unwrap();
    config.deltas = vec![1.5, 2.0, 5.0, 10.0];
    config.draws = 20;
    let outcome = identity_battery(&config).unwrap();
    let checked: Vec<_> = outcome.summary.iter().filter(|s| !s.info).collect();
    let checks: usize = checked.iter().map(|s| s.checks).sum();
    let unexercised = checked.iter().filter(|s| s.checks == 0).count();
    let worst = checked
        .iter()
        .max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
        .unwrap();
    Outcome {
        pass: outcome.total_failures() == 0 && unexercised == 0,
        detail: format!(
            "{} geometries, {checks} checks, {} failures, {} skipped tuples, largest residual {:.2e} ({})",
            config.geometries.len(),
            outcome.total_failures(),
            outcome.skipped.len(),
            worst.max_residual,
            worst.id
        ),
    }
}

fn random_interval_within(rng: &mut ChaCha8Rng, r: &Region) -> Region {
    let s = r.sites();
    let i = rng.random_range(0..s.len());
    let j = rng.random_range(i..s.len());
    Region::interval(s[i], s[j])
}

fn decoupling_run() -> Outcome {
    let lambda = Region::interval(0, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut tuples, mut worst, mut singular, mut moved) = (0, 0.0f64, 0, 0);
    while tuples < 10 {
        let lo = rng.random_range(0..=8);
        let hi = rng.random_range(lo + 2..=11);
        if lo == 0 && hi == 11 {
            continue;
        }
        let k = Region::interval(lo, hi);
        let inner = deform(&lambda, &k, Depth::Finite(-1)).unwrap();
        let outer = deform(&lambda, &k, Depth::Finite(1)).unwrap();
        let m = random_interval_within(&mut rng, &inner);
        let a = random_interval_within(&mut rng, &m);
        let (o_lo, o_hi) = (outer.sites()[0], *outer.sites().last().unwrap());
        let b = Region::interval(rng.random_range(0..=o_lo), rng.random_range(o_hi..=11));
        let geometry = DecouplingGeometry { a, m, k, b };
        let params =
            ModelParams::new(rng.random_range(1.5..10.0), rng.random_range(0.5..10.0)).unwrap();
        let omega = omega_for(&lambda, 500 + tuples as u64, 0);
        let energy = rng.random_range(-0.5..1.5);
        match check_decoupling(&lambda, &params, &omega, energy, &geometry, 1e-9) {
            Ok(reports) => {
                for r in &reports {
                    if r.id == "decoupling_independence" {
                        moved += usize::from(r.residual != 0.0);
                    } else {
                        worst = worst.max(r.residual);
                    }
                }
                tuples += 1;
            }
            Err(Error::Singular(_)) => singular += 1,
            Err(e) => panic!("{e}"),
        }
    }
    Outcome {
        pass: worst < 1e-9 && moved == 0,
        detail: format!(
            "10 tuples ({singular} redrawn for a near-singular energy), largest residual {worst:.2e}, \
             {moved} independence mismatches"
        ),
    }
}

fn spectral_run() -> Outcome {
    let deltas = [2.0, 5.0, 10.0];
    let (mut worst_ground, mut in_gap, mut count_violations, mut max_ratio) =
        (0.0f64, 0, 0, 0.0f64);
    for i in 0..100u64 {
        let len = 6 + (i % 5) as i64;
        let lambda = Region::interval(0, len - 1);
        let delta = deltas[(i % 3) as usize];
        let params = ModelParams::new(delta, 1.0 + (i % 7) as f64).unwrap();
        let h = build_hamiltonian(
            &lambda,
            &params,
            Some(&omega_for(&lambda, 900, i)),
            Flavor::Full,
        )
        .unwrap();
        let eig = diagonalize(&h, DEGENERACY_TOL).unwrap();
        worst_ground = worst_ground.max(eig.ground_energy().unwrap().abs());
        let g = params.gap();
        in_gap += eig
            .eigenvalues()
            .iter()
            .filter(|&&e| e > 1e-10 && e < g - 1e-10)
            .count();
        for k in 0..=2usize {
            let window = energy_interval(IntervalKind::ClusterUpTo, k, delta).unwrap();
            let count = eig.spectral_count(&window) as f64;
            let bound = k as f64 * (lambda.len() as f64).powi(2 * k as i32) + 1.0;
            count_violations += usize::from(count > bound);
            max_ratio = max_ratio.max(count / bound);
        }
    }
    Outcome {
        pass: worst_ground < 1e-12 && in_gap == 0 && count_violations == 0,
        detail: format!(
            "100 draws: max |E0| {worst_ground:.1e}, {in_gap} eigenvalues in the gap, \
             {count_violations} count violations (largest count/bound {max_ratio:.3})"
        ),
    }
}

fn certificate_run() -> Outcome {
    let lambda = Region::interval(0, 11);
    let model = ModelParams::new(8.0, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut total, mut failures, mut hypothesis_failures, mut worst) = (0, 0, 0, 0.0f64);
    for k in 0..=2usize {
        let window = energy_interval(IntervalKind::UpTo, k, 8.0).unwrap();
        for pair in 0..20u64 {
            let a = random_interval_within(&mut rng, &Region::interval(0, 11));
            let a = if a.len() > 3 {
                Region::interval(a.sites()[0], a.sites()[0] + 2)
            } else {
                a
            };
            let b = Region::interval(
                rng.random_range(0..=a.sites()[0]),
                rng.random_range(*a.sites().last().unwrap()..=11),
            );
            let omega = omega_for(&lambda, 300 + k as u64, pair);
            for _ in 0..5 {
                let energy = rng.random_range(-1.0..window.upper - 1e-3);
                let probe = ProbeParams {
                    flavor: ProbeFlavor::Dressed,
                    ..ProbeParams::new(k, energy)
                };
                let cert = ct_certificate(&lambda, &model, &omega, &probe, &a, &b).unwrap();
                total += 1;
                failures += usize::from(cert.measured > cert.bound + 1e-12);
                hypothesis_failures += usize::from(!cert.hypotheses_pass());
                if cert.bound > 0.0 {
                    worst = worst.max(cert.measured / cert.bound);
                }
            }
        }
    }
    Outcome {
        pass: failures == 0 && hypothesis_failures == 0,
        detail: format!(
            "{total} certificates, {failures} bound failures, {hypothesis_failures} hypothesis failures, \
             largest measured/bound {worst:.3e}"
        ),
    }
}

fn reduction_run() -> Outcome {
    let lambda = Region::interval(1, 8);
    let model = ModelParams::new(8.0, 5.0).unwrap();
    let k_sets = [
        Region::interval(1, 4),
        Region::interval(3, 6),
        Region::new([2, 3, 7, 8]).unwrap(),
    ];
    let (mut worst, mut min_level) = (0.0f64, f64::INFINITY);
    for (i, k_set) in k_sets.iter().enumerate() {
        for draw in 0..10u64 {
            let omega = omega_for(&lambda, 40 + i as u64, draw);
            let report = energy_reduction_check(
                &lambda,
                k_set,
                &model,
                &omega,
                0.3,
                1,
                &ReductionOptions::default(),
            )
            .unwrap();
            worst = worst
                .max(report.residual)
                .max(report.dressed_residual)
                .max(report.vacuum_residual);
            if let Some(level) = report.min_nonzero_level {
                min_level = min_level.min(level);
            }
        }
    }
    let floor = model.gap() - 1e-10;
    Outcome {
        pass: worst < 1e-10 && min_level >= floor,
        detail: format!("30 runs, largest residual {worst:.2e}, smallest nonzero level {min_level:.6} (needs >= {floor:.6})"),
    }
}

fn evolution_run() -> Outcome {
    let lambda = Region::interval(0, 7);
    let model = ModelParams::new(4.0, 1.0).unwrap();
    let h = build_hamiltonian(
        &lambda,
        &model,
        Some(&omega_for(&lambda, 12, 0)),
        Flavor::Full,
    )
    .unwrap();
    let eig = diagonalize(&h, DEGENERACY_TOL).unwrap();
    let times = [0.5, 1.0, 2.0];
    let (mut pairs, mut failures, mut worst) = (0, 0, 0.0f64);
    for a_lo in 0..8 {
        for a_hi in a_lo..8 {
            for b_lo in 0..=a_lo {
                for b_hi in a_hi..8 {
                    let (a, b) = (Region::interval(a_lo, a_hi), Region::interval(b_lo, b_hi));
                    let report =
                        evolution_decay_check(&eig, 0.25, &a, &b, &times, None, 1e-12).unwrap();
                    if !report
                        .distance
                        .finite()
                        .is_some_and(|r| (1..=6).contains(&r))
                    {
                        continue;
                    }
                    pairs += 1;
                    for s in &report.samples {
                        let bound = evolution_bound(0.25, s.time, report.distance);
                        failures += usize::from(s.measured > bound + 1e-12);
                        worst = worst.max(s.measured / bound);
                    }
                }
            }
        }
    }
    Outcome {
        pass: failures == 0 && pairs > 0,
        detail: format!("{pairs} (A, B) pairs x 3 times, {failures} failures, largest measured/bound {worst:.3}"),
    }
}

fn census_run() -> Outcome {
    let mut mismatches = 0;
    let mut cases = 0;
    for len in 1..=12i64 {
        let lambda = Region::interval(0, len - 1);
        let l = len as u64;
        for n in 0..=l {
            let exact = exact_cluster_census(&lambda, n as usize).unwrap();
            for m in 0..=n {
                let closed = if n == 0 {
                    u128::from(m == 0)
                } else if m == 0 || l < n {
                    0
                } else {
                    binomial(l - n + 1, m) * binomial(n - 1, m - 1)
                };
                mismatches += usize::from(exact.get(m as usize).copied().unwrap_or(0) != closed);
                cases += 1;
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{cases} (L, N, m) cases, {mismatches} mismatches"),
    }
}

fn fractional_moment_run() -> Outcome {
    let lambda = Region::interval(1, 12);
    let model = ModelParams::new(8.0, 10.0).unwrap();
    let probe = ProbeParams {
        s: 0.3,
        ..ProbeParams::new(1, 0.4)
    };
    let a = Region::new([6]).unwrap();
    let scan = frac_moment_scan(
        &lambda,
        &model,
        &probe,
        &a,
        &[1, 2, 3, 4, 5],
        Dressing::ClusterDressed,
        &McConfig::new(500, 8),
    )
    .unwrap();
    match scan.decay_profile(0.0) {
        Ok(p) => Outcome {
            pass: p.rate > 0.0 && p.rate_significant() && p.r_squared >= 0.9,
            detail: describe_fit(&p),
        },
        Err(e) => Outcome {
            pass: false,
            detail: format!("fit failed: {e}"),
        },
    }
}

fn wegner_run() -> Outcome {
    let lambda = Region::interval(0, 7);
    let k_set = Region::interval(0, 3);
    let scan = wegner_scan(
        &lambda,
        &k_set,
        1,
        8.0,
        1.2,
        &[0.01, 0.02, 0.04],
        &[2.0, 4.0],
        &McConfig::new(2000, 9),
    )
    .unwrap();
    let (weak, strong) = (&scan.fits[0], &scan.fits[1]);
    let ratio = strong.slope / weak.slope;
    Outcome {
        pass: weak.r_squared >= 0.95 && strong.r_squared >= 0.95 && (0.3..=0.8).contains(&ratio),
        detail: format!(
            "slopes {:.3} (lambda 2, R^2 {:.4}) and {:.3} (lambda 4, R^2 {:.4}), ratio {ratio:.3}",
            weak.slope, weak.r_squared, strong.slope, strong.r_squared
        ),
    }
}

fn large_deviation_run() -> Outcome {
    let pair = ModelParams::new(2.0, 1.0).unwrap();
    let single = event_probability(
        &Region::interval(0, 1),
        1,
        2,
        &pair,
        &McConfig::new(10_000, 10),
    )
    .unwrap();
    let lambda = Region::interval(1, 12);
    let model = ModelParams::new(2.0, 0.5).unwrap();
    let probs: Vec<f64> = [2, 4, 6]
        .iter()
        .map(|&n| {
            event_probability(&lambda, 1, n, &model, &McConfig::new(10_000, 11))
                .unwrap()
                .mean
        })
        .collect();
    let logs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    let monotone = logs.iter().all(|l| l.is_finite()) && logs.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: (single.mean - 0.125).abs() <= 0.01 && monotone,
        detail: format!(
            "single config {:.4} (target 0.125 +/- 0.01); log P at N = 2, 4, 6: {:.3}, {:.3}, {:.3}",
            single.mean, logs[0], logs[1], logs[2]
        ),
    }
}

fn dynamical_localization_run() -> Outcome {
    let lambda = Region::interval(1, 12);
    let model = ModelParams::new(8.0, 10.0).unwrap();
    let a = Region::new([6]).unwrap();
    let scan = dynloc_expectation(
        &lambda,
        &model,
        1,
        &a,
        &[1, 2, 3, 4, 5],
        &McConfig::new(300, 12),
    )
    .unwrap();
    match scan.decay_profile(0.0) {
        Ok(p) => Outcome {
            pass: p.rate > 0.0 && p.rate_significant(),
            detail: describe_fit(&p),
        },
        Err(e) => Outcome {
            pass: false,
            detail: format!("fit failed: {e}"),
        },
    }
}

fn oracle_equivalence_run() -> Outcome {
    let lambda = Region::interval(1, 8);
    let all = (1u64 << 8) - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut worst, mut probes) = (0.0f64, 0);
    while probes < 20 {
        let (delta, strength) = (rng.random_range(1.5..10.0), rng.random_range(0.5..10.0));
        let model = ModelParams::new(delta, strength).unwrap();
        let omega = omega_for(&lambda, 600, probes);
        let h = build_hamiltonian(&lambda, &model, Some(&omega), Flavor::Full).unwrap();
        let field: Vec<f64> = omega
            .on(&lambda)
            .unwrap()
            .iter()
            .map(|w| strength * w)
            .collect();
        let dense = dense_h_sites(lambda.sites(), all, &field, delta);
        let a = random_interval_within(&mut rng, &Region::interval(1, 8));
        let b = deform(&lambda, &a, Depth::Finite(rng.random_range(0..=2))).unwrap();
        let energy = rng.random_range(-0.5..1.5);
        let probe = ProbeParams::new(1, energy);
        let block = match dressed_resolvent_block(
            &h,
            &probe,
            &[Selector::Occupied(a.clone())],
            &[Selector::Empty(b.clone())],
        ) {
            Ok(block) => block,
            Err(Error::Singular(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let (am, bm) = (a.mask_in(&lambda).unwrap(), b.mask_in(&lambda).unwrap());
        let oracle = &proj(8, |c| c & am != 0)
            * &shifted_inverse(&dense, energy)
            * &proj(8, |c| c & bm == 0);
        let (op, hs) = (spectral_norm(&oracle), oracle.norm_l2());
        if op < 1e-8 {
            continue;
        }
        worst = worst
            .max(rel(block.operator_norm, op))
            .max(rel(block.hs_norm, hs));
        probes += 1;
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!("20 probes, largest relative deviation {worst:.2e}"),
    }
}

/// Name, runtime limit in seconds and the run itself.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("identity battery", Some(120), identity_battery_run),
        ("decoupling chain", Some(60), decoupling_run),
        ("spectral structure", Some(120), spectral_run),
        ("resolvent certificate", Some(180), certificate_run),
        ("energy reduction", Some(60), reduction_run),
        ("evolution bound", Some(60), evolution_run),
        ("cluster combinatorics", Some(30), census_run),
        ("fractional-moment decay", Some(1800), fractional_moment_run),
        ("Wegner scaling", None, wegner_run),
        ("large-deviation probe", None, large_deviation_run),
        ("dynamical localization", None, dynamical_localization_run),
        ("oracle equivalence", None, oracle_equivalence_run),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|s| elapsed <= Duration::from_secs(s));
        let pass = outcome.pass && in_time;
        failed += usize::from(!pass);
        let budget = limit.map_or(String::new(), |s| format!(", limit {s} s"));
        println!(
            "criterion {:>2} {} {name}: {} ({:.1} s{budget})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
