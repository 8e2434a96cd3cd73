use super::{resolvent_tol, IdentityReport};
use crate::error::{Error, Result};
use crate::lattice::{boundary, deform, shell, BoundaryKind, Depth, Region};
use crate::linalg;
use crate::operators::{
    bond_operator, bond_term, build_decoupled, build_hamiltonian, build_projector,
    full_space_hamiltonian, full_space_number_operator, hopping_operator, Disorder, Flavor,
    KronOptions, ModelParams, OperatorMatrix, Selector, Weight,
};
use crate::probes::Resolvent;

/// Largest region for which every subset enters the set-indexed checks.
const ALL_SUBSETS_LIMIT: usize = 8;

/// Largest region checked against the Kronecker-built Hamiltonian.
const KRON_LIMIT: usize = 10;

/// Smallest admissible distance from the energy to the spectra in resolvent checks.
const WHOLE_COMPONENT_NOTE: &str = "sets M containing a whole component of the region are excluded";

pub(crate) const SPECTRAL_MARGIN: f64 = 1e-3;

pub(crate) fn describe(lambda: &Region, params: &ModelParams) -> String {
    format!(
        "region={lambda} delta={} lambda={}",
        params.delta, params.lambda
    )
}

pub(crate) fn weight(lambda: &Region, s: Selector) -> Result<Weight> {
    s.resolve(lambda)
}

fn identity(lambda: &Region) -> Weight {
    Selector::Identity
        .resolve(lambda)
        .expect("identity resolves")
}

/// Maximum over masks of `|f(mask)|`.
fn diagonal_residual(lambda: &Region, f: impl Fn(u64) -> f64) -> f64 {
    (0..1u64 << lambda.len())
        .map(|c| f(c).abs())
        .fold(0.0, f64::max)
}

fn mask(lambda: &Region, s: &Region) -> u64 {
    s.mask_in(lambda).expect("subset of the region")
}

fn occupied(c: u64, m: u64) -> f64 {
    (c & m != 0) as u8 as f64
}

fn empty(c: u64, m: u64) -> f64 {
    (c & m == 0) as u8 as f64
}

fn sandwich(op: &OperatorMatrix, left: Option<&Weight>, right: Option<&Weight>) -> OperatorMatrix {
    let id = identity(op.region());
    op.weighted(left.unwrap_or(&id), right.unwrap_or(&id))
}

/// Nonempty subsets used by set-indexed identities: all of them on small regions,
/// connected ones otherwise.
fn test_sets(lambda: &Region) -> Vec<Region> {
    if lambda.len() <= ALL_SUBSETS_LIMIT {
        (1u64..1 << lambda.len())
            .map(|m| Region::from_mask(lambda, m))
            .collect()
    } else {
        connected_sets(lambda)
    }
}

pub(crate) fn connected_sets(lambda: &Region) -> Vec<Region> {
    let mut out = Vec::new();
    for comp in lambda.components() {
        let s = comp.sites();
        for i in 0..s.len() {
            for j in i..s.len() {
                out.push(Region::interval(s[i], s[j]));
            }
        }
    }
    out
}

fn bonds(lambda: &Region) -> Vec<i64> {
    lambda
        .sites()
        .windows(2)
        .filter(|w| w[1] - w[0] == 1)
        .map(|w| w[0])
        .collect()
}

/// Algebraic identities for projections on pairs, the bond term, the crossing operator and
/// the three resolutions of the identity. The field does not enter any of them.
pub fn check_appendix_a(
    lambda: &Region,
    params: &ModelParams,
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    params.validate()?;
    let p = describe(lambda, params);
    let mut out = Vec::new();
    let sites = lambda.sites();

    let mut r: f64 = 0.0;
    for &i in sites {
        let (p1, n1) = (
            weight(lambda, Selector::Occupied(Region::new([i])?))?,
            weight(lambda, Selector::Site(i))?,
        );
        r = r.max(diagonal_residual(lambda, |c| p1.eval(c) - n1.eval(c)));
    }
    out.push(IdentityReport::new("pminus_single_site", &p, r, tol, ""));

    let mut r: f64 = 0.0;
    for &i in sites {
        for &j in sites {
            if i == j {
                continue;
            }
            let pair = weight(lambda, Selector::Occupied(Region::new([i, j])?))?;
            let (ni, nj) = (
                weight(lambda, Selector::Site(i))?,
                weight(lambda, Selector::Site(j))?,
            );
            let ej = weight(lambda, Selector::Empty(Region::new([j])?))?;
            r = r.max(diagonal_residual(lambda, |c| {
                pair.eval(c) - (ni.eval(c) + nj.eval(c) - ni.eval(c) * nj.eval(c))
            }));
            r = r.max(diagonal_residual(lambda, |c| {
                pair.eval(c) - (ej.eval(c) * ni.eval(c) + nj.eval(c))
            }));
        }
    }
    out.push(IdentityReport::new(
        "pminus_pair",
        &p,
        r,
        tol,
        if sites.len() < 2 {
            "fewer than two sites"
        } else {
            ""
        },
    ));

    let ev = linalg::sym_eigenvalues(bond_operator(params.delta)?.as_ref())?;
    let hop = params.hopping();
    let computed = [-1.0, -hop, 0.0, hop];
    let r = ev
        .iter()
        .zip(computed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(IdentityReport::new(
        "bond_spectrum",
        &p,
        r,
        tol,
        format!(
            "computed {{{:.6}, {:.6}, {:.6}, {:.6}}}; the listed values -1, 0, +-1/delta would give +-{:.6}",
            ev[0],
            ev[1],
            ev[2],
            ev[3],
            1.0 / params.delta
        ),
    ));

    let bl = bonds(lambda);
    let vacuous = if bl.is_empty() {
        "no bonds in the region"
    } else {
        ""
    };
    let mut res = [0.0f64; 6];
    for &i in &bl {
        let h = bond_term(lambda, params, i)?;
        let pair = Region::new([i, i + 1])?;
        let e_pair = weight(lambda, Selector::Empty(pair.clone()))?;
        let o_pair = weight(lambda, Selector::Occupied(pair.clone()))?;
        let e_i = weight(lambda, Selector::Empty(Region::new([i])?))?;
        let e_j = weight(lambda, Selector::Empty(Region::new([i + 1])?))?;
        let m = mask(lambda, &pair);
        let both = |c: u64| (c & m == m) as u8 as f64;
        let one = |_: u64| 1.0;
        res[0] = res[0].max((h.norm()? - 1.0).abs());
        res[1] = res[1]
            .max(sandwich(&h, None, Some(&e_pair)).norm()?)
            .max(sandwich(&h, Some(&e_pair), None).norm()?);
        res[2] = res[2]
            .max((sandwich(&h, Some(&e_i), None).norm()? - hop).abs())
            .max((sandwich(&h, Some(&e_j), None).norm()? - hop).abs());
        res[3] = res[3]
            .max(sandwich(&h, Some(&e_i), Some(&e_i)).norm()?)
            .max(sandwich(&h, Some(&e_j), Some(&e_j)).norm()?);
        let h_nn = h.weighted_by(one, both);
        let nn_h = h.weighted_by(both, one);
        let nn_h_nn = h.weighted_by(both, both);
        res[4] = res[4]
            .max(h_nn.sub(&nn_h)?.norm()?)
            .max(nn_h.sub(&nn_h_nn)?.norm()?);
        res[5] = res[5]
            .max(h.sub(&sandwich(&h, None, Some(&o_pair)))?.norm()?)
            .max(h.sub(&sandwich(&h, Some(&o_pair), None))?.norm()?)
            .max(h.sub(&sandwich(&h, Some(&o_pair), Some(&o_pair)))?.norm()?);
    }
    for (id, r) in [
        "bond_norm_one",
        "bond_kills_empty_pair",
        "bond_edge_norm",
        "bond_edge_compression_zero",
        "bond_double_occupation",
        "bond_pminus_support",
    ]
    .into_iter()
    .zip(res)
    {
        out.push(IdentityReport::new(id, &p, r, tol, vacuous));
    }

    let zero = Disorder::zero(lambda);
    let mut support: f64 = 0.0;
    for k in test_sets(lambda) {
        let gamma = build_decoupled(lambda, &k, params, &zero)?.crossing;
        let d = weight(
            lambda,
            Selector::Occupied(boundary(lambda, &k, BoundaryKind::Full)?),
        )?;
        support = support.max(gamma.sub(&sandwich(&gamma, Some(&d), Some(&d)))?.norm()?);
    }
    out.push(IdentityReport::new(
        "crossing_boundary_support",
        &p,
        support,
        tol,
        "",
    ));
    let mut excess: f64 = 0.0;
    for k in connected_sets(lambda) {
        let gamma = build_decoupled(lambda, &k, params, &zero)?.crossing;
        let inside = weight(lambda, Selector::Empty(k.clone()))?;
        let outside = weight(lambda, Selector::Empty(lambda.difference(&k)))?;
        let worst = sandwich(&gamma, Some(&inside), None)
            .norm()?
            .max(sandwich(&gamma, Some(&outside), None).norm()?);
        excess = excess.max(worst - 1.0 / params.delta);
    }
    out.push(IdentityReport::new(
        "crossing_edge_bound",
        &p,
        excess.max(0.0),
        tol,
        "residual is the excess over 1/delta",
    ));

    out.extend(resolutions(lambda, &p, tol)?);
    Ok(out)
}

fn resolutions(lambda: &Region, p: &str, tol: f64) -> Result<Vec<IdentityReport>> {
    let l = lambda.len() as i64;
    let mut r = [0.0f64; 3];
    for m in test_sets(lambda) {
        let mm = mask(lambda, &m);
        let comp = mask(lambda, &deform(lambda, &m, Depth::Infinite)?);
        let layer = |q: i64| -> Result<(u64, u64)> {
            Ok((
                mask(lambda, &deform(lambda, &m, Depth::Finite(q))?),
                mask(lambda, &shell(lambda, &m, q)?),
            ))
        };
        let outer: Vec<(u64, u64, u64)> = (0..=l)
            .map(|q| {
                let (inner, sh) = layer(q)?;
                let ex = mask(
                    lambda,
                    &boundary(
                        lambda,
                        &deform(lambda, &m, Depth::Finite(q))?,
                        BoundaryKind::Exterior,
                    )?,
                );
                Ok((inner, sh, ex))
            })
            .collect::<Result<_>>()?;
        let inner_layers: Vec<(u64, u64, u64)> = (-(m.len() as i64)..0)
            .map(|q| {
                let (inner, sh) = layer(q)?;
                let next = deform(lambda, &m, Depth::Finite(q + 1))?;
                let bin = mask(lambda, &boundary(lambda, &next, BoundaryKind::Interior)?);
                Ok((inner, sh, bin))
            })
            .collect::<Result<_>>()?;
        let sum = |ls: &[(u64, u64, u64)], c: u64, alt: bool| -> f64 {
            ls.iter()
                .map(|&(inner, sh, other)| {
                    empty(c, inner) * occupied(c, if alt { other } else { sh })
                })
                .sum()
        };
        for alt in [false, true] {
            r[0] = r[0].max(diagonal_residual(lambda, |c| {
                occupied(c, comp) * empty(c, mm) - sum(&outer, c, alt)
            }));
        }
        // Trimming never empties a component of lambda lying inside M.
        if lambda.components().iter().any(|c| c.is_subset(&m)) {
            continue;
        }
        for alt in [false, true] {
            r[1] = r[1].max(diagonal_residual(lambda, |c| {
                occupied(c, mm) - sum(&inner_layers, c, alt)
            }));
        }
        r[2] = r[2].max(diagonal_residual(lambda, |c| {
            occupied(c, comp) - sum(&inner_layers, c, false) - sum(&outer, c, false)
        }));
    }
    Ok(vec![
        IdentityReport::new("resolution_exterior", p, r[0], tol, ""),
        IdentityReport::new("resolution_interior", p, r[1], tol, WHOLE_COMPONENT_NOTE),
        IdentityReport::new("resolution_component", p, r[2], tol, WHOLE_COMPONENT_NOTE),
    ])
}

fn below(min_eig: f64) -> f64 {
    (-min_eig).max(0.0)
}

/// Checks that do not involve the field.
pub(crate) fn static_positivity(
    lambda: &Region,
    params: &ModelParams,
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    let p = describe(lambda, params);
    let two = Region::interval(0, 1);
    let pair_hop = hopping_operator(&two)?;
    let base = pair_hop.diagonal_like(|c| 0.5 * c.count_ones() as f64 - (c == 0b11) as u8 as f64);
    let r = below(base.add_scaled(&pair_hop, -0.5)?.min_eigenvalue()?)
        .max(below(base.add_scaled(&pair_hop, 0.5)?.min_eigenvalue()?));
    let mut out = vec![IdentityReport::new("two_site_positivity", &p, r, tol, "")];

    let w = build_projector(lambda, &Selector::Clusters)?;
    let lap = hopping_operator(lambda)?;
    let r = below(w.add_scaled(&lap, 0.5)?.min_eigenvalue()?)
        .max(below(w.add_scaled(&lap, -0.5)?.min_eigenvalue()?));
    out.push(IdentityReport::new("cluster_hopping_bound", &p, r, tol, ""));
    Ok(out)
}

/// Checks that depend on the field realization.
pub(crate) fn random_positivity(
    lambda: &Region,
    params: &ModelParams,
    omega: &Disorder,
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    let p = describe(lambda, params);
    let g = params.gap();
    let mut out = Vec::new();
    let w = build_projector(lambda, &Selector::Clusters)?;
    let h0 = build_hamiltonian(lambda, params, None, Flavor::Free)?;
    let h = build_hamiltonian(lambda, params, Some(omega), Flavor::Full)?;
    let r = below(h0.add_scaled(&w, -g)?.min_eigenvalue()?)
        .max(below(
            w.scale(1.0 + 1.0 / params.delta)
                .sub(&h0)?
                .min_eigenvalue()?,
        ))
        .max(below(h.add_scaled(&w, -g)?.min_eigenvalue()?));
    out.push(IdentityReport::new(
        "free_energy_cluster_sandwich",
        &p,
        r,
        tol,
        "",
    ));

    let mut r: f64 = 0.0;
    for k in 0..=3usize {
        let hk = build_hamiltonian(lambda, params, Some(omega), Flavor::Dressed(k))?;
        r = r.max(below(hk.shift(-((k + 1) as f64) * g).min_eigenvalue()?));
    }
    out.push(IdentityReport::new(
        "dressed_energy_floor",
        &p,
        r,
        tol,
        "k = 0..3",
    ));

    let spec = h.eigenvalues()?;
    let depth = spec
        .iter()
        .filter(|&&e| e > 0.0 && e < g)
        .map(|&e| e.min(g - e))
        .fold(0.0, f64::max);
    out.push(IdentityReport::new(
        "spectral_gap",
        &p,
        depth,
        tol,
        "residual is the depth of the deepest eigenvalue inside (0, 1 - 1/delta)",
    ));

    let e0 = spec.first().copied().unwrap_or(0.0);
    let vac = h.block(0).map(|b| b.entry(0, 0)).unwrap_or(0.0);
    let excited = h
        .blocks()
        .iter()
        .filter(|b| b.particles > 0)
        .map(|b| linalg::min_eigenvalue(b.to_dense().as_ref()));
    let mut r = e0.abs().max(vac.abs());
    for m in excited {
        r = r.max(below(m?));
    }
    out.push(IdentityReport::new(
        "vacuum_ground_state",
        &p,
        r,
        tol,
        format!("ground energy {e0:e}"),
    ));

    let half = Region::new(lambda.sites()[..lambda.len().div_ceil(2)].iter().copied())?;
    let diagonals = [
        w.clone(),
        build_projector(lambda, &Selector::Number(lambda.clone()))?,
        build_hamiltonian(lambda, params, Some(omega), Flavor::Field)?,
        build_projector(lambda, &Selector::ClusterCounts(vec![1, 2]))?,
        build_projector(lambda, &Selector::Empty(half.clone()))?,
        build_projector(lambda, &Selector::Occupied(half))?,
    ];
    let mut r: f64 = 0.0;
    for i in 0..diagonals.len() {
        for j in i + 1..diagonals.len() {
            r = r.max(diagonals[i].commutator(&diagonals[j])?.norm()?);
        }
    }
    out.push(IdentityReport::new("diagonal_commutation", &p, r, tol, ""));

    if lambda.len() <= KRON_LIMIT {
        let full = full_space_hamiltonian(
            lambda,
            params,
            Some(omega),
            Flavor::Full,
            &KronOptions::default(),
        )?;
        let n = full_space_number_operator(lambda)?;
        let comm = &full * &n - &n * &full;
        out.push(IdentityReport::new(
            "number_conservation",
            &p,
            linalg::spectral_norm(comm.as_ref())?,
            tol,
            "",
        ));
        let diff = &h.to_full_dense()? - &full;
        out.push(IdentityReport::new(
            "kron_route_agreement",
            &p,
            linalg::spectral_norm(diff.as_ref())?,
            tol,
            "",
        ));
    } else {
        let n = build_projector(lambda, &Selector::Number(lambda.clone()))?;
        out.push(IdentityReport::new(
            "number_conservation",
            &p,
            h.commutator(&n)?.norm()?,
            tol,
            "sector-blocked route; region too large for the Kronecker build",
        ));
        out.push(IdentityReport::new(
            "kron_route_agreement",
            &p,
            0.0,
            tol,
            "not evaluated: region too large for the Kronecker build",
        ));
    }

    let comps = lambda.components();
    let mut r: f64 = 0.0;
    let id = identity(lambda);
    for sel in 1u64..1 << comps.len().min(10) {
        let u = comps
            .iter()
            .enumerate()
            .filter(|(c, _)| sel >> c & 1 == 1)
            .fold(Region::empty(), |acc, (_, c)| acc.union(c));
        for s in [Selector::Empty(u.clone()), Selector::Occupied(u)] {
            let d = weight(lambda, s)?;
            r = r.max(h.weighted(&id, &d).sub(&h.weighted(&d, &id))?.norm()?);
        }
    }
    out.push(IdentityReport::new(
        "component_projector_commutation",
        &p,
        r,
        tol,
        "",
    ));
    Ok(out)
}

/// Operator inequalities, the spectral gap, the ground state and the commutation battery.
pub fn check_positivity_and_spectrum(
    lambda: &Region,
    params: &ModelParams,
    omega: &Disorder,
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    params.validate()?;
    let mut out = static_positivity(lambda, params, tol)?;
    out.extend(random_positivity(lambda, params, omega, tol)?);
    Ok(out)
}

pub(crate) fn spectral_distance(op: &OperatorMatrix, e: f64) -> Result<f64> {
    Ok(op
        .eigenvalues()?
        .iter()
        .map(|x| (x - e).abs())
        .fold(f64::INFINITY, f64::min))
}

/// The resolvent identity between `H` and its lifted version, in both orders and iterated once.
pub fn check_resolvent_identities(
    lambda: &Region,
    params: &ModelParams,
    omega: &Disorder,
    energy: f64,
    k: usize,
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    params.validate()?;
    if k == 0 {
        return Err(Error::OutOfRange(
            "the lifted resolvent identity needs k >= 1".into(),
        ));
    }
    let p = format!("{} k={k} E={energy}", describe(lambda, params));
    let h = build_hamiltonian(lambda, params, Some(omega), Flavor::Full)?;
    let hk = build_hamiltonian(lambda, params, Some(omega), Flavor::Dressed(k))?;
    for op in [&h, &hk] {
        if spectral_distance(op, energy)? < SPECTRAL_MARGIN {
            return Err(Error::Singular(energy));
        }
    }
    let (rs, rks) = (Resolvent::new(&h, energy)?, Resolvent::new(&hk, energy)?);
    let cond = rs.condition().max(rks.condition());
    let (r, rk) = (rs.to_operator()?, rks.to_operator()?);
    let q = weight(lambda, Selector::WeightedClustersUpTo(k))?;
    let c = k as f64 * params.gap();
    let id = identity(lambda);
    let base = r.sub(&rk)?;
    let left = base
        .sub(&r.weighted(&id, &q).matmul(&rk)?.scale(c))?
        .norm()?;
    let right = base
        .sub(&rk.weighted(&id, &q).matmul(&r)?.scale(c))?
        .norm()?;
    let rk_q = rk.weighted(&id, &q);
    let second = base
        .sub(&rk_q.matmul(&rk)?.scale(c))?
        .sub(&rk_q.matmul(&r.weighted(&id, &q))?.matmul(&rk)?.scale(c * c))?
        .norm()?;
    let t = resolvent_tol(tol, cond);
    let note = format!("condition estimate {cond:.3e}");
    Ok(vec![
        IdentityReport::new("resolvent_identity_left", &p, left, t, note.clone()),
        IdentityReport::new("resolvent_identity_right", &p, right, t, note.clone()),
        IdentityReport::new("resolvent_second_order", &p, second, t, note),
    ])
}
