use super::resolvent::{ProbeParams, Resolvent};
use crate::error::{Error, Result};
use crate::lattice::{deform, shell, Depth, Region};
use crate::operators::{build_hamiltonian, Disorder, ModelParams, OperatorMatrix, Selector};
use serde::{Deserialize, Serialize};

/// Largest region for which every subset is visited by [`ThetaScope::Full`].
pub const FULL_SCOPE_LIMIT: usize = 10;

/// Which restrictions `Θ ⊆ Λ` enter the maximum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaScope {
    /// Every nonempty subset (small regions only).
    Full,
    /// Runs of consecutive sites of the sorted region.
    Subintervals,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FEstimate {
    pub value: f64,
    pub theta: Region,
    pub site: i64,
    /// Number of restrictions whose solve was flagged near-singular.
    pub flagged: usize,
    pub evaluated: usize,
}

/// Candidate restrictions for the given scope.
pub fn theta_candidates(lambda: &Region, scope: ThetaScope) -> Result<Vec<Region>> {
    let s = lambda.sites();
    match scope {
        ThetaScope::Subintervals => {
            let mut out = Vec::with_capacity(s.len() * (s.len() + 1) / 2);
            for i in 0..s.len() {
                for j in i..s.len() {
                    out.push(Region::new(s[i..=j].iter().copied())?);
                }
            }
            Ok(out)
        }
        ThetaScope::Full => {
            if s.len() > FULL_SCOPE_LIMIT {
                return Err(Error::RegionTooLarge(s.len(), FULL_SCOPE_LIMIT));
            }
            Ok((1u64..1 << s.len())
                .map(|m| Region::from_mask(lambda, m))
                .collect())
        }
    }
}

/// HS norm of `Q_{<=k} N_j R P+^{[j]_r} Q_{<=k}` on `theta`, for every `j` in `theta`.
pub fn f_terms(
    theta: &Region,
    model: &ModelParams,
    omega: &Disorder,
    probe: &ProbeParams,
    r: u64,
) -> Result<(Vec<(i64, f64)>, bool)> {
    let h = build_hamiltonian(theta, model, Some(omega), probe.hamiltonian_flavor())?;
    let res = Resolvent::new(&h, probe.energy)?;
    let mut out = Vec::with_capacity(theta.len());
    for j in theta.iter() {
        let ball = deform(theta, &Region::new([j])?, Depth::Finite(r as i64))?;
        let panel = res.dressed_panel(
            &[Selector::ClustersUpTo(probe.k), Selector::Site(j)],
            &[Selector::Empty(ball), Selector::ClustersUpTo(probe.k)],
        )?;
        out.push((j, panel.frobenius()));
    }
    Ok((out, res.near_singular()))
}

/// Single-realization value of the restricted maximum over `Θ` and `j ∈ Θ`.
pub fn f_estimator(
    lambda: &Region,
    model: &ModelParams,
    omega: &Disorder,
    probe: &ProbeParams,
    r: u64,
    scope: ThetaScope,
) -> Result<FEstimate> {
    probe.validate()?;
    model.validate()?;
    let mut best = FEstimate {
        value: 0.0,
        theta: Region::empty(),
        site: 0,
        flagged: 0,
        evaluated: 0,
    };
    for theta in theta_candidates(lambda, scope)? {
        let (terms, flagged) = f_terms(&theta, model, omega, probe, r)?;
        best.flagged += flagged as usize;
        best.evaluated += 1;
        for (j, v) in terms {
            if v > best.value || best.theta.is_empty() {
                best.value = v;
                best.theta = theta.clone();
                best.site = j;
            }
        }
    }
    Ok(best)
}

/// The shell-dressed block `Q P+^{[A]_p} P-^{]A[_p} R P+^{[A]_q} P-^{]A[_q} Q`.
pub fn f_pq_selectors(
    lambda: &Region,
    a: &Region,
    k: usize,
    p: i64,
    q: i64,
) -> Result<(Vec<Selector>, Vec<Selector>)> {
    let side = |x: i64| -> Result<Vec<Selector>> {
        Ok(vec![
            Selector::ClustersUpTo(k),
            Selector::Empty(deform(lambda, a, Depth::Finite(x))?),
            Selector::Occupied(shell(lambda, a, x)?),
        ])
    };
    Ok((side(p)?, side(q)?))
}

/// Operator and HS norm of the shell-dressed block for one `(p, q)`.
pub fn f_pq(
    h: &OperatorMatrix,
    probe: &ProbeParams,
    a: &Region,
    p: i64,
    q: i64,
) -> Result<super::DressedBlock> {
    let (left, right) = f_pq_selectors(h.region(), a, probe.k, p, q)?;
    super::dressed_resolvent_block(h, probe, &left, &right)
}
