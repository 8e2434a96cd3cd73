use super::algebra::{describe, spectral_distance, weight, SPECTRAL_MARGIN};
use super::{resolvent_tol, IdentityReport};
use crate::disorder::uniform_variate;
use crate::error::{Error, Result};
use crate::lattice::{boundary, deform, BoundaryKind, Depth, Region};
use crate::operators::{
    build_decoupled, build_hamiltonian, build_local_hamiltonian, Disorder, Flavor, ModelParams,
    OperatorMatrix, Selector, Weight,
};
use crate::probes::{Panel, Resolvent};
use serde::{Deserialize, Serialize};

/// Stream used to redraw the field on the exterior boundary of `K`.
const REDRAW_STREAM: u64 = 0xdec0;

/// The nested sets `A ⊆ M ⊆ [K]_{-1} ⊆ K ⊆ [K]_1 ⊆ B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecouplingGeometry {
    pub a: Region,
    pub m: Region,
    pub k: Region,
    pub b: Region,
}

impl DecouplingGeometry {
    /// Checks every inclusion of the chain and names the first one that fails.
    pub fn validate(&self, lambda: &Region) -> Result<()> {
        if self.a.is_empty() {
            return Err(Error::EmptyRegion("A".into()));
        }
        if !self.b.is_subset(lambda) {
            return Err(Error::Precondition("B ⊆ Λ fails".into()));
        }
        if !self.k.is_subset(&self.b) {
            return Err(Error::Precondition("K ⊆ B fails".into()));
        }
        let inner = deform(lambda, &self.k, Depth::Finite(-1))?;
        let outer = deform(lambda, &self.k, Depth::Finite(1))?;
        let chain = [
            (&self.a, &self.m, "A ⊆ M"),
            (&self.m, &inner, "M ⊆ [K]_{-1}"),
            (&outer, &self.b, "[K]_1 ⊆ B"),
        ];
        for (small, big, what) in chain {
            if !small.is_subset(big) {
                return Err(Error::Precondition(format!("{what} fails")));
            }
        }
        Ok(())
    }
}

struct Operators {
    full: Resolvent,
    split: Resolvent,
    inside: Resolvent,
    outside: Resolvent,
    gamma_k: OperatorMatrix,
    gamma_k1: OperatorMatrix,
    condition: f64,
}

fn operators(
    lambda: &Region,
    params: &ModelParams,
    omega: &Disorder,
    energy: f64,
    k: &Region,
    k1: &Region,
) -> Result<Operators> {
    let h = build_hamiltonian(lambda, params, Some(omega), Flavor::Full)?;
    let dk = build_decoupled(lambda, k, params, omega)?;
    let dk1 = build_decoupled(lambda, k1, params, omega)?;
    let hk = build_local_hamiltonian(lambda, k, params, omega)?;
    let hout = build_local_hamiltonian(lambda, &lambda.difference(k1), params, omega)?;
    for op in [&h, &dk.split, &hk, &hout] {
        if spectral_distance(op, energy)? < SPECTRAL_MARGIN {
            return Err(Error::Singular(energy));
        }
    }
    let full = Resolvent::new(&h, energy)?;
    let split = Resolvent::new(&dk.split, energy)?;
    let inside = Resolvent::new(&hk, energy)?;
    let outside = Resolvent::new(&hout, energy)?;
    let condition = [&full, &split, &inside, &outside]
        .iter()
        .map(|r| r.condition())
        .fold(1.0, f64::max);
    Ok(Operators {
        full,
        split,
        inside,
        outside,
        gamma_k: dk.crossing,
        gamma_k1: dk1.crossing,
        condition,
    })
}

struct Weights {
    a: Weight,
    m_out: Weight,
    k_out: Weight,
    k_in_edge: Weight,
    k_ex_edge: Weight,
    k1_ex_edge: Weight,
    k1_empty: Weight,
    m_out_in_k: Weight,
    b_outside_k1: Weight,
    b: Weight,
}

/// `P+^{B ∖ [K]_1}` column panel pushed through `R^{Λ∖[K]_1}`, then `P+^{[K]_1} P-^{∂ex [K]_1}`.
fn outer_factor(ops: &Operators, col: &Panel, w: &Weights) -> Result<Panel> {
    Ok(ops
        .outside
        .solve(&col.scale_rows(std::slice::from_ref(&w.b_outside_k1)))?
        .scale_rows(&[w.k1_ex_edge.clone(), w.k1_empty.clone()]))
}

/// `P-^A P+^{M^c ∩ K} R^K P+^{K^c} P-^{∂in K}` applied to a panel.
fn inner_factor(ops: &Operators, x: &Panel, w: &Weights) -> Result<Panel> {
    Ok(ops
        .inside
        .solve(&x.scale_rows(&[w.k_out.clone(), w.k_in_edge.clone()]))?
        .scale_rows(&[w.m_out_in_k.clone(), w.a.clone()]))
}

/// The decoupling chain around `K` and `[K]_1`, and independence of the outer factors from
/// the field on the exterior boundary of `K`.
pub fn check_decoupling(
    lambda: &Region,
    params: &ModelParams,
    omega: &Disorder,
    energy: f64,
    geometry: &DecouplingGeometry,
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    params.validate()?;
    geometry.validate(lambda)?;
    let DecouplingGeometry { a, m, k, b } = geometry;
    let p = format!(
        "{} A={a} M={m} K={k} B={b} E={energy}",
        describe(lambda, params)
    );
    let k1 = deform(lambda, k, Depth::Finite(1))?;
    let ex_k = boundary(lambda, k, BoundaryKind::Exterior)?;
    let mc = lambda.difference(m);
    let w = Weights {
        a: weight(lambda, Selector::Occupied(a.clone()))?,
        m_out: weight(lambda, Selector::Empty(mc.clone()))?,
        k_out: weight(lambda, Selector::Empty(lambda.difference(k)))?,
        k_in_edge: weight(
            lambda,
            Selector::Occupied(boundary(lambda, k, BoundaryKind::Interior)?),
        )?,
        k_ex_edge: weight(lambda, Selector::Occupied(ex_k.clone()))?,
        k1_ex_edge: weight(
            lambda,
            Selector::Occupied(boundary(lambda, &k1, BoundaryKind::Exterior)?),
        )?,
        k1_empty: weight(lambda, Selector::Empty(k1.clone()))?,
        m_out_in_k: weight(lambda, Selector::Empty(mc.intersection(k)))?,
        b_outside_k1: weight(
            lambda,
            Selector::Empty(b.intersection(&lambda.difference(&k1))),
        )?,
        b: weight(lambda, Selector::Empty(b.clone()))?,
    };
    let ops = operators(lambda, params, omega, energy, k, &k1)?;
    let t = resolvent_tol(tol, ops.condition);
    let note = format!("condition estimate {:.3e}", ops.condition);

    let col = Panel::diagonal(&ops.gamma_k, std::slice::from_ref(&w.b));
    let r_col = ops.full.solve(&col)?;
    let lhs = r_col.scale_rows(&[w.m_out.clone(), w.a.clone()]);
    let ma = [w.m_out.clone(), w.a.clone()];

    let x = r_col.left_mul(&ops.gamma_k)?;
    let x_out = x.scale_rows(std::slice::from_ref(&w.k_out));
    let forms = [
        ops.split.solve(&x)?.scale_rows(&ma).scale(-1.0),
        ops.split.solve(&x_out)?.scale_rows(&ma).scale(-1.0),
        ops.inside.solve(&x_out)?.scale_rows(&ma).scale(-1.0),
    ];
    let mut geometric = 0.0f64;
    for f in &forms {
        geometric = geometric.max(lhs.sub(f)?.norm()?);
    }

    let inserted = r_col
        .scale_rows(std::slice::from_ref(&w.k_ex_edge))
        .left_mul(&ops.gamma_k)?
        .scale_rows(&[w.k_out.clone(), w.k_in_edge.clone()]);
    let boundary_insert = lhs
        .sub(&ops.inside.solve(&inserted)?.scale_rows(&ma).scale(-1.0))?
        .norm()?;

    let lhs_outer = r_col.scale_rows(std::slice::from_ref(&w.k_ex_edge));
    let first = outer_factor(&ops, &col, &w)?;
    let through = ops
        .full
        .solve(
            &first
                .left_mul(&ops.gamma_k1)?
                .scale_rows(std::slice::from_ref(&w.k_ex_edge)),
        )?
        .scale_rows(std::slice::from_ref(&w.k_ex_edge));
    let outer = lhs_outer.sub(&through.scale(-1.0))?.norm()?;

    let formula = inner_factor(&ops, &through.left_mul(&ops.gamma_k)?, &w)?;
    let printed = lhs.sub(&formula)?.norm()?;
    let flipped = lhs.add(&formula)?.norm()?;

    let mut redrawn = omega.clone();
    for s in ex_k.iter() {
        let old = omega.get(s).ok_or(Error::SiteNotInRegion(s))?;
        let mut v = uniform_variate(old.to_bits(), REDRAW_STREAM, s);
        if v == old {
            v = (old + 0.5).fract();
        }
        redrawn = redrawn.with_value(s, v)?;
    }
    let ops2 = operators(lambda, params, &redrawn, energy, k, &k1)?;
    let probe = Panel::diagonal(&ops.gamma_k, &[w.k_out.clone(), w.k_in_edge.clone()]);
    let first_change = first.sub(&outer_factor(&ops2, &col, &w)?)?.max_abs();
    let last_change = inner_factor(&ops, &probe, &w)?
        .sub(&inner_factor(&ops2, &probe, &w)?)?
        .max_abs();
    let middle_change = through.sub(
        &ops2
            .full
            .solve(
                &first
                    .left_mul(&ops.gamma_k1)?
                    .scale_rows(std::slice::from_ref(&w.k_ex_edge)),
            )?
            .scale_rows(std::slice::from_ref(&w.k_ex_edge)),
    )?;

    Ok(vec![
        IdentityReport::new(
            "decoupling_geometric",
            &p,
            geometric,
            t,
            format!("{note}; worst of three forms"),
        ),
        IdentityReport::new(
            "decoupling_boundary_insert",
            &p,
            boundary_insert,
            t,
            note.clone(),
        ),
        IdentityReport::new("decoupling_outer", &p, outer, t, note.clone()),
        IdentityReport::new(
            "decoupling_formula",
            &p,
            printed,
            t,
            format!("{note}; residual with the opposite overall sign {flipped:.3e}"),
        ),
        IdentityReport::new(
            "decoupling_independence",
            &p,
            first_change.max(last_change),
            f64::MIN_POSITIVE,
            format!(
                "field redrawn on {ex_k}; middle factor moved by {:.3e}",
                middle_change.max_abs()
            ),
        ),
    ])
}
