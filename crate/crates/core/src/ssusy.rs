//! Second-derivative supersymmetry: factor pairs `ξᵢ = ã d/dx + bᵢ`, the
//! supercharge `𝒜⁻ = ξ₂ξ₁`, the Hamiltonian triplet and identity residuals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::grid::{sample, Grid};
use crate::operators::{
    apply_chain, compose, identity_residual, ladder_matrix, probe, relative_residual, sturm_liouville_matrix,
    transpose, BandedOperator, LadderSpec, Which, DEFAULT_BUFFER,
};

/// `ξ₁ = ã d/dx + b₁`, `ξ₂ = ã d/dx + b₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub a_tilde: Expr,
    pub b1: Expr,
    pub b2: Expr,
    pub bindings: Bindings,
}

impl FactorPair {
    pub fn new(a_tilde: Expr, b1: Expr, b2: Expr, bindings: Bindings) -> FactorPair {
        FactorPair { a_tilde, b1, b2, bindings }
    }

    pub fn xi1(&self) -> LadderSpec {
        LadderSpec::new(self.a_tilde.clone(), self.b1.clone())
    }

    pub fn xi2(&self) -> LadderSpec {
        LadderSpec::new(self.a_tilde.clone(), self.b2.clone())
    }

    pub fn mass(&self) -> Expr {
        self.a_tilde.clone().powi(2).simplify()
    }

    /// Same pair with `b₂ + eps`, for falsification controls.
    pub fn perturb_b2(&self, eps: f64) -> FactorPair {
        FactorPair { b2: (self.b2.clone() + eps).simplify(), ..self.clone() }
    }
}

/// Potential of `ξ†ξ`: `b² - (ã b)'`.
pub fn lower_potential(a: &Expr, b: &Expr) -> Expr {
    (b.clone().powi(2) - (a.clone() * b.clone()).d()).simplify()
}

/// Potential of `ξξ†`: `ã (b - ã')' + b (b - ã')`.
pub fn raised_potential(a: &Expr, b: &Expr) -> Expr {
    let bm = b.clone() - a.d();
    (a.clone() * bm.d() + b.clone() * bm).simplify()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuasiSpec {
    /// `K = (𝓗 - λ)²`.
    PerfectSquare { lambda: f64 },
    /// `K = 𝓗² - c²/4`.
    SplitC { c: f64 },
    /// `K = 𝓗² - 2λ𝓗 + μ` with `λ² > μ`.
    General { lambda: f64, mu: f64 },
}

impl QuasiSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            QuasiSpec::PerfectSquare { lambda } => lambda.is_finite(),
            QuasiSpec::SplitC { c } => c.is_finite(),
            QuasiSpec::General { lambda, mu } => {
                if lambda.is_nan() || mu.is_nan() || lambda * lambda <= mu {
                    return Err(Error::InvalidParams(format!(
                        "general quasi-Hamiltonian needs lambda^2 > mu, got lambda = {lambda}, mu = {mu}"
                    )));
                }
                lambda.is_finite() && mu.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidParams("quasi-Hamiltonian parameters must be finite".into()))
        }
    }

    /// Factorization energies `(e1, e2)`; `K = (𝓗 - e1)(𝓗 - e2)`.
    pub fn energies(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(match *self {
            QuasiSpec::PerfectSquare { lambda } => (lambda, lambda),
            QuasiSpec::SplitC { c } => (c / 2.0, -c / 2.0),
            QuasiSpec::General { lambda, mu } => {
                let r = (lambda * lambda - mu).sqrt();
                (lambda + r, lambda - r)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResidual {
    /// `[V(ξ₁ξ₁†) + e1] - [V(ξ₂†ξ₂) + e2]`.
    pub residual: Expr,
    /// `ãã'' - [ã(b₁+b₂)' - ã'(b₁-b₂) + (b₁-b₂)(b₁+b₂)]`, the negated
    /// residual written out, for the perfect-square case.
    pub perfect_square_form: Option<Expr>,
}

/// Measured size of a constraint residual on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintMeasure {
    pub max_abs: f64,
    pub argmax_x: f64,
    pub identically_zero: bool,
}

pub fn constraint_residual(p: &FactorPair, q: &QuasiSpec) -> Result<ConstraintResidual> {
    let (e1, e2) = q.energies()?;
    let a = &p.a_tilde;
    let residual = (raised_potential(a, &p.b1) + Expr::num(e1) - lower_potential(a, &p.b2) - Expr::num(e2)).simplify();
    let perfect_square_form = matches!(q, QuasiSpec::PerfectSquare { .. }).then(|| {
        let (b1, b2) = (p.b1.clone(), p.b2.clone());
        let sum = b1.clone() + b2.clone();
        let diff = b1 - b2;
        (a.clone() * a.d().d() - (a.clone() * sum.d() - a.d() * diff.clone() + diff * sum)).simplify()
    });
    Ok(ConstraintResidual { residual, perfect_square_form })
}

/// Declares the residual identically zero when it simplifies to the literal
/// zero or stays below `1e-12 (1 + max |V₊|)` on the grid.
pub fn measure_constraint(
    r: &ConstraintResidual,
    t: &Triplet,
    g: &Grid,
    bindings: &Bindings,
) -> Result<ConstraintMeasure> {
    let values = sample(&r.residual, g, bindings)?;
    let (i, max_abs) =
        values
            .values()
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bm), (i, v)| if v.abs() > bm { (i, v.abs()) } else { (bi, bm) });
    let vmax = sample(&t.v_plus, g, bindings)?.max_abs();
    let identically_zero = r.residual.is_zero() || max_abs <= 1e-12 * (1.0 + vmax);
    Ok(ConstraintMeasure { max_abs, argmax_x: g.x(i), identically_zero })
}

/// `h₊ = -d/dx ã² d/dx + V₊`, `h̄`, `h₋` sharing the mass `ã²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub mass: Expr,
    pub v_plus: Expr,
    pub v_bar: Expr,
    pub v_minus: Expr,
    pub e1: f64,
    pub e2: f64,
}

pub fn build_triplet(p: &FactorPair, q: &QuasiSpec) -> Result<Triplet> {
    let (e1, e2) = q.energies()?;
    let a = &p.a_tilde;
    Ok(Triplet {
        mass: p.mass(),
        v_plus: (lower_potential(a, &p.b1) + Expr::num(e1)).simplify(),
        v_bar: (lower_potential(a, &p.b2) + Expr::num(e2)).simplify(),
        v_minus: (raised_potential(a, &p.b2) + Expr::num(e2)).simplify(),
        e1,
        e2,
    })
}

/// Sturm-Liouville images `(h₊, h̄, h₋)`.
pub fn triplet_matrices(t: &Triplet, g: &Grid, bindings: &Bindings) -> Result<[BandedOperator; 3]> {
    let build = |v: &Expr| sturm_liouville_matrix(&t.mass, &sample(v, g, bindings)?, g, bindings);
    Ok([build(&t.v_plus)?, build(&t.v_bar)?, build(&t.v_minus)?])
}

/// `(𝒜⁻, 𝒜⁺) = (ξ₂ξ₁, transpose(ξ₂ξ₁))`.
pub fn supercharge_matrices(p: &FactorPair, g: &Grid) -> Result<(BandedOperator, BandedOperator)> {
    let xi1 = ladder_matrix(&p.xi1(), g, &p.bindings, Which::Eta)?;
    let xi2 = ladder_matrix(&p.xi2(), g, &p.bindings, Which::Eta)?;
    let minus = compose(&xi2, &xi1)?;
    let plus = transpose(&minus);
    Ok((minus, plus))
}

/// Relative action residual of `A hp - hm A`.
pub fn intertwining_residual(a: &BandedOperator, hp: &BandedOperator, hm: &BandedOperator) -> Result<f64> {
    intertwining_residual_with_buffer(a, hp, hm, DEFAULT_BUFFER)
}

pub fn intertwining_residual_with_buffer(
    a: &BandedOperator,
    hp: &BandedOperator,
    hm: &BandedOperator,
    buffer: usize,
) -> Result<f64> {
    if a.grid() != hp.grid() || a.grid() != hm.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(identity_residual(&[a, hp], &[hm, a], a.grid(), buffer))
}

/// `(t - e1)(t - e2)` applied through `h`.
fn apply_poly(h: &BandedOperator, e1: f64, e2: f64, u: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = h.matvec(u).iter().zip(u).map(|(hu, u)| hu - e2 * u).collect();
    h.matvec(&v).iter().zip(&v).map(|(hv, v)| hv - e1 * v).collect()
}

/// Residual of `B C = (h - e1)(h - e2)` on the probe.
pub(crate) fn quasi_residual_of(
    b: &BandedOperator,
    c: &BandedOperator,
    h: &BandedOperator,
    e: (f64, f64),
    buffer: usize,
) -> f64 {
    let u = probe(h.grid());
    relative_residual(&apply_chain(&[b, c], &u), &apply_poly(h, e.0, e.1, &u), buffer)
}

/// Residuals of `𝒜⁺𝒜⁻ = K(h₊)` and `𝒜⁻𝒜⁺ = K(h₋)`.
pub fn quasi_hamiltonian_residual(p: &FactorPair, q: &QuasiSpec, g: &Grid) -> Result<(f64, f64)> {
    quasi_hamiltonian_residual_with_buffer(p, q, g, DEFAULT_BUFFER)
}

pub fn quasi_hamiltonian_residual_with_buffer(
    p: &FactorPair,
    q: &QuasiSpec,
    g: &Grid,
    buffer: usize,
) -> Result<(f64, f64)> {
    let t = build_triplet(p, q)?;
    let [hp, _, hm] = triplet_matrices(&t, g, &p.bindings)?;
    let (minus, plus) = supercharge_matrices(p, g)?;
    let e = (t.e1, t.e2);
    Ok((quasi_residual_of(&plus, &minus, &hp, e, buffer), quasi_residual_of(&minus, &plus, &hm, e, buffer)))
}

/// 2x2 block operator; `None` blocks are structurally zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    pub blocks: [[Option<BandedOperator>; 2]; 2],
}

impl BlockOperator {
    /// `Q⁺ = [[0, 0], [A⁻, 0]]`.
    pub fn lower(a: BandedOperator) -> BlockOperator {
        BlockOperator { blocks: [[None, None], [Some(a), None]] }
    }

    /// `Q⁻ = [[0, A⁺], [0, 0]]`.
    pub fn upper(a: BandedOperator) -> BlockOperator {
        BlockOperator { blocks: [[None, Some(a)], [None, None]] }
    }

    pub fn compose(&self, other: &BlockOperator) -> Result<BlockOperator> {
        let mut blocks: [[Option<BandedOperator>; 2]; 2] = Default::default();
        for (i, row) in blocks.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                for k in 0..2 {
                    if let (Some(x), Some(y)) = (&self.blocks[i][k], &other.blocks[k][j]) {
                        let prod = compose(x, y)?;
                        *slot = Some(match slot.take() {
                            Some(acc) => acc.add_scaled(&prod, 1.0)?,
                            None => prod,
                        });
                    }
                }
            }
        }
        Ok(BlockOperator { blocks })
    }

    pub fn add(&self, other: &BlockOperator) -> Result<BlockOperator> {
        let mut blocks: [[Option<BandedOperator>; 2]; 2] = Default::default();
        for (i, row) in blocks.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = match (&self.blocks[i][j], &other.blocks[i][j]) {
                    (Some(x), Some(y)) => Some(x.add_scaled(y, 1.0)?),
                    (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                    (None, None) => None,
                };
            }
        }
        Ok(BlockOperator { blocks })
    }

    /// Largest absolute entry over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().flatten().flatten().fold(0.0, |m, b| m.max(b.max_abs()))
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.blocks[0][1].is_none() && self.blocks[1][0].is_none()
    }
}

/// `max(‖(Q⁺)²‖, ‖(Q⁻)²‖)` for the charges built from `(lower, upper)`.
pub fn nilpotency_of(lower: &BandedOperator, upper: &BandedOperator) -> Result<f64> {
    let qp = BlockOperator::lower(lower.clone());
    let qm = BlockOperator::upper(upper.clone());
    Ok(qp.compose(&qp)?.max_abs().max(qm.compose(&qm)?.max_abs()))
}

/// `‖Q²‖` for the charges of a pair; zero by block structure.
pub fn nilpotency_check(p: &FactorPair, g: &Grid) -> Result<f64> {
    let (minus, plus) = supercharge_matrices(p, g)?;
    nilpotency_of(&minus, &plus)
}

/// `Q⁺Q⁻ + Q⁻Q⁺`, block diagonal with blocks `𝒜⁺𝒜⁻` and `𝒜⁻𝒜⁺`.
pub fn anticommutator(p: &FactorPair, g: &Grid) -> Result<BlockOperator> {
    let (minus, plus) = supercharge_matrices(p, g)?;
    let qp = BlockOperator::lower(minus);
    let qm = BlockOperator::upper(plus);
    qp.compose(&qm)?.add(&qm.compose(&qp)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsusyReport {
    pub constraint_max: f64,
    pub constraint_argmax_x: f64,
    pub constraint_identically_zero: bool,
    pub intertwine_plus: f64,
    pub intertwine_minus: f64,
    pub quasi_plus: f64,
    pub quasi_minus: f64,
    pub nilpotency: f64,
    pub grid: Grid,
    pub buffer: usize,
}

/// Every residual of one pair on one grid.
pub fn verify_pair(p: &FactorPair, q: &QuasiSpec, g: &Grid, buffer: usize) -> Result<SsusyReport> {
    let t = build_triplet(p, q)?;
    let constraint = measure_constraint(&constraint_residual(p, q)?, &t, g, &p.bindings)?;
    let [hp, _, hm] = triplet_matrices(&t, g, &p.bindings)?;
    let (minus, plus) = supercharge_matrices(p, g)?;
    let e = (t.e1, t.e2);
    Ok(SsusyReport {
        constraint_max: constraint.max_abs,
        constraint_argmax_x: constraint.argmax_x,
        constraint_identically_zero: constraint.identically_zero,
        intertwine_plus: intertwining_residual_with_buffer(&minus, &hp, &hm, buffer)?,
        intertwine_minus: intertwining_residual_with_buffer(&plus, &hm, &hp, buffer)?,
        quasi_plus: quasi_residual_of(&plus, &minus, &hp, e, buffer),
        quasi_minus: quasi_residual_of(&minus, &plus, &hm, e, buffer),
        nilpotency: nilpotency_of(&minus, &plus)?,
        grid: *g,
        buffer,
    })
}
