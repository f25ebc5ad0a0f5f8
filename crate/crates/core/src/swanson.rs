//! Generalized Swanson model `ω η†η + α η² + β η†² + ω/2` with
//! `η = a d/dx + b`, its weight `ρ` and its Hermitian equivalent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::grid::{antiderivative, sample, Field, Grid};
use crate::operators::{
    conjugate_by_weight, identity_residual, ladder_matrix, sturm_liouville_matrix, transpose, BandedOperator,
    LadderSpec, Which, DEFAULT_BUFFER,
};

/// Largest `|log ρ|` accepted before `exp` loses the weight.
pub const LOG_RHO_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwansonParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SwansonParams {
    /// Rejects `ω̃ = ω - α - β <= 0`.
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<SwansonParams> {
        if ![omega, alpha, beta].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("omega, alpha and beta must be finite".into()));
        }
        let p = SwansonParams { omega, alpha, beta };
        if p.omega_tilde() <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega - alpha - beta must be positive, got {}",
                p.omega_tilde()
            )));
        }
        Ok(p)
    }

    pub fn omega_tilde(&self) -> f64 {
        self.omega - self.alpha - self.beta
    }
}

/// The model with its derived coefficient expressions; `α = β` makes `b̃`
/// simplify to the literal zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SwansonModel {
    params: SwansonParams,
    ladder: LadderSpec,
    bindings: Bindings,
    a_tilde: Expr,
    a_tilde_sq: Expr,
    b_tilde: Expr,
    c_tilde: Expr,
    v_plus: Expr,
}

impl SwansonModel {
    /// `bindings` supplies the parameters appearing in `a` and `b`.
    pub fn new(params: SwansonParams, ladder: LadderSpec, bindings: Bindings) -> SwansonModel {
        let SwansonParams { omega, alpha, beta } = params;
        let wt = params.omega_tilde();
        let num = Expr::num;
        let (a, b) = (ladder.a.clone(), ladder.b.clone());
        let (da, db) = (a.d(), b.d());
        let a_tilde = (num(wt.sqrt()) * a.clone()).simplify();
        let a_tilde_sq = (num(wt) * a.clone().powi(2)).simplify();
        let b_tilde = (num(alpha - beta) * a.clone() * (2.0 * b.clone() - da.clone())).simplify();
        let b_minus = b.clone() - da.clone();
        let c_tilde = (-(num(omega) * (a.clone() * b.clone()).d())
            + num(alpha + omega) * b.clone().powi(2)
            + num(alpha) * a.clone() * db.clone()
            - num(beta) * a.clone() * b_minus.d()
            + num(beta) * b_minus.powi(2)
            + num(omega / 2.0))
        .simplify();
        let v_plus = hermitian_potential_expr(&params, &a_tilde, &b);
        SwansonModel { params, ladder, bindings, a_tilde, a_tilde_sq, b_tilde, c_tilde, v_plus }
    }

    pub fn params(&self) -> &SwansonParams {
        &self.params
    }

    pub fn ladder(&self) -> &LadderSpec {
        &self.ladder
    }

    pub fn bindings(&self) -> &Bindings {
        &self.bindings
    }

    pub fn a_tilde(&self) -> &Expr {
        &self.a_tilde
    }

    pub fn a_tilde_sq(&self) -> &Expr {
        &self.a_tilde_sq
    }

    pub fn b_tilde(&self) -> &Expr {
        &self.b_tilde
    }

    pub fn c_tilde(&self) -> &Expr {
        &self.c_tilde
    }
}

/// Potential of the Hermitian equivalent written through `ã` and `b`.
fn hermitian_potential_expr(p: &SwansonParams, a_tilde: &Expr, b: &Expr) -> Expr {
    let num = Expr::num;
    let wt = p.omega_tilde();
    let (s, d) = (p.alpha + p.beta, p.alpha - p.beta);
    let sw = wt.sqrt();
    let big_p = d * d / wt + wt + 2.0 * s;
    let big_q = wt + s;
    let da = a_tilde.d();
    let dda = da.d();
    (num(big_p) * b.clone() * (b.clone() - da.clone() / sw) - num(big_q / sw) * a_tilde.clone() * b.d()
        + num(s / (2.0 * wt)) * a_tilde.clone() * dda
        + num((d * d / wt + 2.0 * s) / (4.0 * wt)) * da.powi(2)
        + num(big_q / 2.0))
    .simplify()
}

/// `(ã², b̃, c̃)` of `H̃ = -d/dx ã² d/dx + b̃ d/dx + c̃`.
pub fn coefficients(m: &SwansonModel) -> (Expr, Expr, Expr) {
    (m.a_tilde_sq.clone(), m.b_tilde.clone(), m.c_tilde.clone())
}

/// The closed-form potential `V₊` of `h = ρ H̃ ρ⁻¹`.
pub fn hermitian_potential(m: &SwansonModel) -> Expr {
    m.v_plus.clone()
}

/// The same potential obtained by conjugating `H̃` directly:
/// `c̃ + b̃²/(4ã²) - b̃'/2`. Algebraically identical to [`hermitian_potential`].
pub fn similarity_route_potential(m: &SwansonModel) -> Expr {
    (m.c_tilde.clone() + m.b_tilde.clone().powi(2) / (4.0 * m.a_tilde_sq.clone()) - m.b_tilde.d() / 2.0).simplify()
}

/// Conservative kinetic part plus central-difference `b̃ d/dx` plus `c̃`.
pub fn nonhermitian_matrix(m: &SwansonModel, g: &Grid) -> Result<BandedOperator> {
    let c = sample(&m.c_tilde, g, &m.bindings)?;
    let kinetic = sturm_liouville_matrix(&m.a_tilde_sq, &c, g, &m.bindings)?;
    if m.b_tilde.is_zero() {
        return Ok(kinetic);
    }
    let d1 = ladder_matrix(&LadderSpec::new(Expr::num(1.0), Expr::num(0.0)), g, &m.bindings, Which::Eta)?;
    let bt = sample(&m.b_tilde, g, &m.bindings)?;
    let drift = BandedOperator::from_fn(*g, 1, |i, j| bt.values()[i] * d1.get(i, j));
    kinetic.add_scaled(&drift, 1.0)
}

/// `log ρ = -½ ∫ b̃/ã²` from the first grid point, fourth order in `h`.
pub fn log_rho(m: &SwansonModel, g: &Grid) -> Result<Field> {
    if m.b_tilde.is_zero() {
        return Field::constant(*g, 0.0);
    }
    let integrand = (m.b_tilde.clone() / m.a_tilde_sq.clone()).simplify();
    antiderivative(&integrand, g, &m.bindings)?.map(|v| -0.5 * v)
}

/// `ρ = exp(-½ ∫ b̃/ã²)` normalized to `ρ(x₁) = 1`.
pub fn rho_weight(m: &SwansonModel, g: &Grid) -> Result<Field> {
    let log = log_rho(m, g)?;
    if let Some((i, v)) = log.values().iter().enumerate().find(|(_, v)| v.abs() > LOG_RHO_LIMIT) {
        return Err(Error::WeightOverflow { x: g.x(i), log_rho: *v });
    }
    log.map(f64::exp)
}

/// `max ρ / min ρ`.
pub fn rho_condition(rho: &Field) -> f64 {
    let (lo, hi) = rho.values().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi / lo
}

/// `-d/dx ã² d/dx + V₊`, exactly symmetric.
pub fn hermitian_matrix(m: &SwansonModel, g: &Grid) -> Result<BandedOperator> {
    let v = sample(&m.v_plus, g, &m.bindings)?;
    sturm_liouville_matrix(&m.a_tilde_sq, &v, g, &m.bindings)
}

/// `D(ρ)⁻¹ h D(ρ)`: the non-Hermitian operator rebuilt from the Hermitian one
/// by exact diagonal similarity.
pub fn similarity_image(m: &SwansonModel, g: &Grid) -> Result<BandedOperator> {
    let rho = rho_weight(m, g)?;
    let inv = rho.map(|v| 1.0 / v)?;
    conjugate_by_weight(&hermitian_matrix(m, g)?, &inv)
}

/// Pseudo-Hermiticity `ζ H̃ ζ⁻¹ = H̃ᵀ` with `ζ = D(ρ²)`, as a relative action
/// residual on the probe.
pub fn metric_residual(m: &SwansonModel, g: &Grid) -> Result<f64> {
    metric_residual_with_buffer(m, g, DEFAULT_BUFFER)
}

pub fn metric_residual_with_buffer(m: &SwansonModel, g: &Grid, buffer: usize) -> Result<f64> {
    let h = nonhermitian_matrix(m, g)?;
    let zeta = rho_weight(m, g)?.map(|v| v * v)?;
    let lhs = conjugate_by_weight(&h, &zeta)?;
    Ok(identity_residual(&[&lhs], &[&transpose(&h)], g, buffer))
}

/// Action residual between the central-difference `H̃` and
/// [`similarity_image`]; `O(h²)`.
pub fn similarity_residual(m: &SwansonModel, g: &Grid) -> Result<f64> {
    let direct = nonhermitian_matrix(m, g)?;
    let image = similarity_image(m, g)?;
    Ok(identity_residual(&[&image], &[&direct], g, DEFAULT_BUFFER))
}
