//! Pseudo-supersymmetric sector: every operator is the exact diagonal
//! similarity `D(ρ)⁻¹ X D(ρ)` of its Hermitian counterpart, so the algebraic
//! identities inherit the Hermitian residuals up to `cond(D(ρ))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operators::{conjugate_by_diagonal, identity_residual, transpose, BandedOperator, DEFAULT_BUFFER};
use crate::ssusy::{
    build_triplet, constraint_residual, measure_constraint, nilpotency_of, quasi_residual_of, supercharge_matrices,
    triplet_matrices, ConstraintMeasure, FactorPair, QuasiSpec,
};
use crate::swanson::{rho_condition, rho_weight, SwansonModel};

/// Weight condition number above which pseudo-sector numbers are flagged.
pub const RHO_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSector {
    pub rho: Field,
    pub theta_minus: BandedOperator,
    pub theta_plus: BandedOperator,
    pub h_plus_nh: BandedOperator,
    pub h_minus_nh: BandedOperator,
    pub rho_condition: f64,
    /// Constraint bookkeeping of the pair the sector was built from.
    pub constraint: ConstraintMeasure,
}

fn inverse(w: &[f64]) -> Vec<f64> {
    w.iter().map(|v| 1.0 / v).collect()
}

/// `D(ρ)⁻¹ X D(ρ)`.
fn unconjugate(x: &BandedOperator, rho: &Field) -> BandedOperator {
    conjugate_by_diagonal(x, &inverse(rho.values()))
}

/// `ϑ∓ = D(ρ)⁻¹ 𝒜∓ D(ρ)` and `H̃± = D(ρ)⁻¹ h± D(ρ)`, with `ϑ⁺` formed from
/// `ϑ⁻` as `D(ρ)⁻¹ transpose(D(ρ) ϑ⁻ D(ρ)⁻¹) D(ρ)`.
pub fn build_pseudo_sector(m: &SwansonModel, p: &FactorPair, q: &QuasiSpec, g: &Grid) -> Result<PseudoSector> {
    let rho = rho_weight(m, g)?;
    let t = build_triplet(p, q)?;
    let constraint = measure_constraint(&constraint_residual(p, q)?, &t, g, &p.bindings)?;
    let [hp, _, hm] = triplet_matrices(&t, g, &p.bindings)?;
    let (minus, _) = supercharge_matrices(p, g)?;
    let theta_minus = unconjugate(&minus, &rho);
    let restored = conjugate_by_diagonal(&theta_minus, rho.values());
    let theta_plus = unconjugate(&transpose(&restored), &rho);
    Ok(PseudoSector {
        rho_condition: rho_condition(&rho),
        h_plus_nh: unconjugate(&hp, &rho),
        h_minus_nh: unconjugate(&hm, &rho),
        theta_minus,
        theta_plus,
        rho,
        constraint,
    })
}

fn relative_entry_gap(x: &BandedOperator, y: &BandedOperator) -> Result<f64> {
    Ok(x.add_scaled(y, -1.0)?.max_abs() / y.max_abs().max(f64::MIN_POSITIVE))
}

/// `‖ζ⁻¹ (ϑ⁻)ᵀ ζ - ϑ⁺‖ / ‖ϑ⁺‖` with `ζ = D(ρ²)`, entrywise.
pub fn pseudo_adjoint_residual(s: &PseudoSector) -> Result<f64> {
    let zeta: Vec<f64> = s.rho.values().iter().map(|r| r * r).collect();
    let adj = conjugate_by_diagonal(&transpose(&s.theta_minus), &inverse(&zeta));
    relative_entry_gap(&adj, &s.theta_plus)
}

/// The chained form `ρ⁻² (ρ⁻¹ 𝒜⁻ ρ)ᵀ ρ²` evaluated factor by factor, compared
/// with `ρ⁻¹ 𝒜⁺ ρ`.
pub fn chained_adjoint_gap(s: &PseudoSector, minus: &BandedOperator) -> Result<f64> {
    let r = s.rho.values();
    let r2: Vec<f64> = r.iter().map(|v| v * v).collect();
    let inner = conjugate_by_diagonal(minus, &inverse(r));
    let chained = conjugate_by_diagonal(&transpose(&inner), &inverse(&r2));
    let direct = conjugate_by_diagonal(&transpose(minus), &inverse(r));
    relative_entry_gap(&chained, &direct)
}

/// Residuals of `ϑ⁺H̃₋ = H̃₊ϑ⁺` and `ϑ⁻H̃₊ = H̃₋ϑ⁻`, ordered like
/// the Hermitian intertwining residuals so `ρ ≡ 1` reproduces them exactly.
pub fn pseudo_intertwining_residual(s: &PseudoSector) -> (f64, f64) {
    pseudo_intertwining_residual_with_buffer(s, DEFAULT_BUFFER)
}

pub fn pseudo_intertwining_residual_with_buffer(s: &PseudoSector, buffer: usize) -> (f64, f64) {
    let g = s.rho.grid();
    let plus = identity_residual(&[&s.theta_plus, &s.h_minus_nh], &[&s.h_plus_nh, &s.theta_plus], g, buffer);
    let minus = identity_residual(&[&s.theta_minus, &s.h_plus_nh], &[&s.h_minus_nh, &s.theta_minus], g, buffer);
    (plus, minus)
}

/// Residuals of `ϑ⁺ϑ⁻ = K(H̃₊)` and `ϑ⁻ϑ⁺ = K(H̃₋)`.
pub fn pseudo_quasi_residual(s: &PseudoSector, q: &QuasiSpec) -> Result<(f64, f64)> {
    pseudo_quasi_residual_with_buffer(s, q, DEFAULT_BUFFER)
}

pub fn pseudo_quasi_residual_with_buffer(s: &PseudoSector, q: &QuasiSpec, buffer: usize) -> Result<(f64, f64)> {
    let e = q.energies()?;
    Ok((
        quasi_residual_of(&s.theta_plus, &s.theta_minus, &s.h_plus_nh, e, buffer),
        quasi_residual_of(&s.theta_minus, &s.theta_plus, &s.h_minus_nh, e, buffer),
    ))
}

/// `max(‖Q²‖, ‖(Q♯)²‖)` for the pseudo-charges.
pub fn pseudo_nilpotency(s: &PseudoSector) -> Result<f64> {
    nilpotency_of(&s.theta_minus, &s.theta_plus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoReport {
    pub pseudo_adjoint: f64,
    pub pseudo_intertwine_plus: f64,
    pub pseudo_intertwine_minus: f64,
    pub pseudo_quasi_plus: f64,
    pub pseudo_quasi_minus: f64,
    pub pseudo_nilpotency: f64,
    pub rho_condition: f64,
    pub untrustworthy: bool,
    pub grid: Grid,
    pub buffer: usize,
}

pub fn verify_sector(s: &PseudoSector, q: &QuasiSpec, buffer: usize) -> Result<PseudoReport> {
    let (ip, im) = pseudo_intertwining_residual_with_buffer(s, buffer);
    let (qp, qm) = pseudo_quasi_residual_with_buffer(s, q, buffer)?;
    Ok(PseudoReport {
        pseudo_adjoint: pseudo_adjoint_residual(s)?,
        pseudo_intertwine_plus: ip,
        pseudo_intertwine_minus: im,
        pseudo_quasi_plus: qp,
        pseudo_quasi_minus: qm,
        pseudo_nilpotency: pseudo_nilpotency(s)?,
        rho_condition: s.rho_condition,
        untrustworthy: s.rho_condition > RHO_CONDITION_LIMIT,
        grid: *s.rho.grid(),
        buffer,
    })
}

impl PseudoSector {
    /// Same sector with a replaced weight, for falsification controls.
    pub fn with_rho(&self, rho: Field) -> Result<PseudoSector> {
        if rho.grid() != self.rho.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(PseudoSector { rho_condition: rho_condition(&rho), rho, ..self.clone() })
    }
}
