//! Built-in solvable families: the isotonic choice `a = x²` and the CPRS
//! transform `ã = √ω̃ x^κ`, with their transcribed closed forms and audits
//! that measure (never enforce) agreement with the defining formulas.
//!
//! Closed forms are written as expression strings with named constants and
//! then bound to numbers, so a transcription can be read side by side with
//! its source formula.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::grid::{antiderivative, l2_norm, sample, Field, Grid};
use crate::operators::{sturm_liouville_matrix, BandedOperator, LadderSpec};
use crate::ssusy::{build_triplet, constraint_residual, lower_potential, FactorPair, QuasiSpec};
use crate::swanson::{hermitian_potential, log_rho, SwansonModel, SwansonParams};

/// Blow-up threshold for the Riccati integrator.
pub const RICCATI_BLOW_UP: f64 = 1e12;
/// RK4 substeps per grid cell.
const RICCATI_SUBSTEPS: usize = 8;

/// CPRS potential `U(y)`.
pub const CPRS_U: &str = "y^2 + 8*(2*y^2-1)/(2*y^2+1)^2";
/// CPRS superpotential `W(y)`, paired with `ε₀ = -3`.
pub const CPRS_W: &str = "y + 4*y/(2*y^2+1)";
pub const CPRS_EPSILON0: f64 = -3.0;

pub const ISOTONIC_FORMULAS: &[&str] = &[
    "rho_closed_vs_quadrature",
    "v_plus_closed_vs_hermitian",
    "v_plus_factorized_vs_hermitian",
    "v_minus_closed_vs_triplet",
    "v_bar_closed_vs_triplet",
    "constraint",
    "p_coefficient",
    "q_coefficient",
    "t_coefficient",
];

pub const CPRS_FORMULAS: &[&str] = &[
    "superpotential_closure",
    "v_plus_closed_vs_route_a",
    "v_plus_factorized_vs_route_a",
    "v_minus_closed_vs_triplet",
    "v_bar_closed_vs_triplet",
    "b1_closed_vs_exact",
    "constraint",
];

/// Parses a fixed formula and folds every bound constant into it.
fn transcribe(text: &str, b: &Bindings) -> Expr {
    transcribe_in(text, "x", b)
}

fn transcribe_in(text: &str, var: &str, b: &Bindings) -> Expr {
    Expr::parse_in(text, var).expect("built-in formulas parse").bind(b).simplify()
}

/// One measured comparison between a closed form and its defining route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub formula_id: String,
    pub max_dev: f64,
    /// `None` for scalar (coefficient) audits.
    pub argmax_x: Option<f64>,
    pub grid: Grid,
}

fn max_gap(a: &[f64], b: &[f64], g: &Grid) -> (f64, Option<f64>) {
    let (i, dev) =
        a.iter()
            .zip(b)
            .enumerate()
            .fold((0, 0.0f64), |(bi, bm), (i, (u, v))| if (u - v).abs() > bm { (i, (u - v).abs()) } else { (bi, bm) });
    (dev, Some(g.x(i)))
}

fn compare(id: &str, lhs: &Expr, rhs: &Expr, g: &Grid, b: &Bindings) -> Result<AuditEntry> {
    let (l, r) = (sample(lhs, g, b)?, sample(rhs, g, b)?);
    let (max_dev, argmax_x) = max_gap(l.values(), r.values(), g);
    Ok(AuditEntry { formula_id: id.into(), max_dev, argmax_x, grid: *g })
}

fn scalar(id: &str, value: f64, g: &Grid) -> AuditEntry {
    AuditEntry { formula_id: id.into(), max_dev: value, argmax_x: None, grid: *g }
}

// ---------------------------------------------------------------------------
// Isotonic family

/// `a = x²`, `b = 1/x + c x/(x²+d)` with `ω = ω̃ + α + β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsotonicChoice {
    pub alpha: f64,
    pub beta: f64,
    pub omega_tilde: f64,
    pub c: f64,
    pub d: f64,
    pub lambda: f64,
}

impl Default for IsotonicChoice {
    fn default() -> Self {
        IsotonicChoice { alpha: 0.2, beta: 0.1, omega_tilde: 1.0, c: 1.0, d: 1.0, lambda: 0.0 }
    }
}

/// Constants of the closed forms, derived from the choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotonicConstants {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl IsotonicChoice {
    pub fn omega(&self) -> f64 {
        self.omega_tilde + self.alpha + self.beta
    }

    /// Requires `d > 0`, `ω̃ > 0`, `p >= 0`, and `p > 0` whenever `c != 0`.
    pub fn constants(&self) -> Result<IsotonicConstants> {
        let IsotonicChoice { alpha, beta, omega_tilde: wt, c, d, lambda } = *self;
        if ![alpha, beta, wt, c, d, lambda].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("isotonic parameters must be finite".into()));
        }
        if d <= 0.0 {
            return Err(Error::InvalidParams(format!("d must be positive, got {d}")));
        }
        if wt <= 0.0 {
            return Err(Error::InvalidParams(format!("omega_tilde must be positive, got {wt}")));
        }
        let (sum, diff) = (alpha + beta, alpha - beta);
        let big_q = wt + sum;
        let p = diff * diff / wt + wt + 2.0 * sum;
        if p < 0.0 {
            return Err(Error::InvalidParams(format!("p = {p} is negative, so c1 = sqrt(p) is undefined")));
        }
        let q = sum + diff * diff / wt + 2.0 * sum;
        let r = (2.0 + c + 2.0 * d) * p - 3.0 * d * big_q;
        let s = 2.0 * (1.0 + d) * p - d * big_q;
        let t = (c + 1.5) * big_q - 2.0 * (c + 1.0) * p;
        let sw = wt.sqrt();
        let c1 = p.sqrt();
        let c2 = -1.5 * sw;
        let c3 = if c == 0.0 {
            0.0
        } else if p == 0.0 {
            return Err(Error::InvalidParams("c3 needs p > 0 when c is nonzero".into()));
        } else {
            c * (1.0 + 1.0 / d) * c1 - c * big_q / (2.0 * c1)
        };
        Ok(IsotonicConstants { p, q, r, s, t, c1, c2, c3, k1: -c1, k2: 2.0 * sw + c2, k3: -c3 })
    }

    fn bindings(&self, k: &IsotonicConstants) -> Bindings {
        let wt = self.omega_tilde;
        [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("wt", wt),
            ("sw", wt.sqrt()),
            ("c", self.c),
            ("d", self.d),
            ("lambda", self.lambda),
            ("p", k.p),
            ("q", k.q),
            ("r", k.r),
            ("s", k.s),
            ("t", k.t),
            ("c1", k.c1),
            ("c2", k.c2),
            ("c3", k.c3),
            ("k1", k.k1),
            ("k2", k.k2),
            ("k3", k.k3),
        ]
        .into_iter()
        .map(|(n, v)| (n.to_string(), v))
        .collect()
    }
}

#[derive(Debug, Clone)]
pub struct IsotonicFamily {
    pub choice: IsotonicChoice,
    pub constants: IsotonicConstants,
    pub model: SwansonModel,
    pub pair: FactorPair,
    pub quasi: QuasiSpec,
    pub v_plus: Expr,
    pub v_minus: Expr,
    pub v_bar: Expr,
    pub rho_closed: Expr,
}

pub fn isotonic_family(ch: &IsotonicChoice) -> Result<IsotonicFamily> {
    let k = ch.constants()?;
    let params = SwansonParams::new(ch.omega(), ch.alpha, ch.beta)?;
    let b = ch.bindings(&k);
    let ladder = LadderSpec::new(transcribe("x^2", &b), transcribe("1/x + c*x/(x^2+d)", &b));
    let model = SwansonModel::new(params, ladder, Bindings::new());
    let pair = FactorPair::new(
        transcribe("sw*x^2", &b),
        transcribe("c1/x - c2*x + c3*x/(x^2+d)", &b),
        transcribe("k1/x + k2*x + k3*x/(x^2+d)", &b),
        Bindings::new(),
    );
    let v_plus = transcribe("p/x^2 + q*x^2 + c*(r*x^2+s)/(x^2+d)^2 + t", &b);
    let v_minus = transcribe(
        "c1^2/x^2 + c2*(c2+3*sw)*x^2 + (lambda + sw*c1^2 - 2*c1*(c2+sw)) \
         + (c3*(sw-2*c2)*x^4 + c3*(c3-d*sw+2*c1-2*d*c2-2*sw)*x^2 + 2*d*c3*(c1-sw))/(x^2+d)^2",
        &b,
    );
    let v_bar = transcribe(
        "(c1/x - sw/2 - c3*x/(x^2+d))^2 \
         - sw*(-c1 + 3*sw/2*x^2 - 3*c3*x^2/(x^2+d) + 2*c3*x^4/(x^2+d)^2) + lambda",
        &b,
    );
    let rho_closed = transcribe("(x^(c/d-1)/(x^2+d)^(c/(2*d)))^(-(alpha-beta)/wt) * exp((alpha-beta)/(2*wt)/x^2)", &b);
    Ok(IsotonicFamily {
        choice: *ch,
        constants: k,
        model,
        pair,
        quasi: QuasiSpec::PerfectSquare { lambda: ch.lambda },
        v_plus,
        v_minus,
        v_bar,
        rho_closed,
    })
}

/// Least-squares coefficients of `v` on `{x², 1/x², 1, x²/(x²+d)², 1/(x²+d)²}`.
/// Columns are scaled to unit max norm before the SVD solve.
pub fn isotonic_coefficient_fit(v: &Field, d: f64) -> Result<[f64; 5]> {
    let xs = v.grid().points();
    let basis = |x: f64| {
        let w = (x * x + d).powi(2);
        [x * x, 1.0 / (x * x), 1.0, x * x / w, 1.0 / w]
    };
    let mut m = DMatrix::from_fn(xs.len(), 5, |i, j| basis(xs[i])[j]);
    let scales: Vec<f64> = (0..5).map(|j| m.column(j).amax()).collect();
    for (j, s) in scales.iter().enumerate() {
        m.column_mut(j).unscale_mut(*s);
    }
    let rhs = DVector::from_column_slice(v.values());
    let sol =
        m.svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::Convergence(format!("coefficient fit failed: {e}")))?;
    Ok(std::array::from_fn(|j| sol[j] / scales[j]))
}

/// Relative deviation between the closed `ρ` and the quadrature weight after
/// removing the best global constant (midrange of the log ratio).
pub fn rho_alignment(fam: &IsotonicFamily, g: &Grid) -> Result<(f64, Option<f64>)> {
    let closed = sample(&fam.rho_closed, g, &Bindings::new())?;
    let quad = log_rho(&fam.model, g)?;
    let ratio: Vec<f64> = closed.values().iter().zip(quad.values()).map(|(c, q)| c.ln() - q).collect();
    let lo = ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = 0.5 * (lo + hi);
    let rel: Vec<f64> = ratio.iter().map(|r| (r - shift).exp_m1()).collect();
    Ok(max_gap(&rel, &vec![0.0; rel.len()], g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicAudit {
    pub choice: IsotonicChoice,
    pub constants: IsotonicConstants,
    /// Fitted `[x², 1/x², 1, x²/(x²+d)², 1/(x²+d)²]` coefficients of `V₊`.
    pub fitted: [f64; 5],
    pub entries: Vec<AuditEntry>,
}

pub fn isotonic_audit(ch: &IsotonicChoice, g: &Grid) -> Result<IsotonicAudit> {
    let fam = isotonic_family(ch)?;
    let none = Bindings::new();
    let k = fam.constants;
    let hermitian = hermitian_potential(&fam.model);
    let triplet = build_triplet(&fam.pair, &fam.quasi)?;
    let constraint = constraint_residual(&fam.pair, &fam.quasi)?;
    let zero = Expr::num(0.0);
    let fitted = isotonic_coefficient_fit(&sample(&hermitian, g, &none)?, ch.d)?;
    let (rho_dev, rho_at) = rho_alignment(&fam, g)?;
    let entries = vec![
        AuditEntry { formula_id: ISOTONIC_FORMULAS[0].into(), max_dev: rho_dev, argmax_x: rho_at, grid: *g },
        compare(ISOTONIC_FORMULAS[1], &fam.v_plus, &hermitian, g, &none)?,
        compare(ISOTONIC_FORMULAS[2], &triplet.v_plus, &hermitian, g, &none)?,
        compare(ISOTONIC_FORMULAS[3], &fam.v_minus, &triplet.v_minus, g, &none)?,
        compare(ISOTONIC_FORMULAS[4], &fam.v_bar, &triplet.v_bar, g, &none)?,
        compare(ISOTONIC_FORMULAS[5], &constraint.residual, &zero, g, &none)?,
        scalar(ISOTONIC_FORMULAS[6], (k.p - fitted[1]).abs(), g),
        scalar(ISOTONIC_FORMULAS[7], (k.q - fitted[0]).abs(), g),
        scalar(ISOTONIC_FORMULAS[8], (k.t - fitted[2]).abs(), g),
    ];
    Ok(IsotonicAudit { choice: *ch, constants: k, fitted, entries })
}

// ---------------------------------------------------------------------------
// CPRS family

/// `ã = √ω̃ x^κ`, `β = -α`, `ω̃ = (1 + √(1-16α²))/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CprsChoice {
    pub kappa: f64,
    pub alpha: f64,
}

impl Default for CprsChoice {
    fn default() -> Self {
        CprsChoice { kappa: 0.0, alpha: 0.0 }
    }
}

impl CprsChoice {
    pub fn new(kappa: f64, alpha: f64) -> Result<CprsChoice> {
        let ch = CprsChoice { kappa, alpha };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && (0.0..1.0).contains(&self.kappa)) {
            return Err(Error::InvalidParams(format!("kappa must lie in [0, 1), got {}", self.kappa)));
        }
        if !self.alpha.is_finite() || 16.0 * self.alpha * self.alpha > 1.0 {
            return Err(Error::InvalidParams(format!("16 alpha^2 must not exceed 1, got alpha = {}", self.alpha)));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        -self.alpha
    }

    pub fn omega_tilde(&self) -> f64 {
        0.5 * (1.0 + (1.0 - 16.0 * self.alpha * self.alpha).sqrt())
    }

    pub fn epsilon0(&self) -> f64 {
        CPRS_EPSILON0
    }

    fn bindings(&self) -> Bindings {
        let wt = self.omega_tilde();
        [("kappa", self.kappa), ("wt", wt), ("sw", wt.sqrt())].into_iter().map(|(n, v)| (n.to_string(), v)).collect()
    }

    /// Closed coordinate `z = x^(1-κ) / (√ω̃ (1-κ))`.
    pub fn z(&self) -> Expr {
        transcribe("x^(1-kappa)/(sw*(1-kappa))", &self.bindings())
    }

    pub fn a_tilde(&self) -> Expr {
        transcribe("sw*x^kappa", &self.bindings())
    }
}

/// `U = W² - W' + ε₀` as a checkable datum.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpotentialSpec {
    pub w: Expr,
    pub epsilon0: f64,
    pub u: Expr,
}

impl SuperpotentialSpec {
    pub fn cprs() -> SuperpotentialSpec {
        let none = Bindings::new();
        SuperpotentialSpec {
            w: transcribe_in(CPRS_W, "y", &none),
            epsilon0: CPRS_EPSILON0,
            u: transcribe_in(CPRS_U, "y", &none),
        }
    }

    /// `W² - W' + ε₀`.
    pub fn factorized(&self) -> Expr {
        (self.w.clone().powi(2) - self.w.d() + self.epsilon0).simplify()
    }

    /// Max `|W² - W' + ε₀ - U|` over the grid points, read as `y`.
    pub fn closure_deviation(&self, g: &Grid) -> Result<AuditEntry> {
        compare(CPRS_FORMULAS[0], &self.factorized(), &self.u, g, &Bindings::new())
    }
}

/// `V₊ = -(ãã''/2 + ã'²/4) + U(z(x))`.
pub fn cprs_potential_route_a(ch: &CprsChoice) -> Expr {
    let a = ch.a_tilde();
    let (da, dda) = (a.d(), a.d().d());
    let u = transcribe_in(CPRS_U, "y", &Bindings::new()).substitute(&ch.z());
    (u - (a * dda / 2.0 + da.powi(2) / 4.0)).simplify()
}

/// Route-A Hamiltonian `-d/dx ã² d/dx + V₊` on `g`.
pub fn cprs_route_a_matrix(ch: &CprsChoice, g: &Grid) -> Result<BandedOperator> {
    let none = Bindings::new();
    let mass = ch.a_tilde().powi(2).simplify();
    sturm_liouville_matrix(&mass, &sample(&cprs_potential_route_a(ch), g, &none)?, g, &none)
}

#[derive(Debug, Clone)]
pub struct CprsFamily {
    pub choice: CprsChoice,
    /// Transcribed `(b₁, b₂)` with mass `ã²`.
    pub pair: FactorPair,
    pub quasi: QuasiSpec,
    pub b: Expr,
    pub b1: Expr,
    pub b2: Expr,
    pub v_plus_minus: Expr,
    pub v_bar: Expr,
    pub route_a: Expr,
    /// `ã'/2 + W(z(x))` with the exact superpotential.
    pub b1_exact: Expr,
}

pub fn cprs_family(ch: &CprsChoice) -> Result<CprsFamily> {
    ch.validate()?;
    let bd = ch.bindings();
    let b = transcribe("x^(1-kappa)/(sw*(1-kappa)) + (2*sw*(1-kappa) + kappa/2)/x^(1-kappa)", &bd);
    let b1 = transcribe("x^(1-kappa)/(sw*(1-kappa)) + sw*(4-3*kappa)/2/x^(1-kappa)", &bd);
    let b2 = transcribe("-x^(1-kappa)/(sw*(1-kappa)) + sw*(4-kappa)/2/x^(1-kappa)", &bd);
    let v_plus_minus = transcribe(
        "kappa*(2-3*kappa)*wt/4/x^(2*(1-kappa)) + x^(2*(1-kappa))/(wt*(1-kappa)^2) \
         + 4*wt*(1-kappa)^2*(x^(2*(1-kappa)) - wt*(1-kappa)^2/2)/(x^(2*(1-kappa)) + wt*(1-kappa)^2/2)^2",
        &bd,
    );
    let v_bar = transcribe("wt*(2-kappa)*(4-5*kappa)/4/x^(2*(1-kappa)) + x^(2*(1-kappa))/(wt*(1-kappa)^2) + 2", &bd);
    let a = ch.a_tilde();
    let w = transcribe_in(CPRS_W, "y", &Bindings::new()).substitute(&ch.z());
    let b1_exact = (a.d() / 2.0 + w).simplify();
    Ok(CprsFamily {
        choice: *ch,
        pair: FactorPair::new(a, b1.clone(), b2.clone(), Bindings::new()),
        quasi: QuasiSpec::PerfectSquare { lambda: ch.epsilon0() },
        b,
        b1,
        b2,
        v_plus_minus,
        v_bar,
        route_a: cprs_potential_route_a(ch),
        b1_exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CprsAudit {
    pub choice: CprsChoice,
    pub omega_tilde: f64,
    pub entries: Vec<AuditEntry>,
}

/// Audits on a grid that avoids `x = 0`, where the transcribed pair is singular.
pub fn cprs_audit(ch: &CprsChoice, g: &Grid) -> Result<CprsAudit> {
    let fam = cprs_family(ch)?;
    let none = Bindings::new();
    let triplet = build_triplet(&fam.pair, &fam.quasi)?;
    let constraint = constraint_residual(&fam.pair, &fam.quasi)?;
    let factorized = (lower_potential(&fam.pair.a_tilde, &fam.b1) + ch.epsilon0()).simplify();
    let entries = vec![
        SuperpotentialSpec::cprs().closure_deviation(g)?,
        compare(CPRS_FORMULAS[1], &fam.v_plus_minus, &fam.route_a, g, &none)?,
        compare(CPRS_FORMULAS[2], &factorized, &fam.route_a, g, &none)?,
        compare(CPRS_FORMULAS[3], &fam.v_plus_minus, &triplet.v_minus, g, &none)?,
        compare(CPRS_FORMULAS[4], &fam.v_bar, &triplet.v_bar, g, &none)?,
        compare(CPRS_FORMULAS[5], &fam.b1, &fam.b1_exact, g, &none)?,
        compare(CPRS_FORMULAS[6], &constraint.residual, &Expr::num(0.0), g, &none)?,
    ];
    Ok(CprsAudit { choice: *ch, omega_tilde: ch.omega_tilde(), entries })
}

// ---------------------------------------------------------------------------
// Coordinate map and transport

/// `z(x) = ∫ dx/ã` anchored at `z(x₁) = 0`.
pub fn coordinate_map(a_tilde: &Expr, g: &Grid, bindings: &Bindings) -> Result<Field> {
    let mut xs = g.points();
    xs.extend(g.half_points());
    for (index, x) in xs.into_iter().enumerate() {
        let v = a_tilde.eval(x, bindings).map_err(|source| Error::Sample { index, x, source })?;
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositive { what: "a_tilde", value: v, x });
        }
    }
    antiderivative(&(Expr::num(1.0) / a_tilde.clone()), g, bindings)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMap {
    /// Quadrature coordinate shifted to agree with the closed form at `x₁`.
    pub quadrature: Field,
    pub closed: Field,
    pub max_dev: f64,
}

pub fn cprs_coordinate_map(ch: &CprsChoice, g: &Grid) -> Result<CoordinateMap> {
    let none = Bindings::new();
    let closed = sample(&ch.z(), g, &none)?;
    let raw = coordinate_map(&ch.a_tilde(), g, &none)?;
    let z0 = closed.values()[0];
    let quadrature = raw.map(|v| v + z0)?;
    let max_dev = max_gap(quadrature.values(), closed.values(), g).0;
    Ok(CoordinateMap { quadrature, closed, max_dev })
}

/// `ψ(x) = φ(z(x)) / √ã(x)`, normalised to unit flat `L²` norm.
pub fn transport_wavefunction(
    phi: impl Fn(f64) -> f64,
    z: &Field,
    a_tilde: &Expr,
    bindings: &Bindings,
) -> Result<Field> {
    let g = *z.grid();
    let a = sample(a_tilde, &g, bindings)?;
    let mut psi = Vec::with_capacity(g.n());
    for (i, (zi, ai)) in z.values().iter().zip(a.values()).enumerate() {
        if ai.is_nan() || *ai <= 0.0 {
            return Err(Error::NonPositive { what: "a_tilde", value: *ai, x: g.x(i) });
        }
        let v = phi(*zi) / ai.sqrt();
        if !v.is_finite() {
            return Err(Error::NonFinite { index: i, x: g.x(i) });
        }
        psi.push(v);
    }
    let norm = l2_norm(&psi, &g);
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::InvalidParams("transported wavefunction vanishes on the grid".into()));
    }
    Field::new(g, psi.into_iter().map(|v| v / norm).collect())
}

/// Relative residual `‖Hψ - εψ‖ / ‖ψ‖` over rows `[buffer, n - buffer)`, so
/// Dirichlet truncation of a state that is nonzero at the edge is excluded.
pub fn eigen_residual(h: &BandedOperator, psi: &[f64], energy: f64, buffer: usize) -> Result<f64> {
    let n = h.n();
    if psi.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: psi.len() });
    }
    if 2 * buffer >= n {
        return Err(Error::InvalidGrid(format!("buffer {buffer} leaves no interior rows of {n}")));
    }
    let hp = h.matvec(psi);
    let rows = buffer..n - buffer;
    let res: f64 = rows.clone().map(|i| (hp[i] - energy * psi[i]).powi(2)).sum();
    let norm: f64 = rows.map(|i| psi[i] * psi[i]).sum();
    Ok((res / norm).sqrt())
}

// ---------------------------------------------------------------------------
// Reference spectrum

/// Physicists' Hermite coefficients, ascending powers.
pub fn hermite(n: usize) -> Result<Vec<i128>> {
    let overflow = || Error::InvalidParams(format!("Hermite polynomial of degree {n} overflows i128"));
    let (mut prev, mut cur) = (vec![1i128], vec![0i128, 2]);
    if n == 0 {
        return Ok(prev);
    }
    for k in 1..n {
        // H_{k+1} = 2y H_k - 2k H_{k-1}
        let mut next = vec![0i128; k + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] = c.checked_mul(2).ok_or_else(overflow)?;
        }
        for (j, c) in prev.iter().enumerate() {
            let t = c.checked_mul(2 * k as i128).ok_or_else(overflow)?;
            next[j] = next[j].checked_sub(t).ok_or_else(overflow)?;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur)
}

/// Level `n` of the CPRS spectrum: `ε = -3 + 2n`,
/// `φ = P_n e^(-y²/2) / (2y²+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CprsReference {
    pub level: usize,
    pub energy: f64,
    /// `P_n`, ascending powers of `y`.
    pub coefficients: Vec<i128>,
}

impl CprsReference {
    pub fn polynomial(&self, y: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * y + *c as f64)
    }

    pub fn wavefunction(&self, y: f64) -> f64 {
        self.polynomial(y) * (-0.5 * y * y).exp() / (2.0 * y * y + 1.0)
    }
}

/// Levels 1 and 2 do not exist: the rational term removes them from the
/// oscillator ladder.
pub fn cprs_reference(n: usize) -> Result<CprsReference> {
    if n == 1 || n == 2 {
        return Err(Error::MissingLevel(n));
    }
    let coefficients = if n == 0 {
        vec![1]
    } else {
        let mut p = hermite(n)?;
        let n_i = n as i128;
        for (shift, factor) in [(2, 4 * n_i), (4, 4 * n_i * (n_i - 3))] {
            if n >= shift {
                for (j, c) in hermite(n - shift)?.into_iter().enumerate() {
                    p[j] += factor * c;
                }
            }
        }
        p
    };
    Ok(CprsReference { level: n, energy: -3.0 + 2.0 * n as f64, coefficients })
}

// ---------------------------------------------------------------------------
// Riccati equation for the free part of b

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    /// `ϱ` on the contiguous run of nodes reached before any blow-up.
    pub varrho: Field,
    /// Where `|ϱ|` first exceeded the threshold, if it did.
    pub blow_up_x: Option<f64>,
    /// Max `|ϱ' - (ϱ² + 2Gϱ + C)|` with a fourth-order difference for `ϱ'`.
    pub residual: f64,
}

/// `ϱ' = ϱ² + 2Gϱ + C` with `G = x^(1-κ)/(√ω̃(1-κ)) + 2√ω̃(1-κ)/x^(1-κ)` and
/// `C = 3 + √ω̃/2`.
pub fn riccati_rhs(ch: &CprsChoice) -> impl Fn(f64, f64) -> f64 {
    let sw = ch.omega_tilde().sqrt();
    let m = 1.0 - ch.kappa;
    let c = 3.0 + 0.5 * sw;
    move |x: f64, r: f64| {
        let xp = if m == 1.0 { x } else { x.powf(m) };
        let g = xp / (sw * m) + 2.0 * sw * m / xp;
        r * r + 2.0 * g * r + c
    }
}

/// Residual of the Riccati equation for sampled `ϱ`, skipping two nodes at
/// each end for the five-point stencil.
pub fn riccati_residual(ch: &CprsChoice, varrho: &Field) -> Result<f64> {
    let g = varrho.grid();
    let v = varrho.values();
    if v.len() < 5 {
        return Err(Error::InvalidGrid("the residual stencil needs at least five nodes".into()));
    }
    let f = riccati_rhs(ch);
    let h = g.h();
    Ok((2..v.len() - 2)
        .map(|i| {
            let dv = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
            (dv - f(g.x(i), v[i])).abs()
        })
        .fold(0.0, f64::max))
}

fn rk4_step(f: &impl Fn(f64, f64) -> f64, x: f64, r: f64, dx: f64) -> f64 {
    let k1 = f(x, r);
    let k2 = f(x + 0.5 * dx, r + 0.5 * dx * k1);
    let k3 = f(x + 0.5 * dx, r + 0.5 * dx * k2);
    let k4 = f(x + dx, r + dx * k3);
    r + dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates outward from `(x0, ϱ0)` in both directions with classical RK4
/// (eight substeps per cell). A blow-up truncates that direction; sensitivity
/// to `ϱ0` is expected and is not an error.
pub fn riccati_integrate(ch: &CprsChoice, x0: f64, varrho0: f64, g: &Grid) -> Result<RiccatiSolution> {
    ch.validate()?;
    let xs = g.points();
    let (lo_x, hi_x) = (xs[0], xs[xs.len() - 1]);
    if !(x0 >= lo_x && x0 <= hi_x) || !varrho0.is_finite() {
        return Err(Error::OutOfRange { x0, x_min: lo_x, x_max: hi_x });
    }
    let f = riccati_rhs(ch);
    let mut values = vec![f64::NAN; xs.len()];
    let start = xs.partition_point(|x| *x < x0);

    let march = |indices: Box<dyn Iterator<Item = usize>>, values: &mut Vec<f64>| -> Option<f64> {
        let (mut x, mut r) = (x0, varrho0);
        for i in indices {
            let dx = (xs[i] - x) / RICCATI_SUBSTEPS as f64;
            for _ in 0..RICCATI_SUBSTEPS {
                r = rk4_step(&f, x, r, dx);
                x += dx;
                if r.is_nan() || r.abs() > RICCATI_BLOW_UP {
                    return Some(x);
                }
            }
            x = xs[i];
            values[i] = r;
        }
        None
    };
    let forward = march(Box::new(start..xs.len()), &mut values);
    let backward = march(Box::new((0..start).rev()), &mut values);
    let blow_up_x = forward.or(backward);

    let lo = values.iter().position(|v| v.is_finite());
    let hi = values.iter().rposition(|v| v.is_finite());
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) if hi >= lo + 2 => (lo, hi),
        _ => return Err(Error::Convergence(format!("Riccati solution blew up within two nodes of x0 = {x0}"))),
    };
    let h = g.h();
    let sub = Grid::new(xs[lo] - h, xs[hi] + h, hi - lo + 1)?;
    let varrho = Field::new(sub, values[lo..=hi].to_vec())?;
    let residual = if varrho.values().len() >= 5 { riccati_residual(ch, &varrho)? } else { f64::NAN };
    Ok(RiccatiSolution { varrho, blow_up_x, residual })
}
