//! Command implementations over a resolved [`RunConfig`].

use std::collections::BTreeMap;

use ssusy_core::expr::{Bindings, Expr};
use ssusy_core::grid::{sample, Grid};
use ssusy_core::models::{
    cprs_audit, cprs_family, cprs_route_a_matrix, isotonic_audit, isotonic_family, CprsChoice, CprsFamily,
    IsotonicChoice, CPRS_FORMULAS, ISOTONIC_FORMULAS,
};
use ssusy_core::operators::{
    commutator_symbol, identity_residual, ladder_matrix, sturm_liouville_matrix, BandedOperator, LadderSpec, Which,
    DEFAULT_BUFFER,
};
use ssusy_core::pseudo::{build_pseudo_sector, verify_sector, PseudoSector};
use ssusy_core::spectral::{compare_lists, convergence_study, eigen_symmetric, eigen_via_similarity, SpectrumResult};
use ssusy_core::ssusy::{build_triplet, triplet_matrices, verify_pair, FactorPair, QuasiSpec};
use ssusy_core::swanson::{
    hermitian_matrix, metric_residual, rho_weight, similarity_image, similarity_residual, SwansonModel, SwansonParams,
};

use crate::config::{cprs_choice, isotonic_choice, CustomModel, ModelConfig, RunConfig};
use crate::error::CliError;
use crate::report::{CheckResult, ConvergenceEntry, Report, SpectrumEntry, Status};

/// Every check name the registry knows, with its default threshold
/// (`None` = measured only).
pub const CHECKS: &[(&str, Option<f64>)] = &[
    ("commutator", Some(1e-3)),
    ("metric", Some(1e-3)),
    ("similarity", Some(1e-3)),
    ("equivalence", Some(1e-10)),
    ("constraint", None),
    ("intertwining", Some(1e-3)),
    ("quasi_hamiltonian", Some(1e-3)),
    ("nilpotency", Some(0.0)),
    ("isospectrality", Some(1e-3)),
    ("pseudo_adjoint", Some(1e-13)),
    ("pseudo_intertwining", Some(1e-3)),
    ("pseudo_quasi", Some(1e-3)),
    ("pseudo_nilpotency", Some(0.0)),
];

pub const OPERATORS: &[&str] = &["h_tilde", "h", "h_plus", "h_bar", "h_minus", "route_a", "v_bar_closed"];

/// A model ready to be discretised.
pub enum Built {
    /// Swanson model and/or factor pair (custom or isotonic).
    Swanson {
        model: Option<SwansonModel>,
        pair: Option<(FactorPair, QuasiSpec)>,
        bindings: Bindings,
    },
    Cprs {
        family: CprsFamily,
    },
}

fn parse(field: &str, text: &str) -> Result<Expr, CliError> {
    Expr::parse(text).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn build_custom(c: &CustomModel) -> Result<Built, CliError> {
    let bindings = c.params.clone();
    let swanson_fields = [c.omega.is_some(), c.alpha.is_some(), c.beta.is_some(), c.a.is_some(), c.b.is_some()];
    let model = match swanson_fields.iter().filter(|f| **f).count() {
        0 => None,
        5 => {
            let params = SwansonParams::new(
                c.omega.unwrap_or_default(),
                c.alpha.unwrap_or_default(),
                c.beta.unwrap_or_default(),
            )?;
            let a = parse("a", c.a.as_deref().unwrap_or_default())?;
            let b = parse("b", c.b.as_deref().unwrap_or_default())?;
            Some(SwansonModel::new(params, LadderSpec::new(a, b), bindings.clone()))
        }
        _ => return Err(CliError::Config("a custom Swanson model needs all of omega, alpha, beta, a, b".into())),
    };
    let pair = match (&c.b1, &c.b2, &c.quasi) {
        (None, None, None) => None,
        (Some(b1), Some(b2), Some(q)) => {
            q.validate()?;
            let a_tilde = match (&c.a_tilde, &model) {
                (Some(t), _) => parse("a_tilde", t)?,
                (None, Some(m)) => m.a_tilde().clone(),
                (None, None) => return Err(CliError::Config("a factor pair without a model needs a_tilde".into())),
            };
            Some((FactorPair::new(a_tilde, parse("b1", b1)?, parse("b2", b2)?, bindings.clone()), *q))
        }
        _ => return Err(CliError::Config("a custom factor pair needs all of b1, b2, quasi".into())),
    };
    if model.is_none() && pair.is_none() {
        return Err(CliError::Config("a custom model needs a Swanson model, a factor pair, or both".into()));
    }
    Ok(Built::Swanson { model, pair, bindings })
}

pub fn build(cfg: &RunConfig) -> Result<Built, CliError> {
    match &cfg.model {
        ModelConfig::Custom(c) => build_custom(c),
        ModelConfig::Builtin { name, params } => match name.as_str() {
            "isotonic" => {
                let fam = isotonic_family(&isotonic_choice(params)?)?;
                Ok(Built::Swanson {
                    model: Some(fam.model),
                    pair: Some((fam.pair, fam.quasi)),
                    bindings: Bindings::new(),
                })
            }
            "cprs" => Ok(Built::Cprs { family: cprs_family(&cprs_choice(params)?)? }),
            other => Err(CliError::Config(format!("unknown builtin model `{other}`"))),
        },
    }
}

impl Built {
    fn default_operators(&self) -> Vec<&'static str> {
        match self {
            Built::Swanson { model, pair, .. } => {
                let mut ops = Vec::new();
                if model.is_some() {
                    ops.push("h_tilde");
                }
                if pair.is_some() {
                    ops.extend(["h_plus", "h_bar", "h_minus"]);
                }
                ops
            }
            Built::Cprs { .. } => vec!["route_a"],
        }
    }

    fn default_checks(&self) -> Vec<&'static str> {
        match self {
            Built::Cprs { .. } => vec!["constraint"],
            Built::Swanson { model, pair, .. } => {
                let mut out = Vec::new();
                if model.is_some() {
                    out.extend(["commutator", "metric", "similarity", "equivalence"]);
                }
                if pair.is_some() {
                    out.extend(["constraint", "intertwining", "quasi_hamiltonian", "nilpotency", "isospectrality"]);
                }
                if model.is_some() && pair.is_some() {
                    out.extend(["pseudo_adjoint", "pseudo_intertwining", "pseudo_quasi", "pseudo_nilpotency"]);
                }
                out
            }
        }
    }

    fn pair(&self) -> Option<(&FactorPair, &QuasiSpec, &Bindings)> {
        match self {
            Built::Swanson { pair: Some((p, q)), bindings, .. } => Some((p, q, bindings)),
            Built::Cprs { family } => Some((&family.pair, &family.quasi, &family.pair.bindings)),
            _ => None,
        }
    }

    fn model(&self) -> Option<&SwansonModel> {
        match self {
            Built::Swanson { model, .. } => model.as_ref(),
            Built::Cprs { .. } => None,
        }
    }

    /// The `k` lowest eigenvalues of a named operator on `g`.
    pub fn spectrum(&self, op: &str, g: &Grid, k: usize) -> ssusy_core::Result<SpectrumResult> {
        let unavailable =
            || ssusy_core::Error::InvalidParams(format!("operator `{op}` is not available for this model"));
        match op {
            // The exact image D(ρ)⁻¹ h D(ρ); the direct central-difference H̃
            // is only similar to O(h²), which the `similarity` check measures.
            "h_tilde" => {
                let m = self.model().ok_or_else(unavailable)?;
                eigen_via_similarity(&similarity_image(m, g)?, &rho_weight(m, g)?, k)
            }
            "h" => eigen_symmetric(&hermitian_matrix(self.model().ok_or_else(unavailable)?, g)?, k),
            "h_plus" | "h_bar" | "h_minus" => {
                let (p, q, b) = self.pair().ok_or_else(unavailable)?;
                let [hp, hb, hm] = triplet_matrices(&build_triplet(p, q)?, g, b)?;
                let m = match op {
                    "h_plus" => hp,
                    "h_bar" => hb,
                    _ => hm,
                };
                eigen_symmetric(&m, k)
            }
            "route_a" | "v_bar_closed" => {
                let Built::Cprs { family } = self else { return Err(unavailable()) };
                let m = if op == "route_a" {
                    cprs_route_a_matrix(&family.choice, g)?
                } else {
                    cprs_closed_matrix(family, &family.v_bar, g)?
                };
                eigen_symmetric(&m, k)
            }
            _ => Err(ssusy_core::Error::InvalidParams(format!(
                "unknown operator `{op}`; expected one of {}",
                OPERATORS.join(", ")
            ))),
        }
    }
}

fn cprs_closed_matrix(family: &CprsFamily, v: &Expr, g: &Grid) -> ssusy_core::Result<BandedOperator> {
    let none = Bindings::new();
    sturm_liouville_matrix(&family.pair.mass(), &sample(v, g, &none)?, g, &none)
}

fn one(name: &str, v: f64) -> BTreeMap<String, f64> {
    [(name.to_string(), v)].into_iter().collect()
}

fn pm(plus: f64, minus: f64) -> BTreeMap<String, f64> {
    [("plus".to_string(), plus), ("minus".to_string(), minus)].into_iter().collect()
}

/// Discrete `ηη† - η†η` against the sampled symbol, by action on the probe.
pub fn commutator_residual(ladder: &LadderSpec, g: &Grid, bindings: &Bindings) -> ssusy_core::Result<f64> {
    let eta = ladder_matrix(ladder, g, bindings, Which::Eta)?;
    let dag = ladder_matrix(ladder, g, bindings, Which::EtaDagger)?;
    let symbol = sample(&commutator_symbol(ladder), g, bindings)?;
    let diag = BandedOperator::diagonal(*g, symbol.values());
    let lhs =
        ssusy_core::operators::compose(&eta, &dag)?.add_scaled(&ssusy_core::operators::compose(&dag, &eta)?, -1.0)?;
    Ok(identity_residual(&[&lhs], &[&diag], g, DEFAULT_BUFFER))
}

struct Context<'a> {
    built: &'a Built,
    grid: Grid,
    k: usize,
    sector: Option<ssusy_core::Result<PseudoSector>>,
}

impl Context<'_> {
    fn sector(&mut self) -> ssusy_core::Result<&PseudoSector> {
        if self.sector.is_none() {
            let s = match (self.built.model(), self.built.pair()) {
                (Some(m), Some((p, q, _))) => build_pseudo_sector(m, p, q, &self.grid),
                _ => Err(ssusy_core::Error::InvalidParams("pseudo checks need a model and a pair".into())),
            };
            self.sector = Some(s);
        }
        match self.sector.as_ref().expect("just set") {
            Ok(s) => Ok(s),
            Err(e) => Err(e.clone()),
        }
    }
}

fn compute_check(name: &str, tol: Option<f64>, cx: &mut Context) -> ssusy_core::Result<CheckResult> {
    let g = cx.grid;
    let need_model = || ssusy_core::Error::InvalidParams(format!("check `{name}` needs a Swanson model"));
    let need_pair = || ssusy_core::Error::InvalidParams(format!("check `{name}` needs a factor pair"));
    let thresholded = |values: BTreeMap<String, f64>| CheckResult::thresholded(name, values, tol.unwrap_or(0.0));
    Ok(match name {
        "commutator" => {
            let m = cx.built.model().ok_or_else(need_model)?;
            thresholded(one("residual", commutator_residual(m.ladder(), &g, m.bindings())?))
        }
        "metric" => thresholded(one("residual", metric_residual(cx.built.model().ok_or_else(need_model)?, &g)?)),
        "similarity" => {
            thresholded(one("residual", similarity_residual(cx.built.model().ok_or_else(need_model)?, &g)?))
        }
        "equivalence" => {
            let m = cx.built.model().ok_or_else(need_model)?;
            let a = cx.built.spectrum("h_tilde", &g, cx.k)?.eigenvalues;
            let b = eigen_symmetric(&hermitian_matrix(m, &g)?, cx.k)?.eigenvalues;
            let rel = a.iter().zip(&b).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max);
            thresholded(one("max_relative_gap", rel))
        }
        "constraint" => {
            let (p, q, _) = cx.built.pair().ok_or_else(need_pair)?;
            let r = verify_pair(p, q, &g, DEFAULT_BUFFER)?;
            let mut values = one("max_abs", r.constraint_max);
            values.insert("argmax_x".into(), r.constraint_argmax_x);
            CheckResult::measured(name, r.constraint_max, values).with_detail(if r.constraint_identically_zero {
                "identically zero"
            } else {
                "nonzero"
            })
        }
        "intertwining" | "quasi_hamiltonian" | "nilpotency" => {
            let (p, q, _) = cx.built.pair().ok_or_else(need_pair)?;
            let r = verify_pair(p, q, &g, DEFAULT_BUFFER)?;
            match name {
                "intertwining" => thresholded(pm(r.intertwine_plus, r.intertwine_minus)),
                "quasi_hamiltonian" => thresholded(pm(r.quasi_plus, r.quasi_minus)),
                _ => thresholded(one("norm", r.nilpotency)),
            }
        }
        "isospectrality" => {
            let (p, q, b) = cx.built.pair().ok_or_else(need_pair)?;
            let [hp, hb, hm] = triplet_matrices(&build_triplet(p, q)?, &g, b)?;
            let k = cx.k + 1;
            let (sp, sb, sm) = (eigen_symmetric(&hp, k)?, eigen_symmetric(&hb, k)?, eigen_symmetric(&hm, k)?);
            let tol = tol.unwrap_or(0.0);
            // Partners may differ by one state at the bottom of the spectrum;
            // one extra level is solved so the top of the window still matches.
            let c1 = compare_lists(&sp.eigenvalues, &sb.eigenvalues, tol, 1);
            let c2 = compare_lists(&sb.eigenvalues, &sm.eigenvalues, tol, 1);
            let mut values = BTreeMap::new();
            values.insert("plus_bar".into(), c1.max_deviation);
            values.insert("bar_minus".into(), c2.max_deviation);
            let ok = c1.within_allowance
                && c2.within_allowance
                && c1.matched.len() >= cx.k - 1
                && c2.matched.len() >= cx.k - 1;
            let mut r = thresholded(values);
            if !ok {
                r.status = Status::Fail;
            }
            r.with_detail(format!("matched {}/{} and {}/{} levels", c1.matched.len(), k, c2.matched.len(), k))
        }
        "pseudo_adjoint" | "pseudo_intertwining" | "pseudo_quasi" | "pseudo_nilpotency" => {
            let (_, q, _) = cx.built.pair().ok_or_else(need_pair)?;
            let q = *q;
            let s = cx.sector()?;
            let r = verify_sector(s, &q, DEFAULT_BUFFER)?;
            let mut out = match name {
                "pseudo_adjoint" => thresholded(one("residual", r.pseudo_adjoint)),
                "pseudo_intertwining" => thresholded(pm(r.pseudo_intertwine_plus, r.pseudo_intertwine_minus)),
                "pseudo_quasi" => thresholded(pm(r.pseudo_quasi_plus, r.pseudo_quasi_minus)),
                _ => thresholded(one("norm", r.pseudo_nilpotency)),
            };
            if r.untrustworthy {
                out = out.with_detail(format!("rho condition {:.3e} exceeds the trusted range", r.rho_condition));
            }
            out
        }
        _ => unreachable!("check names are validated"),
    })
}

fn tolerance(cfg: &RunConfig, name: &str, default: Option<f64>) -> Option<f64> {
    default.map(|d| cfg.tolerances.get(name).copied().unwrap_or(d))
}

fn notes(cfg: &RunConfig, built: &Built) -> Vec<String> {
    match (built, &cfg.model) {
        (Built::Cprs { family }, _) => vec![format!(
            "cprs: beta = -alpha and omega_tilde = (1 + sqrt(1 - 16 alpha^2))/2 = {}; alpha is restricted to 16 alpha^2 <= 1 so that omega_tilde is real",
            family.choice.omega_tilde()
        )],
        // z = ∫dx/ã = -1/(√ω̃ x) stays finite as x → ∞, so x_max is a real
        // boundary condition that ξ₁ does not carry to the partner.
        (_, ModelConfig::Builtin { name, .. }) if name == "isotonic" => vec![
            "isotonic: the mass omega_tilde x^4 puts x = infinity at a finite Liouville coordinate, so triplet spectra depend on the Dirichlet wall at x_max and h_bar is not isospectral to h_plus on a truncated grid".into(),
        ],
        _ => Vec::new(),
    }
}

fn validate_names(kind: &str, requested: &[String], known: &[&str]) -> Result<(), CliError> {
    for r in requested {
        if !known.contains(&r.as_str()) {
            return Err(CliError::Config(format!("unknown {kind} `{r}`; expected one of {}", known.join(", "))));
        }
    }
    Ok(())
}

fn operators_of(cfg: &RunConfig, built: &Built) -> Result<Vec<String>, CliError> {
    validate_names("operator", &cfg.spectrum.operators, OPERATORS)?;
    Ok(if cfg.spectrum.operators.is_empty() {
        built.default_operators().into_iter().map(String::from).collect()
    } else {
        cfg.spectrum.operators.clone()
    })
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let built = build(cfg)?;
    let g = cfg.grid.grid()?;
    let mut report = Report::new("spectrum", cfg.clone(), g);
    for op in operators_of(cfg, &built)? {
        let result = built.spectrum(&op, &g, cfg.spectrum.k)?;
        report.spectra.push(SpectrumEntry { operator: op, result });
    }
    report.notes = notes(cfg, &built);
    Ok(report)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let built = build(cfg)?;
    let g = cfg.grid.grid()?;
    let names: Vec<&str> = CHECKS.iter().map(|c| c.0).collect();
    validate_names("check", &cfg.checks, &names)?;
    let requested: Vec<String> = if cfg.checks.is_empty() {
        built.default_checks().into_iter().map(String::from).collect()
    } else {
        let mut seen = Vec::new();
        for c in &cfg.checks {
            if !seen.contains(c) {
                seen.push(c.clone());
            }
        }
        seen
    };
    let mut report = Report::new("verify", cfg.clone(), g);
    let mut cx = Context { built: &built, grid: g, k: cfg.spectrum.k, sector: None };
    for name in &requested {
        let default = CHECKS.iter().find(|c| c.0 == name).and_then(|c| c.1);
        let tol = tolerance(cfg, name, default);
        let result = compute_check(name, tol, &mut cx).unwrap_or_else(|e| CheckResult::error(name, e.to_string()));
        report.checks.push(result);
    }
    report.notes = notes(cfg, &built);
    Ok(report)
}

pub fn cmd_audit(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = cfg.grid.grid()?;
    let (entries, known, notes) = match &cfg.model {
        ModelConfig::Builtin { name, params } if name == "isotonic" => {
            let ch: IsotonicChoice = isotonic_choice(params)?;
            (isotonic_audit(&ch, &g)?.entries, ISOTONIC_FORMULAS, Vec::new())
        }
        ModelConfig::Builtin { name, params } if name == "cprs" => {
            let ch: CprsChoice = cprs_choice(params)?;
            let mut notes = notes(cfg, &build(cfg)?);
            // The transcribed pair has a pole at the origin; a grid through it
            // would only measure the pole.
            let g = if g.x_min() < 0.0 {
                let half = Grid::standoff(g.x_max(), g.n())?;
                notes.push(format!(
                    "cprs audit: grid moved to the positive half-line (x_min = {}) to avoid the pole of b1, b2 at x = 0",
                    half.x_min()
                ));
                half
            } else {
                g
            };
            (cprs_audit(&ch, &g)?.entries, CPRS_FORMULAS, notes)
        }
        _ => return Err(CliError::Config("audits exist for the builtin models only".into())),
    };
    validate_names("formula id", &cfg.audit.formulas, known)?;
    let mut report = Report::new("audit", cfg.clone(), g);
    report.audits = entries
        .into_iter()
        .filter(|e| cfg.audit.formulas.is_empty() || cfg.audit.formulas.contains(&e.formula_id))
        .collect();
    report.notes = notes;
    Ok(report)
}

pub fn cmd_convergence(cfg: &RunConfig) -> Result<Report, CliError> {
    let built = build(cfg)?;
    let g = cfg.grid.grid()?;
    let op = match &cfg.convergence.operator {
        Some(op) => {
            validate_names("operator", std::slice::from_ref(op), OPERATORS)?;
            op.clone()
        }
        None => built.default_operators()[0].to_string(),
    };
    let grids = cfg
        .convergence
        .n
        .iter()
        .map(|&n| Grid::new(g.x_min(), g.x_max(), n))
        .collect::<ssusy_core::Result<Vec<_>>>()?;
    let report_core =
        convergence_study(|grid| built.spectrum(&op, grid, cfg.convergence.k), &grids, cfg.convergence.k)?;
    let mut report = Report::new("convergence", cfg.clone(), g);
    report.convergence = Some(ConvergenceEntry { operator: op, report: report_core });
    report.notes = notes(cfg, &built);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Spectrum,
    Verify,
    Audit,
    Convergence,
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Audit => cmd_audit(cfg),
        Command::Convergence => cmd_convergence(cfg),
    }
}
