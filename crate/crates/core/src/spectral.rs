//! Lowest eigenvalues of symmetric banded operators by Sturm-sequence
//! bisection, plus spectra of weight-symmetrizable operators, spectrum
//! matching and refinement studies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operators::{conjugate_by_weight, BandedOperator};

/// Largest matrix reduced densely when the bandwidth exceeds one.
pub const DENSE_LIMIT: usize = 3000;

/// Relative asymmetry tolerated by [`eigen_via_similarity`].
pub const SIMILARITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TridiagonalBisection,
    DenseReductionBisection,
    Similarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub grid: Grid,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residuals: Option<Vec<f64>>,
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

impl SpectrumResult {
    /// One eigenvalue per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{i},{v:.17e}\n"));
        }
        out
    }
}

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n - 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Tridiagonal {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal must be one shorter than the diagonal");
        Tridiagonal { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.sqrt() * self.scale();
        let mut count = 0;
        let mut q = self.diag[0] - lambda;
        for i in 0..self.n() {
            if i > 0 {
                q = self.diag[i] - lambda - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue number `index` (zero-based, ascending), bracketed until the
    /// bracket is a few ulps wide.
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let pad = 1e-12 * self.scale() + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Unit eigenvector for an accurate eigenvalue, by three steps of inverse
    /// iteration with a partially pivoted tridiagonal LU.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.n();
        let shift = lambda + 8.0 * f64::EPSILON * self.scale();
        let lu = TridiagonalLu::factor(self, shift);
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919 % 101) as f64 / 101.0)).collect();
        for _ in 0..3 {
            v = lu.solve(&v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// `T - shift I = P L U` for tridiagonal `T`, as in the classical `gttrf`.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &Tridiagonal, shift: f64) -> TridiagonalLu {
        let n = t.n();
        let tiny = f64::EPSILON * t.scale();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        TridiagonalLu { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = x[i];
                x[i] = x[i + 1];
                x[i + 1] = temp - self.dl[i] * x[i];
            } else {
                x[i + 1] -= self.dl[i] * x[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.du[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * x[i + 2];
            }
            x[i] = s / self.d[i];
        }
        x
    }
}

fn check_symmetric(a: &BandedOperator) -> Result<()> {
    if a.is_symmetric() {
        Ok(())
    } else {
        Err(Error::NotSymmetric { asymmetry: a.asymmetry() / a.max_abs().max(f64::MIN_POSITIVE) })
    }
}

fn tridiagonal_form(a: &BandedOperator) -> Result<(Tridiagonal, Method)> {
    let n = a.n();
    if a.bandwidth() <= 1 {
        let off = if a.bandwidth() == 0 { vec![0.0; n - 1] } else { a.band(1) };
        return Ok((Tridiagonal::new(a.band(0), off), Method::TridiagonalBisection));
    }
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
    }
    let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let tri = nalgebra::linalg::SymmetricTridiagonal::new(dense);
    let diag = tri.diagonal().iter().copied().collect();
    let off = tri.off_diagonal().iter().copied().collect();
    Ok((Tridiagonal::new(diag, off), Method::DenseReductionBisection))
}

/// The `k` lowest eigenvalues of a symmetric operator.
pub fn eigen_symmetric(a: &BandedOperator, k: usize) -> Result<SpectrumResult> {
    check_symmetric(a)?;
    if k > a.n() {
        return Err(Error::TooManyEigenvalues { k, n: a.n() });
    }
    let (t, method) = tridiagonal_form(a)?;
    let eigenvalues = (0..k).map(|i| t.eigenvalue(i)).collect();
    Ok(SpectrumResult { eigenvalues, k, grid: *a.grid(), method, residuals: None, eigenvectors: None })
}

/// As [`eigen_symmetric`] with inverse-iteration eigenvectors and their
/// residuals `‖Av - λv‖`. Tridiagonal inputs only.
pub fn eigen_symmetric_with_vectors(a: &BandedOperator, k: usize) -> Result<SpectrumResult> {
    if a.bandwidth() > 1 {
        return Err(Error::InvalidParams("eigenvectors are available for tridiagonal operators only".into()));
    }
    let mut out = eigen_symmetric(a, k)?;
    let (t, _) = tridiagonal_form(a)?;
    let vectors: Vec<Vec<f64>> = out.eigenvalues.iter().map(|&l| t.eigenvector(l)).collect();
    let residuals = vectors
        .iter()
        .zip(&out.eigenvalues)
        .map(|(v, &l)| {
            let av = t.matvec(v);
            av.iter().zip(v).map(|(x, y)| (x - l * y).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    out.residuals = Some(residuals);
    out.eigenvectors = Some(vectors);
    Ok(out)
}

/// Spectrum of an operator made symmetric by `D(ρ) A D(ρ)⁻¹`. Fails when the
/// conjugate is not symmetric to `1e-8 ‖A‖`, which signals a wrong weight.
pub fn eigen_via_similarity(a: &BandedOperator, rho: &Field, k: usize) -> Result<SpectrumResult> {
    let s = conjugate_by_weight(a, rho)?;
    let asymmetry = s.asymmetry() / a.max_abs().max(f64::MIN_POSITIVE);
    if asymmetry > SIMILARITY_TOLERANCE {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let sym = symmetric_part(&s);
    let mut out = eigen_symmetric(&sym, k)?;
    out.method = Method::Similarity;
    Ok(out)
}

/// `(S + Sᵀ) / 2`, flagged symmetric. Float addition commutes, so the
/// result is bitwise symmetric.
pub fn symmetric_part(s: &BandedOperator) -> BandedOperator {
    BandedOperator::from_fn(*s.grid(), s.bandwidth(), |i, j| 0.5 * (s.get(i, j) + s.get(j, i)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub first: f64,
    pub second: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumComparison {
    pub matched: Vec<MatchedPair>,
    pub unmatched_first: Vec<f64>,
    pub unmatched_second: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub allow_missing: usize,
    pub within_allowance: bool,
}

/// Greedy two-pointer matching of ascending lists. Entries beyond the end of
/// the shorter list's range are outside the common window and ignored.
pub fn spectrum_compare(
    s1: &SpectrumResult,
    s2: &SpectrumResult,
    tol: f64,
    allow_missing: usize,
) -> SpectrumComparison {
    compare_lists(&s1.eigenvalues, &s2.eigenvalues, tol, allow_missing)
}

pub fn compare_lists(a: &[f64], b: &[f64], tol: f64, allow_missing: usize) -> SpectrumComparison {
    let (mut i, mut j) = (0, 0);
    let mut matched = Vec::new();
    let mut unmatched_first = Vec::new();
    let mut unmatched_second = Vec::new();
    while i < a.len() && j < b.len() {
        let diff = b[j] - a[i];
        if diff.abs() <= tol {
            matched.push(MatchedPair { first: a[i], second: b[j], difference: diff });
            i += 1;
            j += 1;
        } else if a[i] < b[j] {
            unmatched_first.push(a[i]);
            i += 1;
        } else {
            unmatched_second.push(b[j]);
            j += 1;
        }
    }
    let max_deviation = matched.iter().fold(0.0, |m: f64, p| m.max(p.difference.abs()));
    let within_allowance = !matched.is_empty() && unmatched_first.len() + unmatched_second.len() <= allow_missing;
    SpectrumComparison {
        matched,
        unmatched_first,
        unmatched_second,
        max_deviation,
        tolerance: tol,
        allow_missing,
        within_allowance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub grids: Vec<Grid>,
    pub k: usize,
    /// `eigenvalues[g][level]`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Observed order for each consecutive grid triple, `orders[t][level]`.
    pub orders: Vec<Vec<f64>>,
    /// Richardson-extrapolated levels from the finest triple.
    pub extrapolated: Vec<f64>,
}

impl ConvergenceReport {
    /// Orders from the finest triple.
    pub fn final_orders(&self) -> &[f64] {
        self.orders.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Solve `(h1^p - h2^p) / (h2^p - h3^p) = ratio` for `p` in `[0.05, 12]`.
pub fn observed_order(h: [f64; 3], values: [f64; 3]) -> f64 {
    let d12 = values[0] - values[1];
    let d23 = values[1] - values[2];
    if d23 == 0.0 || d12 == 0.0 || d12.signum() != d23.signum() {
        return f64::NAN;
    }
    let target = d12 / d23;
    let model = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p));
    let (mut lo, mut hi) = (0.05, 12.0);
    if target <= model(lo) || target >= model(hi) {
        return f64::NAN;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve the same spectral problem on a refinement chain (same domain,
/// consecutive spacing ratios between 1.5 and 2.5) and estimate the order of
/// each level. Grids are solved in parallel.
pub fn convergence_study<F>(builder: F, grids: &[Grid], k: usize) -> Result<ConvergenceReport>
where
    F: Fn(&Grid) -> Result<SpectrumResult> + Sync,
{
    if grids.len() < 3 {
        return Err(Error::Convergence(format!("need at least 3 grids, got {}", grids.len())));
    }
    for w in grids.windows(2) {
        if !w[0].same_domain(&w[1]) {
            return Err(Error::Convergence("grids cover different domains".into()));
        }
        let ratio = w[0].h() / w[1].h();
        if !(1.5..=2.5).contains(&ratio) {
            return Err(Error::Convergence(format!("spacing ratio {ratio:.3} is not a refinement by about 2")));
        }
    }
    let spectra = grids.par_iter().map(&builder).collect::<Result<Vec<_>>>()?;
    let eigenvalues: Vec<Vec<f64>> = spectra.into_iter().map(|s| s.eigenvalues).collect();
    if eigenvalues.iter().any(|e| e.len() < k) {
        return Err(Error::Convergence("builder returned fewer than k eigenvalues".into()));
    }
    let orders: Vec<Vec<f64>> = (0..grids.len() - 2)
        .map(|t| {
            let h = [grids[t].h(), grids[t + 1].h(), grids[t + 2].h()];
            (0..k)
                .map(|l| observed_order(h, [eigenvalues[t][l], eigenvalues[t + 1][l], eigenvalues[t + 2][l]]))
                .collect()
        })
        .collect();
    let m = grids.len();
    let (h2, h3) = (grids[m - 2].h(), grids[m - 1].h());
    let extrapolated = (0..k)
        .map(|l| {
            let p = orders[m - 3][l];
            let (e2, e3) = (eigenvalues[m - 2][l], eigenvalues[m - 1][l]);
            if p.is_finite() {
                let r = (h2 / h3).powf(p);
                e3 + (e3 - e2) / (r - 1.0)
            } else {
                e3
            }
        })
        .collect();
    Ok(ConvergenceReport { grids: grids.to_vec(), k, eigenvalues, orders, extrapolated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Bindings, Expr};
    use crate::grid::sample;
    use crate::operators::{compose, ladder_matrix, sturm_liouville_matrix, transpose, LadderSpec, Which};
    use proptest::prelude::*;

    fn schrodinger(potential: &str, x_min: f64, x_max: f64, n: usize) -> BandedOperator {
        let g = Grid::new(x_min, x_max, n).unwrap();
        let v = sample(&Expr::parse(potential).unwrap(), &g, &Bindings::new()).unwrap();
        sturm_liouville_matrix(&Expr::num(1.0), &v, &g, &Bindings::new()).unwrap()
    }

    #[test]
    fn dirichlet_laplacian() {
        let a = schrodinger("0", 0.0, std::f64::consts::PI, 2000);
        let s = eigen_symmetric(&a, 4).unwrap();
        for (l, k) in s.eigenvalues.iter().zip([1.0, 4.0, 9.0, 16.0]) {
            assert!((l - k).abs() < 5e-3, "{l} vs {k}");
        }
    }

    #[test]
    fn harmonic_oscillator() {
        // level 9 carries a 2.6e-4 discretization error at n = 2000
        let a = schrodinger("x^2", -10.0, 10.0, 4000);
        let s = eigen_symmetric(&a, 5).unwrap();
        for (l, k) in s.eigenvalues.iter().zip([1.0, 3.0, 5.0, 7.0, 9.0]) {
            assert!((l - k).abs() < 1e-4, "{l} vs {k}");
        }
        assert!(eigen_symmetric(&a, 0).unwrap().eigenvalues.is_empty());
        assert!(eigen_symmetric(&a, 4001).is_err());
    }

    #[test]
    fn eigenvectors_have_small_residuals() {
        let a = schrodinger("x^2", -8.0, 8.0, 800);
        let s = eigen_symmetric_with_vectors(&a, 4).unwrap();
        for r in s.residuals.unwrap() {
            assert!(r <= 1e-8 * a.max_abs(), "{r}");
        }
    }

    #[test]
    fn rejects_nonsymmetric_input() {
        let g = Grid::new(-1.0, 1.0, 20).unwrap();
        let spec = LadderSpec::new(Expr::num(1.0), Expr::var());
        let eta = ladder_matrix(&spec, &g, &Bindings::new(), Which::Eta).unwrap();
        assert!(matches!(eigen_symmetric(&eta, 2), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn dense_path_matches_product_structure() {
        let g = Grid::new(-4.0, 4.0, 120).unwrap();
        let spec = LadderSpec::new(Expr::num(1.0), Expr::var());
        let eta = ladder_matrix(&spec, &g, &Bindings::new(), Which::Eta).unwrap();
        let gram = compose(&transpose(&eta), &eta).unwrap();
        let s = eigen_symmetric(&gram, 10).unwrap();
        assert_eq!(s.method, Method::DenseReductionBisection);
        assert!(s.eigenvalues[0] >= -1e-10 * gram.max_abs());
        let dense = nalgebra::DMatrix::from_fn(120, 120, |i, j| gram.get(i, j));
        let mut oracle: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (a, b) in s.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9 * gram.max_abs());
        }
    }

    #[test]
    fn similarity_spectrum_and_wrong_weight() {
        let a = schrodinger("x^2", -5.0, 5.0, 300);
        let g = *a.grid();
        let rho = Field::from_fn(g, |x| (0.3 * x).exp()).unwrap();
        let rho_inv = rho.map(|v| 1.0 / v).unwrap();
        let nh = conjugate_by_weight(&a, &rho_inv).unwrap();
        let via = eigen_via_similarity(&nh, &rho, 6).unwrap();
        let direct = eigen_symmetric(&a, 6).unwrap();
        for (x, y) in via.eigenvalues.iter().zip(&direct.eigenvalues) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
        let unit = Field::constant(g, 1.0).unwrap();
        assert_eq!(eigen_via_similarity(&a, &unit, 6).unwrap().eigenvalues, direct.eigenvalues);
        assert!(matches!(eigen_via_similarity(&nh, &unit, 3), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn compare_examples() {
        let a = [-1.0, 1.0, 3.0, 5.0];
        let b = [1.0, 3.0, 5.0, 7.0];
        let c = compare_lists(&a, &b, 1e-6, 1);
        assert_eq!(c.matched.len(), 3);
        assert_eq!(c.unmatched_first, vec![-1.0]);
        assert!(c.within_allowance);
        let same = compare_lists(&a, &a, 0.0, 0);
        assert_eq!(same.max_deviation, 0.0);
        let disjoint = compare_lists(&[0.0, 1.0], &[10.0, 11.0], 1e-3, 0);
        assert!(disjoint.matched.is_empty());
        assert!(!disjoint.within_allowance);
    }

    #[test]
    fn observed_order_recovers_power_laws() {
        let h = [0.1, 0.05, 0.024];
        let v = h.map(|h: f64| 3.0 + 2.0 * h * h);
        assert!((observed_order(h, v) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn convergence_needs_three_nested_grids() {
        let build = |g: &Grid| {
            let v = sample(&Expr::parse("x^2").unwrap(), g, &Bindings::new())?;
            eigen_symmetric(&sturm_liouville_matrix(&Expr::num(1.0), &v, g, &Bindings::new())?, 5)
        };
        let grids: Vec<Grid> = [1000, 2000, 4000].iter().map(|&n| Grid::new(-10.0, 10.0, n).unwrap()).collect();
        let r = convergence_study(build, &grids, 5).unwrap();
        for p in r.final_orders() {
            assert!((p - 2.0).abs() < 0.3, "{p}");
        }
        assert!(convergence_study(build, &grids[..2], 5).is_err());
        let shifted = [grids[0], grids[1], Grid::new(-9.0, 10.0, 4000).unwrap()];
        assert!(convergence_study(build, &shifted, 5).is_err());
    }

    proptest! {
        #[test]
        fn sturm_counts_are_monotone(d in proptest::collection::vec(-3.0f64..3.0, 12), e in proptest::collection::vec(-1.0f64..1.0, 11), l in proptest::collection::vec(-6.0f64..6.0, 8)) {
            let t = Tridiagonal::new(d, e);
            let mut ls = l;
            ls.sort_by(f64::total_cmp);
            let counts: Vec<usize> = ls.iter().map(|&x| t.count_below(x)).collect();
            prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
            let (lo, hi) = t.bounds();
            prop_assert_eq!(t.count_below(lo - 1.0), 0);
            prop_assert_eq!(t.count_below(hi + 1.0), 12);
        }

        #[test]
        fn bisection_matches_dense_solver(d in proptest::collection::vec(-3.0f64..3.0, 10), e in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let t = Tridiagonal::new(d.clone(), e.clone());
            let m = nalgebra::DMatrix::from_fn(10, 10, |i, j| if i == j { d[i] } else if i + 1 == j { e[i] } else if j + 1 == i { e[j] } else { 0.0 });
            let mut oracle: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            oracle.sort_by(f64::total_cmp);
            for (i, o) in oracle.iter().enumerate() {
                prop_assert!((t.eigenvalue(i) - o).abs() <= 1e-12 * 8.0);
            }
        }
    }
}
