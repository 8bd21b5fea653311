//! Ridge-penalized logistic regression fitted by damped Newton iteration,
//! separation detection via divergence of the unpenalized iterates, and the
//! delta-method width of a predicted probability.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::uncertainty::z_upper;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;
/// Coefficient norm beyond which the unpenalized fit is declared divergent.
pub const DIVERGE_NORM: f64 = 50.0;
const MAX_HALVINGS: usize = 60;

/// Largest double below one; predicted probabilities are clamped into
/// `[f64::MIN_POSITIVE, ONE_BELOW]` so they stay strictly inside `(0, 1)`.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Design matrix with an explicit leading intercept column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticDesign {
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    pub ridge: f64,
    /// Whether the ridge penalty also applies to the intercept.
    pub penalize_intercept: bool,
}

impl LogisticDesign {
    /// Empty design over `d` features.
    pub fn new(d: usize, ridge: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("need at least one feature"));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::domain(format!("ridge penalty must be >= 0, got {ridge}")));
        }
        Ok(Self {
            p: d + 1,
            x: Vec::new(),
            y: Vec::new(),
            ridge,
            penalize_intercept: true,
        })
    }

    pub fn from_rows(features: &[Vec<f64>], labels: &[u8], ridge: f64) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::argument(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let d = features.first().map_or(0, Vec::len);
        let mut design = Self::new(d, ridge)?;
        for (f, &y) in features.iter().zip(labels) {
            design.push(f, y)?;
        }
        Ok(design)
    }

    pub fn push(&mut self, features: &[f64], label: u8) -> Result<()> {
        if features.len() + 1 != self.p {
            return Err(Error::argument(format!(
                "expected {} features, got {}",
                self.p - 1,
                features.len()
            )));
        }
        if label > 1 {
            return Err(Error::domain(format!("labels must be 0 or 1, got {label}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("features must be finite"));
        }
        self.x.push(1.0);
        self.x.extend_from_slice(features);
        self.y.push(f64::from(label));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Number of features, excluding the intercept.
    pub fn features(&self) -> usize {
        self.p - 1
    }

    /// Number of coefficients, including the intercept.
    pub fn coefficients(&self) -> usize {
        self.p
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    fn penalized(&self, j: usize) -> bool {
        j > 0 || self.penalize_intercept
    }

    /// Penalized log-likelihood at `beta` with penalty `ridge`.
    fn objective_with(&self, beta: &[f64], ridge: f64) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.len() {
            let eta = dot(self.row(i), beta);
            ll += self.y[i] * eta - log1p_exp(eta);
        }
        let pen: f64 = (0..self.p)
            .filter(|&j| self.penalized(j))
            .map(|j| beta[j] * beta[j])
            .sum();
        ll - 0.5 * ridge * pen
    }

    pub fn objective(&self, beta: &[f64]) -> f64 {
        self.objective_with(beta, self.ridge)
    }

    /// Gradient of the penalized log-likelihood.
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        self.gradient_with(beta, self.ridge)
    }

    fn gradient_with(&self, beta: &[f64], ridge: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.p];
        for i in 0..self.len() {
            let row = self.row(i);
            let resid = self.y[i] - expit_raw(dot(row, beta));
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += resid * xj;
            }
        }
        for (j, gj) in g.iter_mut().enumerate() {
            if self.penalized(j) {
                *gj -= ridge * beta[j];
            }
        }
        g
    }

    /// Negative Hessian `X' W X + ridge * P`.
    fn information(&self, beta: &[f64], ridge: f64) -> DMatrix<f64> {
        let p = self.p;
        let mut h = DMatrix::<f64>::zeros(p, p);
        for i in 0..self.len() {
            let row = self.row(i);
            let mu = expit_raw(dot(row, beta));
            let w = mu * (1.0 - mu);
            if w == 0.0 {
                continue;
            }
            for a in 0..p {
                let wa = w * row[a];
                for b in 0..=a {
                    h[(a, b)] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
            if self.penalized(a) {
                h[(a, a)] += ridge;
            }
        }
        h
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `ln(1 + e^t)` without overflow.
fn log1p_exp(t: f64) -> f64 {
    if t > 35.0 {
        t + (-t).exp()
    } else if t < -35.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

fn expit_raw(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Logistic function clamped strictly inside `(0, 1)`.
pub fn expit(t: f64) -> f64 {
    expit_raw(t).clamp(f64::MIN_POSITIVE, ONE_BELOW)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Coefficient norm exceeded [`DIVERGE_NORM`].
    pub separation_flag: bool,
    pub objective: f64,
}

fn solve_spd(h: DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let chol = h.cholesky()?;
    Some(chol.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
}

/// Like [`solve_spd`], adding a growing diagonal jitter when the matrix is
/// numerically singular (only reachable without a penalty).
fn solve_jittered(h: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    if let Some(s) = solve_spd(h.clone(), rhs) {
        return Some(s);
    }
    let scale = 1.0 + h.diagonal().amax();
    let mut jitter = 1e-10 * scale;
    for _ in 0..8 {
        let mut hj = h.clone();
        for a in 0..hj.nrows() {
            hj[(a, a)] += jitter;
        }
        if let Some(s) = solve_spd(hj, rhs) {
            return Some(s);
        }
        jitter *= 100.0;
    }
    None
}

struct NewtonTrace {
    objectives: Vec<f64>,
    norms: Vec<f64>,
}

fn newton(
    design: &LogisticDesign,
    ridge: f64,
    init: &[f64],
    tol: f64,
    max_iter: usize,
    stop_above_norm: Option<f64>,
    trace: &mut NewtonTrace,
) -> Result<FitResult> {
    if design.is_empty() {
        return Err(Error::argument("cannot fit an empty design"));
    }
    if init.len() != design.p {
        return Err(Error::argument(format!(
            "initial vector has length {}, expected {}",
            init.len(),
            design.p
        )));
    }
    let mut beta = init.to_vec();
    let mut obj = design.objective_with(&beta, ridge);
    if !obj.is_finite() {
        return Err(Error::numeric("non-finite objective at the starting point"));
    }
    trace.objectives.push(obj);
    trace.norms.push(norm(&beta));
    let mut g = design.gradient_with(&beta, ridge);
    let mut iterations = 0;
    // In divergence-probing mode a small gradient alone is not convergence:
    // separated data drive the gradient to zero while the iterates run off.
    let probing = stop_above_norm.is_some();
    let mut converged = !probing && norm(&g) <= tol;
    while !converged && iterations < max_iter {
        if stop_above_norm.is_some_and(|cap| norm(&beta) > cap) {
            break;
        }
        let h = design.information(&beta, ridge);
        let Some(step) = solve_jittered(&h, &g) else {
            break;
        };
        if probing && norm(&g) <= tol && norm(&step) <= 1e-8 * (1.0 + norm(&beta)) {
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let oc = design.objective_with(&cand, ridge);
            if oc.is_finite() && oc >= obj - 4.0 * f64::EPSILON * obj.abs().max(1.0) {
                accepted = Some((cand, oc));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((cand, oc)) = accepted else {
            break;
        };
        beta = cand;
        obj = oc;
        if !obj.is_finite() {
            return Err(Error::numeric("objective became non-finite"));
        }
        trace.objectives.push(obj);
        trace.norms.push(norm(&beta));
        g = design.gradient_with(&beta, ridge);
        converged = !probing && norm(&g) <= tol;
    }
    let grad_norm = norm(&g);
    Ok(FitResult {
        separation_flag: norm(&beta) > DIVERGE_NORM,
        coefficients: beta,
        converged,
        iterations,
        grad_norm,
        objective: obj,
    })
}

/// Maximizes the ridge-penalized log-likelihood from the origin.
pub fn fit_ridge_logistic(design: &LogisticDesign, tol: f64, max_iter: usize) -> Result<FitResult> {
    fit_ridge_logistic_from(design, &vec![0.0; design.p], tol, max_iter)
}

/// Warm-started variant of [`fit_ridge_logistic`].
pub fn fit_ridge_logistic_from(
    design: &LogisticDesign,
    init: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<FitResult> {
    let mut trace = NewtonTrace {
        objectives: Vec::new(),
        norms: Vec::new(),
    };
    newton(design, design.ridge, init, tol, max_iter, None, &mut trace)
}

/// Runs the unpenalized Newton iteration and reports divergence: the
/// coefficient norm exceeding `diverge_norm`, or a non-converged run whose
/// norm is still growing.
pub fn detect_separation(design: &LogisticDesign, diverge_norm: f64, max_iter: usize) -> bool {
    let mut trace = NewtonTrace {
        objectives: Vec::new(),
        norms: Vec::new(),
    };
    let fit = match newton(
        design,
        0.0,
        &vec![0.0; design.p],
        DEFAULT_TOL,
        max_iter,
        Some(diverge_norm),
        &mut trace,
    ) {
        Ok(f) => f,
        Err(_) => return false,
    };
    if trace.norms.iter().any(|&n| n > diverge_norm) {
        return true;
    }
    if fit.converged {
        return false;
    }
    let k = trace.norms.len();
    k >= 2 && trace.norms[k - 1] > trace.norms[k / 2]
}

/// `expit(x' beta)` at a covariate point `x` (without the intercept entry).
pub fn predict_prob(coefficients: &[f64], x: &[f64]) -> Result<f64> {
    Ok(expit(linear_score(coefficients, x)?))
}

/// `1 - predict_prob`, evaluated without cancellation.
pub fn predict_prob_complement(coefficients: &[f64], x: &[f64]) -> Result<f64> {
    Ok(expit(-linear_score(coefficients, x)?))
}

fn linear_score(coefficients: &[f64], x: &[f64]) -> Result<f64> {
    if coefficients.len() != x.len() + 1 {
        return Err(Error::argument(format!(
            "{} coefficients do not match a {}-dimensional point",
            coefficients.len(),
            x.len()
        )));
    }
    Ok(coefficients[0] + dot(&coefficients[1..], x))
}

/// Delta-method width `2 z sqrt(x0' H^-1 x0) p (1 - p)` of the predicted
/// probability, with `H` the penalized information at the fitted coefficients.
pub fn predictive_width(fit: &FitResult, design: &LogisticDesign, x0: &[f64], alpha: f64) -> Result<f64> {
    if !fit.converged {
        return Err(Error::numeric("predictive width requires a converged fit"));
    }
    let p_hat = predict_prob(&fit.coefficients, x0)?;
    let q_hat = predict_prob_complement(&fit.coefficients, x0)?;
    let mut xt = Vec::with_capacity(x0.len() + 1);
    xt.push(1.0);
    xt.extend_from_slice(x0);
    let h = design.information(&fit.coefficients, design.ridge);
    let v = solve_spd(h, &xt).ok_or_else(|| Error::numeric("singular penalized Hessian"))?;
    let var = dot(&xt, &v).max(0.0);
    Ok(2.0 * z_upper(alpha)? * var.sqrt() * p_hat * q_hat)
}

/// Infinite stream of `(x, y)` pairs with `x ~ N(0, I_d)` and
/// `y ~ Bernoulli(rho)` (only the intercept is active).
#[derive(Debug, Clone)]
pub struct LogisticStream {
    d: usize,
    rho: f64,
    rng: StreamRng,
}

impl LogisticStream {
    pub fn new(d: usize, rho: f64, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("need at least one feature"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::domain(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(Self {
            d,
            rho,
            rng: stream(seed),
        })
    }
}

impl Iterator for LogisticStream {
    type Item = (Vec<f64>, u8);

    fn next(&mut self) -> Option<Self::Item> {
        let x: Vec<f64> = (0..self.d).map(|_| self.rng.sample(StandardNormal)).collect();
        let u: f64 = self.rng.random();
        Some((x, u8::from(u < self.rho)))
    }
}

/// First `n_max` draws of [`LogisticStream`] as a design with unit ridge.
pub fn simulate_logistic_scenario(d: usize, rho: f64, n_max: usize, seed: u64) -> Result<LogisticDesign> {
    let mut design = LogisticDesign::new(d, 1.0)?;
    for (x, y) in LogisticStream::new(d, rho, seed)?.take(n_max) {
        design.push(&x, y)?;
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_only_zeros(n: usize, ridge: f64) -> LogisticDesign {
        // a single all-zero feature leaves only the intercept identified
        let rows = vec![vec![0.0]; n];
        LogisticDesign::from_rows(&rows, &vec![0; n], ridge).unwrap()
    }

    #[test]
    fn all_zero_labels_intercept_root() {
        // bisection oracle for 100 expit(b) + b = 0
        let fit = fit_ridge_logistic(&intercept_only_zeros(100, 1.0), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.converged);
        assert!((fit.coefficients[0] + 3.359_275_045_369_594).abs() < 1e-9);
        assert!(fit.grad_norm <= DEFAULT_TOL);
    }

    #[test]
    fn label_flip_negates_coefficients() {
        let design = simulate_logistic_scenario(3, 0.3, 80, 11).unwrap();
        let mut rows = Vec::new();
        let mut flipped = Vec::new();
        let mut labels = Vec::new();
        for i in 0..design.len() {
            let r = design.row(i)[1..].to_vec();
            flipped.push(r.iter().map(|v| -v).collect::<Vec<_>>());
            rows.push(r);
            labels.push(1 - design.y[i] as u8);
        }
        let a = fit_ridge_logistic(&design, 1e-10, 100).unwrap();
        let b = fit_ridge_logistic(&LogisticDesign::from_rows(&rows, &labels, 1.0).unwrap(), 1e-10, 100)
            .unwrap();
        // negating the features as well undoes the flip on the slopes
        let c = fit_ridge_logistic(&LogisticDesign::from_rows(&flipped, &labels, 1.0).unwrap(), 1e-10, 100)
            .unwrap();
        assert!((a.coefficients[0] + c.coefficients[0]).abs() < 1e-9);
        for (x, y) in a.coefficients[1..].iter().zip(&c.coefficients[1..]) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x + y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn heavy_penalty_shrinks_to_zero() {
        let mut design = simulate_logistic_scenario(4, 0.2, 200, 5).unwrap();
        design.ridge = 1e8;
        let fit = fit_ridge_logistic(&design, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(norm(&fit.coefficients) < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let design = simulate_logistic_scenario(5, 0.3, 60, 2).unwrap();
        let mut rng = stream(99);
        for _ in 0..20 {
            let beta: Vec<f64> = (0..design.p).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = design.gradient(&beta);
            for j in 0..design.p {
                let h = 1e-5;
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (design.objective(&up) - design.objective(&dn)) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "j={j}: {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn damped_newton_is_monotone() {
        let design = simulate_logistic_scenario(3, 0.05, 150, 8).unwrap();
        let mut trace = NewtonTrace {
            objectives: Vec::new(),
            norms: Vec::new(),
        };
        let start = vec![3.0, -2.0, 4.0, 1.0];
        let fit = newton(&design, 1.0, &start, 1e-10, 100, None, &mut trace).unwrap();
        assert!(fit.converged);
        for w in trace.objectives.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn ridge_solution_is_unique() {
        let design = simulate_logistic_scenario(3, 0.1, 120, 4).unwrap();
        let a = fit_ridge_logistic_from(&design, &[5.0, -5.0, 2.0, 0.0], DEFAULT_TOL, 200).unwrap();
        let b = fit_ridge_logistic_from(&design, &[-4.0, 1.0, -3.0, 6.0], DEFAULT_TOL, 200).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn separation_examples() {
        let xs: Vec<Vec<f64>> = (1..=10).map(|i| vec![i as f64 - 5.5]).collect();
        let ys: Vec<u8> = (1..=10).map(|i| u8::from(i > 5)).collect();
        let sep = LogisticDesign::from_rows(&xs, &ys, 0.0).unwrap();
        assert!(detect_separation(&sep, DIVERGE_NORM, DEFAULT_MAX_ITER));

        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![(i / 2) as f64]).collect();
        let ys: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let overlap = LogisticDesign::from_rows(&xs, &ys, 0.0).unwrap();
        assert!(!detect_separation(&overlap, DIVERGE_NORM, DEFAULT_MAX_ITER));
    }

    #[test]
    fn prediction_examples() {
        assert_eq!(predict_prob(&[0.0, 0.0], &[3.0]).unwrap(), 0.5);
        let near_one = predict_prob(&[40.0], &[]).unwrap();
        assert!(near_one < 1.0 && near_one > 1.0 - 1e-15);
        let comp = predict_prob_complement(&[40.0], &[]).unwrap();
        assert!((comp - (-40f64).exp()).abs() < 1e-30);
        assert!(predict_prob(&[-1e6], &[]).unwrap() > 0.0);
        let rho = predict_prob(&[logit(0.01), 2.0, -1.0], &[0.0, 0.0]).unwrap();
        assert!((rho - 0.01).abs() < 1e-15);
        assert!(predict_prob(&[0.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn width_under_heavy_penalty() {
        let mut design = simulate_logistic_scenario(2, 0.3, 100, 7).unwrap();
        design.ridge = 1e6;
        let fit = fit_ridge_logistic(&design, 1e-10, 100).unwrap();
        let x0 = [0.7, -0.4];
        let w = predictive_width(&fit, &design, &x0, 0.05).unwrap();
        let p = predict_prob(&fit.coefficients, &x0).unwrap();
        let xn = (1.0f64 + 0.49 + 0.16).sqrt();
        let approx = 2.0 * z_upper(0.05).unwrap() * xn * p * (1.0 - p) / 1e3;
        assert!((w - approx).abs() / approx < 1e-3);
    }

    #[test]
    fn width_at_origin_uses_intercept_variance_only() {
        let design = simulate_logistic_scenario(3, 0.2, 150, 3).unwrap();
        let fit = fit_ridge_logistic(&design, 1e-10, 100).unwrap();
        let w = predictive_width(&fit, &design, &[0.0; 3], 0.05).unwrap();
        let h = design.information(&fit.coefficients, 1.0);
        let inv = h.try_inverse().unwrap();
        let p = predict_prob(&fit.coefficients, &[0.0; 3]).unwrap();
        let expected = 2.0 * z_upper(0.05).unwrap() * inv[(0, 0)].sqrt() * p * (1.0 - p);
        assert!((w - expected).abs() < 1e-12);
    }

    #[test]
    fn width_shrinks_with_sample_size() {
        let mut small = Vec::new();
        let mut large = Vec::new();
        for seed in 0..50 {
            let design = simulate_logistic_scenario(2, 0.3, 1000, 100 + seed).unwrap();
            let mut head = LogisticDesign::new(2, 1.0).unwrap();
            for i in 0..100 {
                head.push(&design.row(i)[1..], design.y[i] as u8).unwrap();
            }
            let fs = fit_ridge_logistic(&head, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            let fl = fit_ridge_logistic(&design, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            small.push(predictive_width(&fs, &head, &[0.0, 0.0], 0.05).unwrap());
            large.push(predictive_width(&fl, &design, &[0.0, 0.0], 0.05).unwrap());
        }
        small.sort_by(f64::total_cmp);
        large.sort_by(f64::total_cmp);
        assert!(large[25] < small[25]);
    }

    #[test]
    fn simulated_label_rates() {
        let mean = |rho: f64| {
            let s: u32 = LogisticStream::new(1, rho, 21)
                .unwrap()
                .take(100_000)
                .map(|(_, y)| u32::from(y))
                .sum();
            f64::from(s) / 1e5
        };
        assert!((mean(0.5) - 0.5).abs() < 0.005);
        assert!((mean(0.01) - 0.01).abs() < 0.0012);
        let a: Vec<_> = LogisticStream::new(3, 0.1, 5).unwrap().take(20).collect();
        let b: Vec<_> = LogisticStream::new(3, 0.1, 5).unwrap().take(20).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_inputs() {
        assert!(LogisticDesign::new(2, -1.0).is_err());
        let mut d = LogisticDesign::new(2, 1.0).unwrap();
        assert!(d.push(&[1.0], 0).is_err());
        assert!(d.push(&[1.0, 2.0], 2).is_err());
        assert!(d.push(&[f64::NAN, 2.0], 0).is_err());
        assert!(fit_ridge_logistic(&d, DEFAULT_TOL, 10).is_err());
        assert!(LogisticStream::new(2, 1.0, 0).is_err());
    }
}
