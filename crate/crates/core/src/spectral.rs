//! Filtration of the locally constant algebra by cylinder depth, the Dirac
//! spectrum, detail coefficients of symbols, and the associated zeta
//! functions.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Letter, ReducedWord};
use crate::measure::PulledBackMeasure;

/// `dim A_n`: 1 for `n = 0`, else `2g (2g-1)^(n-1)`; saturates at `u128::MAX`.
pub fn filtration_dim(g: usize, n: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    let q = (2 * g - 1) as u128;
    let mut d = (2 * g) as u128;
    for _ in 1..n {
        d = d.saturating_mul(q);
    }
    d
}

/// Multiplicity of the `n`-th eigenvalue, `dim A_n - dim A_{n-1}`.
pub fn multiplicity(g: usize, n: usize) -> u128 {
    if n == 0 {
        1
    } else {
        filtration_dim(g, n) - filtration_dim(g, n - 1)
    }
}

/// `lambda_n = (dim A_n)^3`.
pub fn dirac_eigenvalue(g: usize, n: usize) -> f64 {
    (filtration_dim(g, n) as f64).powi(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiracSpectrum {
    pub g: usize,
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<u128>,
}

impl DiracSpectrum {
    pub fn new(g: usize, depth: usize) -> Self {
        Self {
            g,
            eigenvalues: (0..=depth).map(|n| dirac_eigenvalue(g, n)).collect(),
            multiplicities: (0..=depth).map(|n| multiplicity(g, n)).collect(),
        }
    }
}

/// The filtration `A_0 < A_1 < ... < A_N` together with the measure that
/// defines its inner product.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub g: usize,
    pub depth: usize,
    pub dims: Vec<u128>,
    pub measure: PulledBackMeasure,
}

impl Filtration {
    pub fn new(g: usize, measure: PulledBackMeasure) -> Self {
        let depth = measure.depth();
        Self {
            g,
            depth,
            dims: (0..=depth).map(|n| filtration_dim(g, n)).collect(),
            measure,
        }
    }
}

/// A finite linear combination of word-cylinder indicators; the empty word
/// stands for the unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Symbol {
    pub terms: Vec<(f64, ReducedWord)>,
}

impl Symbol {
    pub fn one() -> Self {
        Self {
            terms: vec![(1.0, ReducedWord::empty())],
        }
    }

    pub fn indicator(w: ReducedWord) -> Self {
        Self {
            terms: vec![(1.0, w)],
        }
    }

    /// Depth at which the symbol becomes constant on cylinders.
    pub fn depth(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    pub fn genus_needed(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(_, w)| w.letters())
            .map(|l| l.index() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Value on a cylinder at least as deep as the symbol.
    pub fn value_on(&self, w: &ReducedWord) -> f64 {
        self.terms
            .iter()
            .filter(|(_, u)| w.starts_with(u))
            .map(|(c, _)| c)
            .sum()
    }

    /// `sup |a|`, attained on some cylinder of the symbol's depth.
    pub fn sup_abs(&self, g: usize) -> f64 {
        ReducedWord::all_of_length(g, self.depth())
            .iter()
            .map(|w| self.value_on(w).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(a, w)| (a * c, w.clone())).collect(),
        }
    }

    pub fn plus(&self, other: &Symbol) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, w)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            if *c != 1.0 {
                write!(f, "{c}*")?;
            }
            if w.is_empty() {
                f.write_str("1")?;
            } else {
                let letters: Vec<String> = w.letters().iter().map(|l| l.0.to_string()).collect();
                write!(f, "cyl:{}", letters.join(","))?;
            }
        }
        Ok(())
    }
}

impl FromStr for Symbol {
    type Err = Error;

    /// `1`, `cyl:1,-2`, `0.5*cyl:1+2*1`, ...
    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("symbol {text:?}: {msg}"));
        let mut terms = Vec::new();
        for raw in text.split('+') {
            let raw = raw.trim();
            let (coef, atom) = match raw.split_once('*') {
                Some((c, a)) => (
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| bad("bad coefficient"))?,
                    a.trim(),
                ),
                None => (1.0, raw),
            };
            let word = if atom == "1" {
                ReducedWord::empty()
            } else if let Some(list) = atom.strip_prefix("cyl:") {
                let letters: Vec<i32> = list
                    .split(',')
                    .map(|t| t.trim().parse::<i32>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad letter"))?;
                ReducedWord::from_signed(&letters).ok_or_else(|| bad("word is not reduced"))?
            } else {
                return Err(bad("expected `1` or `cyl:<letters>`"));
            };
            terms.push((coef, word));
        }
        Ok(Self { terms })
    }
}

pub const DEGENERATE_MASS: f64 = 1e-12;

fn check_depths(a: &Symbol, nu: &PulledBackMeasure, n: usize) -> Result<()> {
    if a.depth() > nu.depth() {
        return Err(Error::SymbolTooDeep {
            needed: a.depth(),
            available: nu.depth(),
        });
    }
    if a.depth() > n {
        return Err(Error::InvalidArgument(format!(
            "symbol is not constant on depth-{n} cylinders"
        )));
    }
    Ok(())
}

fn genus_of(nu: &PulledBackMeasure) -> usize {
    nu.as_cylinder_measure()
        .level(1)
        .count()
        .checked_div(2)
        .unwrap_or(0)
}

fn checked_mass(nu: &PulledBackMeasure, w: &ReducedWord) -> Result<f64> {
    let m = nu
        .mass(w)
        .ok_or_else(|| Error::InvalidArgument(format!("measure has no entry for {w}")))?;
    if m < DEGENERATE_MASS {
        return Err(Error::DegenerateMeasure {
            cylinder: w.to_signed(),
            mass: m,
        });
    }
    Ok(m)
}

/// `T_n(a)`, the sum over depth-`n` cylinders of the `nu`-average of `a`.
/// From the symbol's depth on, `a` is constant on cylinders and this is a
/// pure count.
pub fn cylinder_average_sum(a: &Symbol, nu: &PulledBackMeasure, n: usize) -> Result<f64> {
    let g = genus_of(nu);
    if n >= a.depth() {
        let q = (2 * g - 1) as f64;
        return Ok(a
            .terms
            .iter()
            .map(|(c, u)| {
                let count = if u.is_empty() {
                    filtration_dim(g, n) as f64
                } else {
                    q.powi((n - u.len()) as i32)
                };
                c * count
            })
            .sum());
    }
    let mut total = 0.0;
    for w in ReducedWord::all_of_length(g, n) {
        let mw = checked_mass(nu, &w)?;
        let mut integral = 0.0;
        for (c, u) in &a.terms {
            if u.starts_with(&w) {
                integral += c * checked_mass(nu, u)?;
            } else if w.starts_with(u) {
                integral += c * mw;
            }
        }
        total += integral / mw;
    }
    Ok(total)
}

/// `c_n(a) = T_n(a) - T_{n-1}(a)` for `n = 0..=depth`.
pub fn detail_coefficients(a: &Symbol, nu: &PulledBackMeasure, depth: usize) -> Result<Vec<f64>> {
    check_depths(a, nu, depth)?;
    let mut out = Vec::with_capacity(depth + 1);
    let mut prev = 0.0;
    for n in 0..=depth {
        let t = cylinder_average_sum(a, nu, n)?;
        out.push(t - prev);
        prev = t;
    }
    Ok(out)
}

/// Same coefficients through an explicit orthonormal basis: cylinder
/// indicators level by level, orthogonalized in `L^2(nu)` (modified
/// Gram-Schmidt with one reorthogonalization pass), with
/// `c_n(a) = sum over new basis vectors psi of <psi, a psi>`.
pub fn detail_coefficients_gram_schmidt(
    a: &Symbol,
    nu: &PulledBackMeasure,
    depth: usize,
) -> Result<Vec<f64>> {
    check_depths(a, nu, depth)?;
    GramSchmidtBasis::new(nu, depth)?.coefficients(a)
}

/// Orthonormal basis of `A_depth` in `L^2(nu)`, grouped by the level at
/// which each vector was added. Vectors are stored by their values on the
/// depth-`depth` atoms.
#[derive(Debug, Clone)]
pub struct GramSchmidtBasis {
    atoms: Vec<ReducedWord>,
    weights: Vec<f64>,
    levels: Vec<Vec<Vec<f64>>>,
}

impl GramSchmidtBasis {
    pub fn new(nu: &PulledBackMeasure, depth: usize) -> Result<Self> {
        if nu.depth() < depth {
            return Err(Error::SymbolTooDeep {
                needed: depth,
                available: nu.depth(),
            });
        }
        let g = genus_of(nu);
        let atoms = ReducedWord::all_of_length(g, depth);
        let weights: Vec<f64> = atoms
            .iter()
            .map(|w| checked_mass(nu, w))
            .collect::<Result<_>>()?;
        let dot = |x: &[f64], y: &[f64]| -> f64 {
            x.iter()
                .zip(y)
                .zip(&weights)
                .map(|((a, b), w)| a * b * w)
                .sum()
        };
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut levels = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            let mut level = Vec::new();
            for w in ReducedWord::all_of_length(g, n) {
                let mut v: Vec<f64> = atoms
                    .iter()
                    .map(|x| if x.starts_with(&w) { 1.0 } else { 0.0 })
                    .collect();
                let original = dot(&v, &v).sqrt();
                for _ in 0..2 {
                    for b in basis.iter().chain(&level) {
                        let p = dot(&v, b);
                        v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= p * bi);
                    }
                }
                let norm = dot(&v, &v).sqrt();
                if norm <= 1e-8 * original {
                    continue;
                }
                v.iter_mut().for_each(|vi| *vi /= norm);
                level.push(v);
            }
            if level.len() as u128 != multiplicity(g, n) {
                return Err(Error::DegenerateMeasure {
                    cylinder: Vec::new(),
                    mass: 0.0,
                });
            }
            basis.extend(level.iter().cloned());
            levels.push(level);
        }
        Ok(Self {
            atoms,
            weights,
            levels,
        })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// `c_n(a)` for `n = 0..=depth`.
    pub fn coefficients(&self, a: &Symbol) -> Result<Vec<f64>> {
        if a.depth() > self.depth() {
            return Err(Error::SymbolTooDeep {
                needed: a.depth(),
                available: self.depth(),
            });
        }
        let values: Vec<f64> = self.atoms.iter().map(|w| a.value_on(w)).collect();
        Ok(self
            .levels
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|psi| {
                        psi.iter()
                            .zip(&values)
                            .zip(&self.weights)
                            .map(|((p, a), w)| p * p * a * w)
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect())
    }
}

/// Detail coefficients of a symbol with the spectral data to evaluate
/// `zeta_a(s) = sum_n lambda_n^s c_n(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaSeries {
    pub g: usize,
    pub coefficients: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub sup_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaValue {
    pub value: f64,
    pub tail_bound: f64,
    /// `value - c_0`, summed directly so that it keeps full relative
    /// precision when it is far below one.
    pub higher_order: f64,
}

/// Upper end (exclusive) of the real half-line where the series converges.
pub const CONVERGENCE_ABSCISSA: f64 = -1.0 / 3.0;

impl ZetaSeries {
    pub fn new(a: &Symbol, nu: &PulledBackMeasure, depth: usize) -> Result<Self> {
        let g = genus_of(nu);
        Ok(Self {
            g,
            coefficients: detail_coefficients(a, nu, depth)?,
            eigenvalues: (0..=depth).map(|n| dirac_eigenvalue(g, n)).collect(),
            sup_abs: a.sup_abs(g),
        })
    }

    /// Series for the unit, which needs no measure.
    pub fn one(g: usize, depth: usize) -> Self {
        Self {
            g,
            coefficients: (0..=depth).map(|n| multiplicity(g, n) as f64).collect(),
            eigenvalues: (0..=depth).map(|n| dirac_eigenvalue(g, n)).collect(),
            sup_abs: 1.0,
        }
    }

    pub fn depth(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, s: f64) -> Result<ZetaValue> {
        if s.is_nan() || s >= CONVERGENCE_ABSCISSA {
            return Err(Error::OutsideConvergence { s });
        }
        let higher_order: f64 = self
            .coefficients
            .iter()
            .zip(&self.eigenvalues)
            .skip(1)
            .map(|(c, l)| c * l.powf(s))
            .sum();
        Ok(ZetaValue {
            value: self.coefficients[0] + higher_order,
            tail_bound: self.sup_abs * spectral_tail(self.g, s, self.depth()),
            higher_order,
        })
    }
}

/// `sum_{n > depth} lambda_n^s (dim A_n - dim A_{n-1})`, in closed form.
pub fn spectral_tail(g: usize, s: f64, depth: usize) -> f64 {
    let q = (2 * g - 1) as f64;
    let r = q.powf(3.0 * s + 1.0);
    // for n >= 2 the n-th term is k r^(n-1)
    let k = (2.0 * g as f64).powf(3.0 * s + 1.0) * (2.0 * g as f64 - 2.0) / q;
    let from_two = k * r / (1.0 - r);
    match depth {
        0 => dirac_eigenvalue(g, 1).powf(s) * q + from_two,
        _ => k * r.powi(depth as i32) / (1.0 - r),
    }
}

/// `zeta_a(s)` from the truncated series at `depth`, with a bound on the
/// omitted tail.
pub fn zeta_eval(a: &Symbol, nu: &PulledBackMeasure, s: f64, depth: usize) -> Result<ZetaValue> {
    ZetaSeries::new(a, nu, depth)?.eval(s)
}

fn pole_check(g: usize, r_minus_one: f64, s: f64) -> Result<()> {
    if r_minus_one.abs() < 1e-14 {
        return Err(Error::Pole { g, s });
    }
    Ok(())
}

/// `zeta_1(s) - 1 = (2g)^(3s) (2g-1) (1 - (2g-1)^(3s-1)) / (1 - (2g-1)^(3s+1))`.
pub fn zeta_one_excess(g: usize, s: f64) -> Result<f64> {
    let q = (2 * g - 1) as f64;
    let denom = -(q.ln() * (3.0 * s + 1.0)).exp_m1();
    pole_check(g, denom, s)?;
    let numer = -(q.ln() * (3.0 * s - 1.0)).exp_m1();
    Ok((2.0 * g as f64).powf(3.0 * s) * q * numer / denom)
}

pub fn zeta_one_closed(g: usize, s: f64) -> Result<f64> {
    Ok(1.0 + zeta_one_excess(g, s)?)
}

/// The closed form on the complex plane (its meromorphic extension).
pub fn zeta_one_closed_complex(g: usize, s: Complex64) -> Result<Complex64> {
    let q = Complex64::new((2 * g - 1) as f64, 0.0);
    let two_g = Complex64::new(2.0 * g as f64, 0.0);
    let denom = Complex64::new(1.0, 0.0) - q.powc(3.0 * s + 1.0);
    if denom.norm() < 1e-14 {
        return Err(Error::Pole { g, s: s.re });
    }
    let numer = Complex64::new(1.0, 0.0) - q.powc(3.0 * s - 1.0);
    Ok(1.0 + two_g.powc(3.0 * s) * q * numer / denom)
}

/// A sample of `zeta_1(s) - 1`. The excess is used instead of `zeta_1(s)`
/// because for `s <= -5` it is far below the resolution of a double next to
/// one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaSample {
    pub s: f64,
    pub excess: f64,
}

pub const GENUS_SEARCH_MAX: usize = 512;
pub const GENUS_WINNER_GATE: f64 = 1e-6;
pub const GENUS_RUNNER_UP_GATE: f64 = 1e-3;

/// Recovers `g` from samples of `zeta_1` by matching the closed form; the
/// deviation is the largest relative error over the samples.
pub fn genus_from_zeta(samples: &[ZetaSample]) -> Result<usize> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    for (i, a) in samples.iter().enumerate() {
        if a.s > -5.0 {
            return Err(Error::InvalidArgument(format!(
                "sample at s = {} > -5",
                a.s
            )));
        }
        if samples[..i].iter().any(|b| b.s == a.s) {
            return Err(Error::InvalidArgument(format!(
                "repeated sample at s = {}",
                a.s
            )));
        }
    }
    let mut scored: Vec<(f64, usize)> = (2..=GENUS_SEARCH_MAX)
        .map(|g| {
            let dev = samples
                .iter()
                .map(|p| match zeta_one_excess(g, p.s) {
                    Ok(model) => ((p.excess - model) / model).abs(),
                    Err(_) => f64::INFINITY,
                })
                .fold(0.0, f64::max);
            (if dev.is_nan() { f64::INFINITY } else { dev }, g)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (best, g) = scored[0];
    let runner_up = scored[1].0;
    if best < GENUS_WINNER_GATE && runner_up > GENUS_RUNNER_UP_GATE {
        Ok(g)
    } else {
        Err(Error::AmbiguousGenus { best, runner_up })
    }
}

/// Terms `(1 + lambda_n^2)^(-1/2) (dim A_n - dim A_{n-1})` of the
/// 1-summability series.
pub fn summability_terms(g: usize, depth: usize) -> Vec<f64> {
    (0..=depth)
        .map(|n| {
            let l = dirac_eigenvalue(g, n);
            multiplicity(g, n) as f64 / (1.0 + l * l).sqrt()
        })
        .collect()
}

pub fn summability_partial_sums(g: usize, depth: usize) -> Vec<f64> {
    summability_terms(g, depth)
        .into_iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect()
}

/// Indicators of the first-letter cylinders, in rank order.
pub fn letter_indicators(g: usize) -> Vec<Symbol> {
    Letter::alphabet(g)
        .map(|l| Symbol::indicator(ReducedWord::new(vec![l]).expect("single letter")))
        .collect()
}
