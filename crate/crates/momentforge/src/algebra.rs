//! Atomic measures, their truncated moment sequences, and the convolution /
//! Hadamard algebra connecting them.
//!
//! The central identity: the entrywise (Hadamard) product of two moment
//! sequences is again a moment sequence, represented by the multiplicative
//! convolution of the measures — moments(μ) ⊙ moments(ν) = moments(μ ⊙ ν).
//! Everything here is windowed: a sequence knows nothing beyond its degree.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::combinatorics::{indices_up_to, CoefficientSeq, MultiIndex};
use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};

/// Absolute per-coordinate tolerance for merging float atoms. Rational atoms
/// merge only on exact equality.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// Truncated moment sequence (s_α)_{|α| ≤ degree}, dense on its window.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence {
    n: usize,
    degree: u32,
    mode: Mode,
    values: BTreeMap<MultiIndex, Scalar>,
}

impl MomentSequence {
    pub fn new(
        n: usize,
        degree: u32,
        mode: Mode,
        entries: impl IntoIterator<Item = (MultiIndex, Scalar)>,
    ) -> Result<MomentSequence> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one variable".into()));
        }
        let mut values: BTreeMap<MultiIndex, Scalar> = indices_up_to(n, degree)
            .into_iter()
            .map(|a| (a, Scalar::zero(mode)))
            .collect();
        for (alpha, v) in entries {
            if alpha.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "index {} in a {}-variable sequence",
                    alpha, n
                )));
            }
            if alpha.total_degree() > degree {
                return Err(Error::DegreeInsufficient(format!(
                    "index {} exceeds window degree {}",
                    alpha, degree
                )));
            }
            if v.mode() != mode {
                return Err(Error::ModeMismatch(format!(
                    "{} value at {} in a {} sequence",
                    v.mode(),
                    alpha,
                    mode
                )));
            }
            values.insert(alpha, v);
        }
        Ok(MomentSequence {
            n,
            degree,
            mode,
            values,
        })
    }

    pub fn from_fn(
        n: usize,
        degree: u32,
        mode: Mode,
        mut f: impl FnMut(&MultiIndex) -> Scalar,
    ) -> Result<MomentSequence> {
        let entries: Vec<_> = indices_up_to(n, degree)
            .into_iter()
            .map(|a| {
                let v = f(&a);
                (a, v)
            })
            .collect();
        Self::new(n, degree, mode, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<&Scalar> {
        self.values.get(alpha).ok_or_else(|| {
            Error::DegreeInsufficient(format!(
                "moment {} outside window degree {}",
                alpha, self.degree
            ))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.values.iter()
    }

    pub fn restrict(&self, degree: u32) -> Result<MomentSequence> {
        if degree > self.degree {
            return Err(Error::DegreeInsufficient(format!(
                "cannot widen window {} to {}",
                self.degree, degree
            )));
        }
        let entries: Vec<_> = self
            .values
            .iter()
            .filter(|(a, _)| a.total_degree() <= degree)
            .map(|(a, v)| (a.clone(), v.clone()))
            .collect();
        Self::new(self.n, degree, self.mode, entries)
    }

    /// Same data viewed as operator eigenvalues (a truncated window).
    pub fn into_coefficients(self) -> CoefficientSeq {
        CoefficientSeq::truncated(self.n, self.degree, self.mode, self.values)
            .expect("window already validated")
    }

    pub fn from_coefficients(c: &CoefficientSeq) -> MomentSequence {
        MomentSequence::new(
            c.n(),
            c.degree(),
            c.mode(),
            c.iter().map(|(a, v)| (a.clone(), v.clone())),
        )
        .expect("window already validated")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Vec<Scalar>,
    pub weight: Scalar,
}

/// Finitely supported nonnegative measure Σ w_i·δ_{x_i} in canonical form:
/// atoms sorted lexicographically, duplicates merged (exactly in rational
/// mode, within [`ATOM_MERGE_TOL`] per coordinate in float mode), zero
/// weights dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    n: usize,
    mode: Mode,
    atoms: Vec<Atom>,
}

fn cmp_points(a: &[Scalar], b: &[Scalar]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp_same_mode(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn points_close(a: &[Scalar], b: &[Scalar], mode: Mode) -> bool {
    match mode {
        Mode::Rational => a.iter().zip(b).all(|(x, y)| x == y),
        Mode::Float => a
            .iter()
            .zip(b)
            .all(|(x, y)| (x.to_f64() - y.to_f64()).abs() <= ATOM_MERGE_TOL),
    }
}

impl AtomicMeasure {
    pub fn new(
        n: usize,
        mode: Mode,
        atoms: impl IntoIterator<Item = (Vec<Scalar>, Scalar)>,
    ) -> Result<AtomicMeasure> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one variable".into()));
        }
        let mut raw = Vec::new();
        for (point, weight) in atoms {
            if point.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "atom with {} coordinates in a {}-variable measure",
                    point.len(),
                    n
                )));
            }
            if point.iter().any(|x| x.mode() != mode) || weight.mode() != mode {
                return Err(Error::ModeMismatch(format!(
                    "atom values must all be {mode}"
                )));
            }
            if weight.is_negative() {
                return Err(Error::NegativeWeight(format!(
                    "atom weight {weight} is negative"
                )));
            }
            raw.push(Atom { point, weight });
        }
        Ok(AtomicMeasure {
            n,
            mode,
            atoms: canonicalize(raw, mode),
        })
    }

    pub fn empty(n: usize, mode: Mode) -> AtomicMeasure {
        AtomicMeasure {
            n,
            mode,
            atoms: Vec::new(),
        }
    }

    /// Unit point mass δ_point.
    pub fn dirac(point: Vec<Scalar>, mode: Mode) -> Result<AtomicMeasure> {
        let n = point.len();
        AtomicMeasure::new(n, mode, [(point, Scalar::one(mode))])
    }

    /// δ_𝟙, the unit mass at (1,…,1) — the ⊙-convolution identity.
    pub fn dirac_ones(n: usize, mode: Mode) -> AtomicMeasure {
        AtomicMeasure::dirac(vec![Scalar::one(mode); n], mode).expect("valid by construction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> Scalar {
        let mut acc = Scalar::zero(self.mode);
        for a in &self.atoms {
            acc = acc + a.weight.clone();
        }
        acc
    }

    pub fn scale(&self, w: &Scalar) -> Result<AtomicMeasure> {
        if w.is_negative() {
            return Err(Error::NegativeWeight(format!("scale factor {w}")));
        }
        AtomicMeasure::new(
            self.n,
            self.mode.join(w.mode()),
            self.atoms.iter().map(|a| {
                let point = a
                    .point
                    .iter()
                    .map(|x| x.clone().into_mode(self.mode.join(w.mode())).expect("widening"))
                    .collect();
                (point, &a.weight * w)
            }),
        )
    }

    /// Sum of two measures over the same space.
    pub fn sum(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        check_same_space(self, other)?;
        AtomicMeasure::new(
            self.n,
            self.mode,
            self.atoms
                .iter()
                .chain(&other.atoms)
                .map(|a| (a.point.clone(), a.weight.clone())),
        )
    }
}

fn canonicalize(mut raw: Vec<Atom>, mode: Mode) -> Vec<Atom> {
    raw.retain(|a| !a.weight.is_zero());
    raw.sort_by(|a, b| cmp_points(&a.point, &b.point));
    let mut merged: Vec<Atom> = Vec::with_capacity(raw.len());
    'next: for atom in raw {
        // scan back while the leading coordinate is still within tolerance
        for m in merged.iter_mut().rev() {
            if mode == Mode::Float
                && (m.point[0].to_f64() - atom.point[0].to_f64()).abs() > ATOM_MERGE_TOL
            {
                break;
            }
            if points_close(&m.point, &atom.point, mode) {
                m.weight = &m.weight + &atom.weight;
                continue 'next;
            }
            if mode == Mode::Rational {
                break; // exact sort: only the immediate predecessor can match
            }
        }
        merged.push(atom);
    }
    merged.retain(|a| !a.weight.is_zero());
    merged
}

fn check_same_space(a: &AtomicMeasure, b: &AtomicMeasure) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!(
            "measures on {} vs {} variables",
            a.n(),
            b.n()
        )));
    }
    if a.mode() != b.mode() {
        return Err(Error::ModeMismatch(format!(
            "measures in {} vs {} mode",
            a.mode(),
            b.mode()
        )));
    }
    Ok(())
}

/// Truncated moment sequence of μ: s_α = Σ_atoms w·x^α for |α| ≤ degree.
pub fn moments(mu: &AtomicMeasure, degree: u32) -> MomentSequence {
    MomentSequence::from_fn(mu.n(), degree, mu.mode(), |alpha| {
        let mut acc = Scalar::zero(mu.mode());
        for a in mu.atoms() {
            acc = acc + alpha.monomial_at(&a.point, mu.mode()) * a.weight.clone();
        }
        acc
    })
    .expect("valid window")
}

/// Additive convolution μ ∗ ν: atoms add, weights multiply.
pub fn add_convolve(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<AtomicMeasure> {
    check_same_space(mu, nu)?;
    let mode = mu.mode();
    AtomicMeasure::new(
        mu.n(),
        mode,
        mu.atoms().iter().flat_map(|a| {
            nu.atoms().iter().map(move |b| {
                let point: Vec<Scalar> = a
                    .point
                    .iter()
                    .zip(&b.point)
                    .map(|(x, y)| x + y)
                    .collect();
                (point, &a.weight * &b.weight)
            })
        }),
    )
}

/// Multiplicative convolution μ ⊙ ν: atoms multiply componentwise, weights
/// multiply. δ_𝟙 is the identity; δ_0 ⊙ μ = μ(ℝⁿ)·δ_0.
pub fn mult_convolve(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<AtomicMeasure> {
    check_same_space(mu, nu)?;
    let mode = mu.mode();
    AtomicMeasure::new(
        mu.n(),
        mode,
        mu.atoms().iter().flat_map(|a| {
            nu.atoms().iter().map(move |b| {
                let point: Vec<Scalar> = a
                    .point
                    .iter()
                    .zip(&b.point)
                    .map(|(x, y)| x * y)
                    .collect();
                (point, &a.weight * &b.weight)
            })
        }),
    )
}

/// Entrywise (Hadamard) product of two sequences on the same window.
pub fn hadamard(s: &MomentSequence, t: &MomentSequence) -> Result<MomentSequence> {
    if s.n() != t.n() || s.degree() != t.degree() {
        return Err(Error::DimensionMismatch(format!(
            "hadamard windows (n={}, degree={}) vs (n={}, degree={})",
            s.n(),
            s.degree(),
            t.n(),
            t.degree()
        )));
    }
    if s.mode() != t.mode() {
        return Err(Error::ModeMismatch(format!(
            "hadamard in {} vs {} mode",
            s.mode(),
            t.mode()
        )));
    }
    MomentSequence::from_fn(s.n(), s.degree(), s.mode(), |alpha| {
        s.get(alpha).expect("dense") * t.get(alpha).expect("dense")
    })
}

/// Entrywise power t_α ↦ t_α^c for c > 0, the ⊙-divisibility fractional
/// root. Exact for integer c in rational mode; float otherwise.
pub fn entrywise_power(s: &MomentSequence, c: f64) -> Result<MomentSequence> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "entrywise power needs c > 0, got {c}"
        )));
    }
    for (alpha, v) in s.iter() {
        if !v.is_positive() {
            return Err(Error::NonpositiveEntry(format!(
                "entry {v} at {alpha} (all entries must be > 0)"
            )));
        }
    }
    let integral = c.fract() == 0.0 && c <= u32::MAX as f64;
    if integral && s.mode() == Mode::Rational {
        let k = c as u32;
        MomentSequence::from_fn(s.n(), s.degree(), s.mode(), |alpha| {
            s.get(alpha).expect("dense").pow(k)
        })
    } else {
        let out = MomentSequence::from_fn(s.n(), s.degree(), Mode::Float, |alpha| {
            Scalar::Float((c * s.get(alpha).expect("dense").to_f64().ln()).exp())
        })?;
        for (alpha, v) in out.iter() {
            if !v.to_f64().is_finite() {
                return Err(Error::Overflow(format!(
                    "t^{c} overflows at {alpha}"
                )));
            }
        }
        Ok(out)
    }
}

/// Moments of the ⊙-exponential e^{⊙tν}: exactly e^{t·s_α(ν)}. Float mode.
pub fn mult_exponential_moments(nu: &AtomicMeasure, t: f64, degree: u32) -> Result<MomentSequence> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "exponential parameter must be ≥ 0, got {t}"
        )));
    }
    let s = moments(nu, degree);
    MomentSequence::from_fn(nu.n(), degree, Mode::Float, |alpha| {
        Scalar::Float((t * s.get(alpha).expect("dense").to_f64()).exp())
    })
}

/// Truncation of the ⊙-exponential series with an explicit bound on what was
/// dropped.
#[derive(Clone, Debug)]
pub struct TruncatedExpMeasure {
    pub measure: AtomicMeasure,
    /// Highest series order K that was kept.
    pub order: u32,
    /// Total mass of the dropped tail: Σ_{k>K} t^k·M^k/k!, M = ν(ℝⁿ).
    pub tail_mass_bound: f64,
}

/// Partial sum Σ_{k≤K} (t^k/k!)·ν^{⊙k} of e^{⊙tν}, with ν^{⊙0} = δ_𝟙.
/// Exact in rational mode for rational t; the tail bound is always float.
pub fn mult_exponential_measure(
    nu: &AtomicMeasure,
    t: &Scalar,
    order: u32,
) -> Result<TruncatedExpMeasure> {
    if t.is_negative() {
        return Err(Error::InvalidInput(format!(
            "exponential parameter must be ≥ 0, got {t}"
        )));
    }
    let mode = nu.mode().join(t.mode());
    let mut power = AtomicMeasure::dirac_ones(nu.n(), mode);
    let nu = widen_measure(nu, mode)?;
    let mut factor = Scalar::one(mode); // t^k/k!
    let mut acc = power.clone();
    for k in 1..=order {
        power = mult_convolve(&power, &nu)?;
        factor = factor * t.clone().into_mode(mode)? / Scalar::from_int(k as i64, mode);
        acc = acc.sum(&power.scale(&factor)?)?;
    }
    let tm = t.to_f64() * nu.total_mass().to_f64();
    let mut kept = 0.0;
    let mut term = 1.0;
    for k in 0..=order {
        if k > 0 {
            term *= tm / k as f64;
        }
        kept += term;
    }
    let tail = (tm.exp() - kept).max(0.0);
    Ok(TruncatedExpMeasure {
        measure: acc,
        order,
        tail_mass_bound: tail,
    })
}

fn widen_measure(mu: &AtomicMeasure, mode: Mode) -> Result<AtomicMeasure> {
    if mu.mode() == mode {
        return Ok(mu.clone());
    }
    AtomicMeasure::new(
        mu.n(),
        mode,
        mu.atoms().iter().map(|a| {
            (
                a.point
                    .iter()
                    .map(|x| x.clone().into_mode(mode).expect("widening"))
                    .collect(),
                a.weight.clone().into_mode(mode).expect("widening"),
            )
        }),
    )
}

/// Truncated entire series f(z) = Σ_{k≤K} a_k z^k. The `nonneg` flag is a
/// checked promise that every coefficient is ≥ 0, needed when the series is
/// applied to a measure rather than a sequence.
#[derive(Clone, Debug)]
pub struct EntireSeriesTrunc {
    coeffs: Vec<Scalar>,
    mode: Mode,
    nonneg: bool,
}

impl EntireSeriesTrunc {
    pub fn new(coeffs: Vec<Scalar>, mode: Mode, nonneg: bool) -> Result<EntireSeriesTrunc> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("series needs at least a_0".into()));
        }
        if coeffs.iter().any(|c| c.mode() != mode) {
            return Err(Error::ModeMismatch(format!("series coefficients must be {mode}")));
        }
        if nonneg {
            if let Some(bad) = coeffs.iter().find(|c| c.is_negative()) {
                return Err(Error::NegativeWeight(format!(
                    "series flagged nonneg has coefficient {bad}"
                )));
            }
        }
        Ok(EntireSeriesTrunc {
            coeffs,
            mode,
            nonneg,
        })
    }

    /// exp truncated at order K: a_k = 1/k!.
    pub fn exp_truncation(order: u32, mode: Mode) -> EntireSeriesTrunc {
        let mut coeffs = Vec::with_capacity(order as usize + 1);
        let mut c = Scalar::one(mode);
        coeffs.push(c.clone());
        for k in 1..=order {
            c = c / Scalar::from_int(k as i64, mode);
            coeffs.push(c.clone());
        }
        EntireSeriesTrunc {
            coeffs,
            mode,
            nonneg: true,
        }
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn order(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }
}

/// f applied entrywise through the ⊙-structure: (f(⊙s))_α = Σ_k a_k·s_α^k.
pub fn series_apply(f: &EntireSeriesTrunc, s: &MomentSequence) -> Result<MomentSequence> {
    let mode = f.mode().join(s.mode());
    MomentSequence::from_fn(s.n(), s.degree(), mode, |alpha| {
        let x = s.get(alpha).expect("dense").clone().into_mode(mode).expect("widening");
        // Horner on the truncated series
        let mut acc = Scalar::zero(mode);
        for a in f.coeffs().iter().rev() {
            acc = acc * x.clone() + a.clone().into_mode(mode).expect("widening");
        }
        acc
    })
}

/// f applied to the measure: Σ_k a_k·μ^{⊙k} with μ^{⊙0} = δ_𝟙. Needs the
/// nonneg flag, otherwise the result would be a signed measure.
pub fn series_apply_measure(f: &EntireSeriesTrunc, mu: &AtomicMeasure) -> Result<AtomicMeasure> {
    if !f.is_nonneg() {
        return Err(Error::NegativeWeight(
            "series_apply_measure needs nonnegative coefficients".into(),
        ));
    }
    let mode = f.mode().join(mu.mode());
    let mu = widen_measure(mu, mode)?;
    let mut power = AtomicMeasure::dirac_ones(mu.n(), mode);
    let mut acc = AtomicMeasure::empty(mu.n(), mode);
    for (k, a) in f.coeffs().iter().enumerate() {
        if k > 0 {
            power = mult_convolve(&power, &mu)?;
        }
        acc = acc.sum(&power.scale(&a.clone().into_mode(mode)?)?)?;
    }
    Ok(acc)
}

/// Univariate restriction along one coordinate axis: (s_{k·e_axis})_k.
pub fn marginal(s: &MomentSequence, axis: usize) -> Result<MomentSequence> {
    if axis >= s.n() {
        return Err(Error::AxisOutOfRange(format!(
            "axis {} of a {}-variable sequence",
            axis,
            s.n()
        )));
    }
    let n = s.n();
    MomentSequence::from_fn(1, s.degree(), s.mode(), |k| {
        let mut alpha = vec![0u32; n];
        alpha[axis] = k.get(0);
        s.get(&MultiIndex::new(alpha)).expect("dense").clone()
    })
}

/// Coordinatewise logarithm pushforward: atoms x ↦ (ln x_1, …, ln x_n).
/// Requires every atom in the open positive orthant; output is float.
pub fn ln_pushforward(mu: &AtomicMeasure) -> Result<AtomicMeasure> {
    for a in mu.atoms() {
        if let Some(bad) = a.point.iter().find(|x| !x.is_positive()) {
            return Err(Error::NonpositiveEntry(format!(
                "atom coordinate {bad} is not in the open positive orthant"
            )));
        }
    }
    AtomicMeasure::new(
        mu.n(),
        Mode::Float,
        mu.atoms().iter().map(|a| {
            (
                a.point.iter().map(|x| x.ln().expect("checked positive")).collect(),
                Scalar::Float(a.weight.to_f64()),
            )
        }),
    )
}
