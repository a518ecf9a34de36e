//! Multi-index combinatorics and the exact linear transforms between the
//! three coefficient systems of a diagonal operator.
//!
//! A diagonal operator T (one with Tx^α = t_α x^α) can be written three ways:
//! by its eigenvalues t_α, as T = Σ (c_α/α!)·x^α·∂^α, or as
//! T = Σ (d_α/α!)·(x∂)^α. The conversions are triangular sums built from
//! multivariate binomials and Stirling numbers:
//!
//!   t_α = Σ_{β⪯α} binom(α,β)·c_β               c_α = Σ_{β⪯α} (−1)^{|α−β|}·binom(α,β)·t_β
//!   t_α = Σ_β (α^β/β!)·d_β                      c_α = Σ_{β⪰α} (α!/β!)·S₂(β,α)·d_β
//!   d_α = Σ_{β⪰α} (−1)^{|β−α|}·(α!/β!)·s₁(β,α)·c_β
//!
//! with s₁ the *unsigned* Stirling numbers of the first kind; all signs are
//! explicit. The d-direction is an infinite series in general: it is only
//! summed exactly for finitely supported input, otherwise the result is a
//! truncation tagged [`Exactness::Partial`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;
use std::sync::{LazyLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};

/// Exponent vector α ∈ ℕ₀ⁿ, ordered by total degree then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> MultiIndex {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> MultiIndex {
        MultiIndex(vec![0; n])
    }

    /// The i-th standard basis index e_i.
    pub fn unit(n: usize, i: usize) -> MultiIndex {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// |α| = Σ α_i.
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// α! = Π α_i!.
    pub fn factorial(&self) -> BigInt {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// Componentwise β ⪯ α test (self ⪯ other).
    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise subtraction; `None` if any coordinate underflows.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dim() != other.dim() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<u32>>>()
            .map(MultiIndex)
    }

    /// Π point_iᵃⁱ. Panics if `point.len() != dim()`.
    pub fn monomial_at(&self, point: &[Scalar], mode: Mode) -> Scalar {
        assert_eq!(point.len(), self.dim(), "point dimension mismatch");
        let mut acc = Scalar::one(mode);
        for (x, &a) in point.iter().zip(&self.0) {
            if a > 0 {
                acc = acc * x.pow(a);
            }
        }
        acc
    }

    /// All β with β ⪯ α, in graded-lex order.
    pub fn dominated(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.dim()];
        loop {
            out.push(MultiIndex(cur.clone()));
            // odometer over the box [0, α]
            let mut i = 0;
            loop {
                if i == self.dim() {
                    out.sort();
                    return out;
                }
                if cur[i] < self.0[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }
}

impl Add<&MultiIndex> for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim(), rhs.dim(), "multi-index dimension mismatch");
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// All α ∈ ℕ₀ⁿ with |α| ≤ degree, in graded-lex order.
pub fn indices_up_to(n: usize, degree: u32) -> Vec<MultiIndex> {
    assert!(n >= 1, "need at least one variable");
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    for d in 0..=degree {
        compositions(d, n, &mut prefix, &mut out);
    }
    out
}

fn compositions(d: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if slots == 1 {
        prefix.push(d);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in 0..=d {
        prefix.push(first);
        compositions(d - first, slots - 1, prefix, out);
        prefix.pop();
    }
}

pub fn factorial(k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= i;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableKind {
    Binomial,
    Stirling1Unsigned,
    Stirling2,
}

/// Dense triangle of one of the classical recurrences, built row by row.
/// Entries with k > n are zero and not stored.
#[derive(Clone, Debug)]
pub struct TriangularTable {
    kind: TableKind,
    rows: Vec<Vec<BigInt>>,
}

impl TriangularTable {
    pub fn new(kind: TableKind) -> TriangularTable {
        TriangularTable {
            kind,
            rows: vec![vec![BigInt::one()]],
        }
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn rows_built(&self) -> u32 {
        self.rows.len() as u32 - 1
    }

    pub fn ensure_rows(&mut self, n: u32) {
        while self.rows_built() < n {
            let m = self.rows.len(); // building row m from row m−1
            let prev = &self.rows[m - 1];
            let mut row = vec![BigInt::zero(); m + 1];
            for k in 0..=m {
                let from_left = if k >= 1 { prev.get(k - 1) } else { None };
                let above = prev.get(k);
                let mut v = from_left.cloned().unwrap_or_else(BigInt::zero);
                if let Some(a) = above {
                    match self.kind {
                        TableKind::Binomial => v += a,
                        TableKind::Stirling1Unsigned => v += a * (m as u64 - 1),
                        TableKind::Stirling2 => v += a * (k as u64),
                    }
                }
                row[k] = v;
            }
            self.rows.push(row);
        }
    }

    /// Table entry, extending rows as needed. Zero when k > n.
    pub fn value(&mut self, n: u32, k: u32) -> BigInt {
        if k > n {
            return BigInt::zero();
        }
        self.ensure_rows(n);
        self.rows[n as usize][k as usize].clone()
    }
}

static BINOMIAL: LazyLock<RwLock<TriangularTable>> =
    LazyLock::new(|| RwLock::new(TriangularTable::new(TableKind::Binomial)));
static STIRLING1: LazyLock<RwLock<TriangularTable>> =
    LazyLock::new(|| RwLock::new(TriangularTable::new(TableKind::Stirling1Unsigned)));
static STIRLING2: LazyLock<RwLock<TriangularTable>> =
    LazyLock::new(|| RwLock::new(TriangularTable::new(TableKind::Stirling2)));

fn shared_value(table: &RwLock<TriangularTable>, n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    {
        let t = table.read().unwrap();
        if t.rows_built() >= n {
            return t.rows[n as usize][k as usize].clone();
        }
    }
    table.write().unwrap().value(n, k)
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    shared_value(&BINOMIAL, n, k)
}

/// Unsigned Stirling numbers of the first kind s₁(n,k).
pub fn stirling1_unsigned(n: u32, k: u32) -> BigInt {
    shared_value(&STIRLING1, n, k)
}

/// Stirling numbers of the second kind S₂(n,k).
pub fn stirling2(n: u32, k: u32) -> BigInt {
    shared_value(&STIRLING2, n, k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StirlingKind {
    FirstUnsigned,
    Second,
}

/// binom(α,β) = Π binom(α_i,β_i); zero unless β ⪯ α.
pub fn multi_binomial(alpha: &MultiIndex, beta: &MultiIndex) -> Result<BigInt> {
    if alpha.dim() != beta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "multi_binomial on {} vs {}",
            alpha, beta
        )));
    }
    let mut acc = BigInt::one();
    for i in 0..alpha.dim() {
        if beta.get(i) > alpha.get(i) {
            return Ok(BigInt::zero());
        }
        acc *= binomial(alpha.get(i), beta.get(i));
    }
    Ok(acc)
}

/// Coordinatewise product of univariate Stirling numbers; zero unless β ⪯ α.
pub fn multi_stirling(kind: StirlingKind, alpha: &MultiIndex, beta: &MultiIndex) -> Result<BigInt> {
    if alpha.dim() != beta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "multi_stirling on {} vs {}",
            alpha, beta
        )));
    }
    let mut acc = BigInt::one();
    for i in 0..alpha.dim() {
        let v = match kind {
            StirlingKind::FirstUnsigned => stirling1_unsigned(alpha.get(i), beta.get(i)),
            StirlingKind::Second => stirling2(alpha.get(i), beta.get(i)),
        };
        if v.is_zero() {
            return Ok(BigInt::zero());
        }
        acc *= v;
    }
    Ok(acc)
}

/// Whether a converted coefficient sequence is the exact value or a
/// truncation of a (possibly divergent) series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    Partial,
}

/// Coefficients of a diagonal operator in one representation, stored densely
/// on the window |α| ≤ degree. `finite_support` asserts the underlying
/// infinite sequence vanishes beyond the window (required for the d-input
/// transforms, whose defining series are otherwise infinite).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSeq {
    n: usize,
    degree: u32,
    mode: Mode,
    values: BTreeMap<MultiIndex, Scalar>,
    finite_support: bool,
}

impl CoefficientSeq {
    fn build(
        n: usize,
        degree: u32,
        mode: Mode,
        entries: impl IntoIterator<Item = (MultiIndex, Scalar)>,
        finite_support: bool,
    ) -> Result<CoefficientSeq> {
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
        Ok(CoefficientSeq {
            n,
            degree,
            mode,
            values,
            finite_support,
        })
    }

    /// Dense window; nothing is claimed about entries beyond `degree`.
    pub fn truncated(
        n: usize,
        degree: u32,
        mode: Mode,
        entries: impl IntoIterator<Item = (MultiIndex, Scalar)>,
    ) -> Result<CoefficientSeq> {
        Self::build(n, degree, mode, entries, false)
    }

    /// Dense window with the promise that every entry beyond it is zero.
    pub fn finitely_supported(
        n: usize,
        degree: u32,
        mode: Mode,
        entries: impl IntoIterator<Item = (MultiIndex, Scalar)>,
    ) -> Result<CoefficientSeq> {
        Self::build(n, degree, mode, entries, true)
    }

    pub fn from_fn(
        n: usize,
        degree: u32,
        mode: Mode,
        mut f: impl FnMut(&MultiIndex) -> Scalar,
    ) -> Result<CoefficientSeq> {
        let entries: Vec<_> = indices_up_to(n, degree)
            .into_iter()
            .map(|a| {
                let v = f(&a);
                (a, v)
            })
            .collect();
        Self::build(n, degree, mode, entries, false)
    }

    /// Caller-supplied promise that the window contains the whole support.
    pub fn assume_finite_support(mut self) -> CoefficientSeq {
        self.finite_support = true;
        self
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

    pub fn is_finitely_supported(&self) -> bool {
        self.finite_support
    }

    /// Largest |α| with a nonzero entry (0 for the zero sequence).
    pub fn support_degree(&self) -> u32 {
        self.values
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(a, _)| a.total_degree())
            .max()
            .unwrap_or(0)
    }

    /// Value at α. Beyond the window this is zero for finitely supported
    /// sequences and an error otherwise.
    pub fn value_at(&self, alpha: &MultiIndex) -> Result<Scalar> {
        if alpha.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "index {} in a {}-variable sequence",
                alpha, self.n
            )));
        }
        match self.values.get(alpha) {
            Some(v) => Ok(v.clone()),
            None if self.finite_support => Ok(Scalar::zero(self.mode)),
            None => Err(Error::DegreeInsufficient(format!(
                "index {} outside window degree {}",
                alpha, self.degree
            ))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.values.iter()
    }

    /// Nonzero entries only.
    pub fn support(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.values.iter().filter(|(_, v)| !v.is_zero())
    }

    /// Restriction to a smaller window.
    pub fn restrict(&self, degree: u32) -> Result<CoefficientSeq> {
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
        Self::build(
            self.n,
            degree,
            self.mode,
            entries,
            self.finite_support && self.support_degree() <= degree,
        )
    }
}

fn ratio_scalar(p: BigInt, q: BigInt, mode: Mode) -> Scalar {
    match mode {
        Mode::Rational => Scalar::Rational(BigRational::new(p, q)),
        Mode::Float => Scalar::Float(p.to_f64().unwrap_or(f64::NAN) / q.to_f64().unwrap_or(f64::NAN)),
    }
}

fn require_window(s: &CoefficientSeq, degree: u32, what: &str) -> Result<()> {
    if !s.is_finitely_supported() && s.degree() < degree {
        return Err(Error::DegreeInsufficient(format!(
            "{} needs input through degree {}, window is {}",
            what,
            degree,
            s.degree()
        )));
    }
    Ok(())
}

/// Eigenvalues from x^α∂^α-coefficients: t_α = Σ_{β⪯α} binom(α,β)·c_β.
pub fn t_from_c(c: &CoefficientSeq, degree: u32) -> Result<CoefficientSeq> {
    require_window(c, degree, "t_from_c")?;
    CoefficientSeq::from_fn(c.n(), degree, c.mode(), |alpha| {
        let mut acc = Scalar::zero(c.mode());
        for beta in alpha.dominated() {
            let w = multi_binomial(alpha, &beta).expect("same dims");
            let cb = c.value_at(&beta).expect("within window");
            acc = acc + Scalar::from_bigint(&w, c.mode()) * cb;
        }
        acc
    })
}

/// Inverse of [`t_from_c`]: c_α = Σ_{β⪯α} (−1)^{|α−β|}·binom(α,β)·t_β.
pub fn c_from_t(t: &CoefficientSeq, degree: u32) -> Result<CoefficientSeq> {
    require_window(t, degree, "c_from_t")?;
    CoefficientSeq::from_fn(t.n(), degree, t.mode(), |alpha| {
        let mut acc = Scalar::zero(t.mode());
        for beta in alpha.dominated() {
            let mut w = multi_binomial(alpha, &beta).expect("same dims");
            if (alpha.total_degree() - beta.total_degree()) % 2 == 1 {
                w = -w;
            }
            let tb = t.value_at(&beta).expect("within window");
            acc = acc + Scalar::from_bigint(&w, t.mode()) * tb;
        }
        acc
    })
}

/// Eigenvalues from (x∂)^α-coefficients: t_α = Σ_β (α^β/β!)·d_β.
/// The series runs over all β, so d must be finitely supported.
pub fn t_from_d(d: &CoefficientSeq, degree: u32) -> Result<CoefficientSeq> {
    if !d.is_finitely_supported() {
        return Err(Error::NotFinitelySupported(
            "t_from_d sums an infinite series unless d is finitely supported".into(),
        ));
    }
    let terms: Vec<(MultiIndex, Scalar)> = d.support().map(|(a, v)| (a.clone(), v.clone())).collect();
    CoefficientSeq::from_fn(d.n(), degree, d.mode(), |alpha| {
        let mut acc = Scalar::zero(d.mode());
        for (beta, db) in &terms {
            let mut p = BigInt::one();
            for i in 0..alpha.dim() {
                p *= BigInt::from(alpha.get(i)).pow(beta.get(i));
            }
            acc = acc + ratio_scalar(p, beta.factorial(), d.mode()) * db.clone();
        }
        acc
    })
}

/// x^α∂^α-coefficients from (x∂)^α-coefficients:
/// c_α = Σ_{β⪰α} (α!/β!)·S₂(β,α)·d_β. Requires finite support.
pub fn c_from_d(d: &CoefficientSeq, degree: u32) -> Result<CoefficientSeq> {
    if !d.is_finitely_supported() {
        return Err(Error::NotFinitelySupported(
            "c_from_d sums an infinite series unless d is finitely supported".into(),
        ));
    }
    let terms: Vec<(MultiIndex, Scalar)> = d.support().map(|(a, v)| (a.clone(), v.clone())).collect();
    let support_degree = d.support_degree();
    let mut out = CoefficientSeq::from_fn(d.n(), degree, d.mode(), |alpha| {
        let mut acc = Scalar::zero(d.mode());
        for (beta, db) in &terms {
            if !alpha.leq(beta) {
                continue;
            }
            let s = multi_stirling(StirlingKind::Second, beta, alpha).expect("same dims");
            if s.is_zero() {
                continue;
            }
            acc = acc + ratio_scalar(alpha.factorial() * s, beta.factorial(), d.mode()) * db.clone();
        }
        acc
    })?;
    // c_α = 0 whenever |α| exceeds the support of d, so the output is the
    // whole sequence when the window reaches that far.
    if degree >= support_degree {
        out = out.assume_finite_support();
    }
    Ok(out)
}

/// (x∂)^α-coefficients from x^α∂^α-coefficients:
/// d_α = Σ_{β⪰α} (−1)^{|β−α|}·(α!/β!)·s₁(β,α)·c_β.
///
/// The series is truncated at `degree`; the result is [`Exactness::Exact`]
/// only when c is finitely supported within that window (e.g. the evaluation
/// operator c_α = (−1)^{|α|} has no d-representation at all — every partial
/// sum is returned, tagged partial, and diverges as the window grows).
pub fn d_from_c(c: &CoefficientSeq, degree: u32) -> Result<(CoefficientSeq, Exactness)> {
    require_window(c, degree, "d_from_c")?;
    let betas = indices_up_to(c.n(), degree);
    let out = CoefficientSeq::from_fn(c.n(), degree, c.mode(), |alpha| {
        let mut acc = Scalar::zero(c.mode());
        for beta in &betas {
            if !alpha.leq(beta) {
                continue;
            }
            let s = multi_stirling(StirlingKind::FirstUnsigned, beta, alpha).expect("same dims");
            if s.is_zero() {
                continue;
            }
            let mut num = alpha.factorial() * s;
            if (beta.total_degree() - alpha.total_degree()) % 2 == 1 {
                num = -num;
            }
            let cb = c.value_at(beta).expect("within window");
            acc = acc + ratio_scalar(num, beta.factorial(), c.mode()) * cb;
        }
        acc
    })?;
    let exact = c.is_finitely_supported() && c.support_degree() <= degree;
    if exact {
        Ok((out.assume_finite_support(), Exactness::Exact))
    } else {
        Ok((out, Exactness::Partial))
    }
}
