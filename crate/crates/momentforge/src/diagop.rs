//! Diagonal operators on polynomials: T x^α = t_α x^α.
//!
//! An operator is held in one of three coefficient systems and converted on
//! demand:
//!  * `EigT` — the eigenvalues t_α themselves;
//!  * `CoefC` — T = Σ_α (c_α/α!)·x^α ∂^α;
//!  * `CoefD` — T = Σ_α (d_α/α!)·(x∂)^α (powers of the coordinatewise Euler
//!    operators x_i ∂_i).
//!
//! The c- and t-systems are in exact bijection on any window. The d-system
//! sums an infinite series: a d-representation is accepted only with finite
//! support, and conversion *into* it can be a partial sum (see
//! [`crate::combinatorics::d_from_c`]).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::One;

use crate::algebra::{ln_pushforward, moments, AtomicMeasure, MomentSequence};
use crate::combinatorics::{
    c_from_d, c_from_t, d_from_c, t_from_c, t_from_d, CoefficientSeq, Exactness, MultiIndex,
};
use crate::error::{Error, Result};
use crate::positivity::{moment_membership_check_with, Cone, MembershipReport, PsdOptions};
use crate::scalar::{Mode, Scalar};

/// Sparse polynomial in n variables; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    mode: Mode,
    terms: BTreeMap<MultiIndex, Scalar>,
}

impl Polynomial {
    pub fn zero(n: usize, mode: Mode) -> Polynomial {
        Polynomial {
            n,
            mode,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, value: Scalar) -> Polynomial {
        let mode = value.mode();
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(MultiIndex::zero(n), value);
        }
        Polynomial { n, mode, terms }
    }

    pub fn monomial(n: usize, alpha: MultiIndex, coeff: Scalar) -> Result<Polynomial> {
        Polynomial::from_terms(n, coeff.mode(), [(alpha, coeff)])
    }

    pub fn from_terms(
        n: usize,
        mode: Mode,
        entries: impl IntoIterator<Item = (MultiIndex, Scalar)>,
    ) -> Result<Polynomial> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one variable".into()));
        }
        let mut terms: BTreeMap<MultiIndex, Scalar> = BTreeMap::new();
        for (alpha, coeff) in entries {
            if alpha.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "term {} in a {}-variable polynomial",
                    alpha, n
                )));
            }
            if coeff.mode() != mode {
                return Err(Error::ModeMismatch(format!(
                    "coefficient {coeff} is not {mode}"
                )));
            }
            let slot = terms.entry(alpha).or_insert_with(|| Scalar::zero(mode));
            *slot = &*slot + coeff;
        }
        terms.retain(|_, v| !v.is_zero());
        Ok(Polynomial { n, mode, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(MultiIndex::total_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Scalar {
        self.terms
            .get(alpha)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.mode))
    }

    pub fn eval(&self, point: &[Scalar]) -> Result<Scalar> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point with {} coordinates for a {}-variable polynomial",
                point.len(),
                self.n
            )));
        }
        let mode = point
            .iter()
            .fold(self.mode, |m, x| m.join(x.mode()));
        let mut acc = Scalar::zero(mode);
        for (alpha, coeff) in &self.terms {
            acc = acc + coeff * alpha.monomial_at(point, mode);
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "adding polynomials in {} and {} variables",
                self.n, other.n
            )));
        }
        let mode = self.mode.join(other.mode);
        let mut terms: BTreeMap<MultiIndex, Scalar> = BTreeMap::new();
        for (a, v) in self.terms.iter().chain(&other.terms) {
            let slot = terms
                .entry(a.clone())
                .or_insert_with(|| Scalar::zero(mode));
            *slot = &*slot + v;
        }
        terms.retain(|_, v| !v.is_zero());
        Ok(Polynomial { n: self.n, mode, terms })
    }

    pub fn scale(&self, factor: &Scalar) -> Polynomial {
        let mode = self.mode.join(factor.mode());
        let mut terms = BTreeMap::new();
        for (a, v) in &self.terms {
            let w = v * factor;
            if !w.is_zero() {
                terms.insert(a.clone(), w);
            }
        }
        Polynomial { n: self.n, mode, terms }
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "multiplying polynomials in {} and {} variables",
                self.n, other.n
            )));
        }
        let mode = self.mode.join(other.mode);
        let mut terms: BTreeMap<MultiIndex, Scalar> = BTreeMap::new();
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                let idx = a + b;
                let slot = terms
                    .entry(idx)
                    .or_insert_with(|| Scalar::zero(mode));
                *slot = &*slot + u * v;
            }
        }
        terms.retain(|_, v| !v.is_zero());
        Ok(Polynomial { n: self.n, mode, terms })
    }

    /// Partial derivative ∂^α: x^γ ↦ γ!/(γ−α)!·x^{γ−α}.
    pub fn derivative(&self, alpha: &MultiIndex) -> Polynomial {
        let mut terms = BTreeMap::new();
        for (gamma, coeff) in &self.terms {
            let Some(rest) = gamma.checked_sub(alpha) else {
                continue;
            };
            let mut falling = BigInt::one();
            for i in 0..self.n {
                for k in 0..alpha.get(i) {
                    falling *= BigInt::from(gamma.get(i) - k);
                }
            }
            let w = coeff * Scalar::from_bigint(&falling, self.mode);
            if !w.is_zero() {
                terms.insert(rest, w);
            }
        }
        Polynomial {
            n: self.n,
            mode: self.mode,
            terms,
        }
    }

    /// Coordinatewise dilation p(a₁x₁, …, aₙxₙ).
    pub fn dilate(&self, point: &[Scalar]) -> Result<Polynomial> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "dilation by {} coordinates in {} variables",
                point.len(),
                self.n
            )));
        }
        let mode = point.iter().fold(self.mode, |m, x| m.join(x.mode()));
        let mut terms = BTreeMap::new();
        for (gamma, coeff) in &self.terms {
            let w = coeff * gamma.monomial_at(point, mode);
            if !w.is_zero() {
                terms.insert(gamma.clone(), w);
            }
        }
        Ok(Polynomial { n: self.n, mode, terms })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    EigT,
    CoefC,
    CoefD,
}

impl std::fmt::Display for Rep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rep::EigT => write!(f, "t"),
            Rep::CoefC => write!(f, "c"),
            Rep::CoefD => write!(f, "d"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    rep: Rep,
    coeffs: CoefficientSeq,
    eig: OnceLock<CoefficientSeq>,
}

impl DiagonalOperator {
    pub fn from_eigenvalues(t: CoefficientSeq) -> DiagonalOperator {
        DiagonalOperator {
            rep: Rep::EigT,
            coeffs: t,
            eig: OnceLock::new(),
        }
    }

    pub fn from_c_coeffs(c: CoefficientSeq) -> DiagonalOperator {
        DiagonalOperator {
            rep: Rep::CoefC,
            coeffs: c,
            eig: OnceLock::new(),
        }
    }

    /// The (x∂)-series runs over all of ℕⁿ; a usable d-representation must
    /// carry the promise of finite support.
    pub fn from_d_coeffs(d: CoefficientSeq) -> Result<DiagonalOperator> {
        if !d.is_finitely_supported() {
            return Err(Error::NotFinitelySupported(
                "d-representation requires finite support".into(),
            ));
        }
        Ok(DiagonalOperator {
            rep: Rep::CoefD,
            coeffs: d,
            eig: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.coeffs.n()
    }

    pub fn mode(&self) -> Mode {
        self.coeffs.mode()
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn coeffs(&self) -> &CoefficientSeq {
        &self.coeffs
    }

    /// Largest eigenvalue window this operator can produce, `None` meaning
    /// any degree.
    pub fn window_cap(&self) -> Option<u32> {
        match self.rep {
            Rep::CoefD => None,
            Rep::EigT | Rep::CoefC => {
                if self.coeffs.is_finitely_supported() {
                    None
                } else {
                    Some(self.coeffs.degree())
                }
            }
        }
    }

    fn native_eig(&self) -> &CoefficientSeq {
        self.eig.get_or_init(|| {
            let deg = self.coeffs.degree();
            match self.rep {
                Rep::EigT => self.coeffs.clone(),
                Rep::CoefC => t_from_c(&self.coeffs, deg).expect("window is native"),
                Rep::CoefD => t_from_d(&self.coeffs, deg).expect("finite support"),
            }
        })
    }

    /// The coefficient window of the *stored* representation at `degree`,
    /// widening only under a finite-support promise.
    fn coeffs_at(&self, degree: u32) -> Result<CoefficientSeq> {
        if degree <= self.coeffs.degree() {
            return self.coeffs.restrict(degree);
        }
        if self.coeffs.is_finitely_supported() {
            let wide = CoefficientSeq::from_fn(self.n(), degree, self.mode(), |a| {
                self.coeffs.value_at(a).expect("finite support")
            })?;
            return Ok(wide.assume_finite_support());
        }
        Err(Error::DegreeInsufficient(format!(
            "operator window is {}, degree {} requested",
            self.coeffs.degree(),
            degree
        )))
    }

    /// Eigenvalues t_α for |α| ≤ degree.
    pub fn eigenvalues(&self, degree: u32) -> Result<CoefficientSeq> {
        let native = self.native_eig();
        if degree <= native.degree() {
            return native.restrict(degree);
        }
        match self.rep {
            Rep::EigT => self.coeffs_at(degree),
            Rep::CoefC => {
                if self.coeffs.is_finitely_supported() {
                    t_from_c(&self.coeffs, degree)
                } else {
                    Err(Error::DegreeInsufficient(format!(
                        "eigenvalues through degree {} need c-coefficients beyond window {}",
                        degree,
                        self.coeffs.degree()
                    )))
                }
            }
            Rep::CoefD => t_from_d(&self.coeffs, degree),
        }
    }

    /// Coefficients of this operator in another representation, on the given
    /// window. The exactness tag is [`Exactness::Partial`] exactly when the
    /// target is the d-system and the c-form is not known to be finitely
    /// supported within the window.
    pub fn convert_coeffs(&self, target: Rep, degree: u32) -> Result<(CoefficientSeq, Exactness)> {
        if target == self.rep {
            return Ok((self.coeffs_at(degree)?, Exactness::Exact));
        }
        match (self.rep, target) {
            (_, Rep::EigT) => Ok((self.eigenvalues(degree)?, Exactness::Exact)),
            (Rep::CoefD, Rep::CoefC) => Ok((c_from_d(&self.coeffs, degree)?, Exactness::Exact)),
            (_, Rep::CoefC) => {
                let t = self.eigenvalues(degree)?;
                Ok((c_from_t(&t, degree)?, Exactness::Exact))
            }
            (Rep::CoefC, Rep::CoefD) => d_from_c(&self.coeffs, degree),
            (_, Rep::CoefD) => {
                let (c, _) = self.convert_coeffs(Rep::CoefC, degree)?;
                d_from_c(&c, degree)
            }
        }
    }

    /// Applies T to a polynomial: each term c·x^γ becomes c·t_γ·x^γ.
    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial> {
        if p.n() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "operator in {} variables applied to a {}-variable polynomial",
                self.n(),
                p.n()
            )));
        }
        let t = self.eigenvalues(p.degree())?;
        let mode = self.mode().join(p.mode());
        let mut terms = BTreeMap::new();
        for (gamma, coeff) in p.terms() {
            let w = coeff * t.value_at(gamma)?;
            if !w.is_zero() {
                terms.insert(gamma.clone(), w);
            }
        }
        Ok(Polynomial {
            n: p.n(),
            mode,
            terms,
        })
    }

    /// T∘S is again diagonal, with eigenvalues t_α·s_α. The result lives on
    /// the widest window both factors support.
    pub fn compose(&self, other: &DiagonalOperator) -> Result<DiagonalOperator> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!(
                "composing operators in {} and {} variables",
                self.n(),
                other.n()
            )));
        }
        let degree = match (self.window_cap(), other.window_cap()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => self.coeffs.degree().max(other.coeffs.degree()),
        };
        let ta = self.eigenvalues(degree)?;
        let tb = other.eigenvalues(degree)?;
        let entries: Vec<(MultiIndex, Scalar)> = ta
            .iter()
            .map(|(a, v)| (a.clone(), v * &tb.value_at(a).expect("same window")))
            .collect();
        let finite = ta.is_finitely_supported() || tb.is_finitely_supported();
        let t = if finite {
            CoefficientSeq::finitely_supported(self.n(), degree, self.mode().join(other.mode()), entries)?
        } else {
            CoefficientSeq::truncated(self.n(), degree, self.mode().join(other.mode()), entries)?
        };
        Ok(DiagonalOperator::from_eigenvalues(t))
    }

    /// exp(T) in the diagonal sense: eigenvalues e^{t_α}. Always float.
    pub fn exp_op(&self) -> Result<DiagonalOperator> {
        let t = self.native_eig();
        let entries: Vec<(MultiIndex, Scalar)> = t
            .iter()
            .map(|(a, v)| (a.clone(), v.exp()))
            .collect();
        if let Some((a, v)) = entries.iter().find(|(_, v)| !v.to_f64().is_finite()) {
            return Err(Error::Overflow(format!(
                "e^t overflows at index {a}: {v}"
            )));
        }
        Ok(DiagonalOperator::from_eigenvalues(CoefficientSeq::truncated(
            self.n(),
            t.degree(),
            Mode::Float,
            entries,
        )?))
    }

    /// log(T) in the diagonal sense: eigenvalues ln t_α; requires t_α > 0.
    pub fn log_op(&self) -> Result<DiagonalOperator> {
        let t = self.native_eig();
        let entries: Vec<(MultiIndex, Scalar)> = t
            .iter()
            .map(|(a, v)| Ok((a.clone(), v.ln()?)))
            .collect::<Result<_>>()?;
        Ok(DiagonalOperator::from_eigenvalues(CoefficientSeq::truncated(
            self.n(),
            t.degree(),
            Mode::Float,
            entries,
        )?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certification {
    /// No certificate supplied; the PSD pass is necessary evidence only.
    NecessaryOnly,
    /// A supplied atomic measure reproduces every eigenvalue on the window.
    CertifiedOnWindow,
    /// A certificate was supplied but does not match the eigenvalues.
    CertificateRejected,
}

impl std::fmt::Display for Certification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Certification::NecessaryOnly => write!(f, "necessary-only"),
            Certification::CertifiedOnWindow => write!(f, "certified-on-window"),
            Certification::CertificateRejected => write!(f, "certificate-rejected"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PreserverReport {
    pub membership: MembershipReport,
    pub certification: Certification,
}

impl DiagonalOperator {
    /// T preserves positivity on the window iff (t_α) is itself a moment
    /// sequence; the finite-level test is the Hankel check at level d, so a
    /// pass is necessary evidence only. A supplied atomic measure whose
    /// moments reproduce the eigenvalues upgrades the verdict to
    /// certified-on-window.
    pub fn preserver_check(
        &self,
        d: u32,
        certificate: Option<&AtomicMeasure>,
        opts: &PsdOptions,
    ) -> Result<PreserverReport> {
        let t = self.eigenvalues(2 * d)?;
        let s = MomentSequence::from_coefficients(&t);
        let membership = moment_membership_check_with(&s, d, Cone::FullSpace, opts)?;
        let certification = match certificate {
            None => Certification::NecessaryOnly,
            Some(mu) => {
                if mu.n() != self.n() {
                    return Err(Error::DimensionMismatch(format!(
                        "certificate in {} variables for an operator in {}",
                        mu.n(),
                        self.n()
                    )));
                }
                let sm = moments(mu, 2 * d);
                let ok = t.iter().all(|(a, v)| {
                    let m = sm.get(a).expect("window matches");
                    match self.mode() {
                        Mode::Rational if mu.mode() == Mode::Rational => v == m,
                        _ => v.close_to(m, 1e-12 * v.to_f64().abs().max(1.0)),
                    }
                });
                if ok {
                    Certification::CertifiedOnWindow
                } else {
                    Certification::CertificateRejected
                }
            }
        };
        Ok(PreserverReport {
            membership,
            certification,
        })
    }
}

/// The integral form of a diagonal operator: (T_μ p)(x) = ∫ p(u⊙x) dμ(u).
/// Its eigenvalues are the moments of μ, so this agrees with
/// [`DiagonalOperator::apply`] for the eigenvalue sequence s_α(μ).
pub fn integral_apply(mu: &AtomicMeasure, p: &Polynomial) -> Result<Polynomial> {
    if mu.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "measure in {} variables applied to a {}-variable polynomial",
            mu.n(),
            p.n()
        )));
    }
    let mut acc = Polynomial::zero(p.n(), p.mode().join(mu.mode()));
    for atom in mu.atoms() {
        acc = acc.add(&p.dilate(&atom.point)?.scale(&atom.weight))?;
    }
    Ok(acc)
}

/// d-coefficients of the integral operator for μ: d_β = ∫ (ln u)^β dμ(u),
/// i.e. the moments of the coordinatewise log-pushforward. Needs every atom
/// in the open positive orthant; the result is float and a truncation — the
/// true d-sequence has infinite support in general, so no finite-support
/// promise is attached.
pub fn d_coeffs_from_measure(mu: &AtomicMeasure, degree: u32) -> Result<CoefficientSeq> {
    let lp = ln_pushforward(mu)?;
    Ok(moments(&lp, degree).into_coefficients())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mode;

    fn rat(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q)
    }

    fn int(v: i64) -> Scalar {
        Scalar::from_int(v, Mode::Rational)
    }

    fn idx(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn poly(n: usize, terms: &[(&[u32], i64)]) -> Polynomial {
        Polynomial::from_terms(
            n,
            Mode::Rational,
            terms.iter().map(|(e, c)| (idx(e), int(*c))),
        )
        .unwrap()
    }

    #[test]
    fn polynomial_arithmetic_and_eval() {
        let p = poly(2, &[(&[1, 0], 1), (&[0, 1], 1)]); // x + y
        let sq = p.mul(&p).unwrap();
        assert_eq!(sq.coeff(&idx(&[2, 0])), int(1));
        assert_eq!(sq.coeff(&idx(&[1, 1])), int(2));
        assert_eq!(sq.coeff(&idx(&[0, 2])), int(1));
        assert_eq!(sq.degree(), 2);
        assert_eq!(sq.eval(&[int(2), int(3)]).unwrap(), int(25));
        // cancellation drops terms
        let q = poly(2, &[(&[1, 0], -1), (&[0, 1], -1)]);
        assert!(p.add(&q).unwrap().is_zero());
        // dilation scales coefficients by monomials of the point
        let d = sq.dilate(&[int(2), int(1)]).unwrap();
        assert_eq!(d.coeff(&idx(&[2, 0])), int(4));
        assert_eq!(d.coeff(&idx(&[1, 1])), int(4));
        assert_eq!(d.coeff(&idx(&[0, 2])), int(1));
    }

    #[test]
    fn derivatives_use_falling_factorials() {
        let p = poly(2, &[(&[2, 1], 1)]); // x²y
        let dxy = p.derivative(&idx(&[1, 1]));
        assert_eq!(dxy.coeff(&idx(&[1, 0])), int(2)); // 2x
        let dxx = p.derivative(&idx(&[2, 0]));
        assert_eq!(dxx.coeff(&idx(&[0, 1])), int(2)); // 2y
        // differentiating past the degree kills everything
        assert!(p.derivative(&idx(&[3, 0])).is_zero());
        let c = poly(1, &[(&[3], 1)]);
        assert_eq!(c.derivative(&idx(&[2])).coeff(&idx(&[1])), int(6));
    }

    #[test]
    fn identity_and_evaluation_operators() {
        let one = CoefficientSeq::from_fn(2, 4, Mode::Rational, |_| int(1)).unwrap();
        let id = DiagonalOperator::from_eigenvalues(one);
        let p = poly(2, &[(&[2, 1], 3), (&[0, 1], -2), (&[0, 0], 7)]);
        assert_eq!(id.apply(&p).unwrap(), p);
        // evaluation at the origin: c_α = (−1)^{|α|}
        let c = CoefficientSeq::from_fn(2, 4, Mode::Rational, |a| {
            if a.total_degree() % 2 == 0 {
                int(1)
            } else {
                int(-1)
            }
        })
        .unwrap();
        let t0 = DiagonalOperator::from_c_coeffs(c);
        let applied = t0.apply(&p).unwrap();
        assert_eq!(applied, Polynomial::constant(2, int(7)));
        // its eigenvalues are the indicator of α = 0
        let t = t0.eigenvalues(3).unwrap();
        assert_eq!(t.value_at(&idx(&[0, 0])).unwrap(), int(1));
        assert_eq!(t.value_at(&idx(&[2, 1])).unwrap(), int(0));
    }

    #[test]
    fn euler_operator_scales_by_exponents() {
        // d = δ_{e₁}: T = x∂, eigenvalues t_k = k
        let d = CoefficientSeq::finitely_supported(1, 1, Mode::Rational, [(idx(&[1]), int(1))])
            .unwrap();
        let op = DiagonalOperator::from_d_coeffs(d).unwrap();
        let t = op.eigenvalues(5).unwrap();
        for k in 0..=5u32 {
            assert_eq!(t.value_at(&idx(&[k])).unwrap(), int(k as i64));
        }
        let p = poly(1, &[(&[2], 3), (&[1], 1), (&[0], 5)]);
        let xp = op.apply(&p).unwrap();
        assert_eq!(xp.coeff(&idx(&[2])), int(6));
        assert_eq!(xp.coeff(&idx(&[1])), int(1));
        assert_eq!(xp.coeff(&idx(&[0])), int(0));
        // a truncated d-window is rejected outright
        let trunc = CoefficientSeq::truncated(1, 1, Mode::Rational, [(idx(&[1]), int(1))]).unwrap();
        assert!(matches!(
            DiagonalOperator::from_d_coeffs(trunc),
            Err(Error::NotFinitelySupported(_))
        ));
    }

    #[test]
    fn exp_of_scaled_euler_is_dilation() {
        // T = t·(x∂) has e^T = dilation by e^t: eigenvalues e^{tk}
        let t = 0.7f64;
        let d = CoefficientSeq::finitely_supported(
            1,
            1,
            Mode::Float,
            [(idx(&[1]), Scalar::Float(t))],
        )
        .unwrap();
        let op = DiagonalOperator::from_d_coeffs(d).unwrap();
        let exp = op.exp_op().unwrap();
        let eig = exp.eigenvalues(1).unwrap();
        assert!((eig.value_at(&idx(&[1])).unwrap().to_f64() - t.exp()).abs() < 1e-12);
        // exp then log round-trips the eigenvalues
        let back = exp.log_op().unwrap().eigenvalues(1).unwrap();
        assert!((back.value_at(&idx(&[1])).unwrap().to_f64() - t).abs() < 1e-12);
        // log of a zero eigenvalue is refused
        let z = CoefficientSeq::from_fn(1, 1, Mode::Rational, |a| {
            if a.total_degree() == 0 {
                int(1)
            } else {
                int(0)
            }
        })
        .unwrap();
        assert!(DiagonalOperator::from_eigenvalues(z).log_op().is_err());
    }

    #[test]
    fn compose_multiplies_eigenvalues() {
        let a = DiagonalOperator::from_eigenvalues(
            CoefficientSeq::from_fn(1, 4, Mode::Rational, |k| int(1 + k.total_degree() as i64))
                .unwrap(),
        );
        let b = DiagonalOperator::from_eigenvalues(
            CoefficientSeq::from_fn(1, 6, Mode::Rational, |k| int(2 * k.total_degree() as i64 - 1))
                .unwrap(),
        );
        let ab = a.compose(&b).unwrap();
        // window is the min of the two caps
        assert_eq!(ab.coeffs().degree(), 4);
        for k in 0..=4u32 {
            assert_eq!(
                ab.eigenvalues(4).unwrap().value_at(&idx(&[k])).unwrap(),
                int((1 + k as i64) * (2 * k as i64 - 1))
            );
        }
        // composing with an unbounded operator keeps the bounded window
        let euler = DiagonalOperator::from_d_coeffs(
            CoefficientSeq::finitely_supported(1, 1, Mode::Rational, [(idx(&[1]), int(1))])
                .unwrap(),
        )
        .unwrap();
        let ae = a.compose(&euler).unwrap();
        assert_eq!(ae.coeffs().degree(), 4);
        assert_eq!(
            ae.eigenvalues(4).unwrap().value_at(&idx(&[3])).unwrap(),
            int(4 * 3)
        );
    }

    #[test]
    fn conversions_round_trip_and_tag_partial_sums() {
        // finite c-support: c ↔ d is exact both ways
        let c = CoefficientSeq::finitely_supported(
            1,
            2,
            Mode::Rational,
            [(idx(&[0]), int(2)), (idx(&[2]), rat(1, 3))],
        )
        .unwrap();
        let op = DiagonalOperator::from_c_coeffs(c.clone());
        let (d, ex) = op.convert_coeffs(Rep::CoefD, 2).unwrap();
        assert_eq!(ex, Exactness::Exact);
        let dop = DiagonalOperator::from_d_coeffs(d).unwrap();
        let (c2, ex2) = dop.convert_coeffs(Rep::CoefC, 2).unwrap();
        assert_eq!(ex2, Exactness::Exact);
        for (a, v) in c.iter() {
            assert_eq!(c2.value_at(a).unwrap(), *v);
        }
        // and the eigenvalues agree along the way
        let ta = op.eigenvalues(2).unwrap();
        let tb = dop.eigenvalues(2).unwrap();
        for (a, v) in ta.iter() {
            assert_eq!(tb.value_at(a).unwrap(), *v);
        }
        // evaluation operator: no d-form, conversions are partial sums
        let c0 = CoefficientSeq::from_fn(1, 4, Mode::Rational, |a| {
            if a.total_degree() % 2 == 0 {
                int(1)
            } else {
                int(-1)
            }
        })
        .unwrap();
        let t0 = DiagonalOperator::from_c_coeffs(c0);
        let (_, ex) = t0.convert_coeffs(Rep::CoefD, 4).unwrap();
        assert_eq!(ex, Exactness::Partial);
        // t-window too small to widen without a finite-support promise
        assert!(t0.convert_coeffs(Rep::EigT, 9).is_err());
    }

    #[test]
    fn integral_form_matches_moment_eigenvalues() {
        let mu = AtomicMeasure::new(
            2,
            Mode::Rational,
            [
                (vec![int(2), rat(1, 2)], rat(1, 3)),
                (vec![int(-1), int(1)], int(2)),
            ],
        )
        .unwrap();
        let p = poly(2, &[(&[2, 1], 1), (&[1, 0], -3), (&[0, 0], 4)]);
        let lhs = integral_apply(&mu, &p).unwrap();
        let t = moments(&mu, p.degree()).into_coefficients();
        let rhs = DiagonalOperator::from_eigenvalues(t).apply(&p).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn preserver_check_reports_all_three_paths() {
        use crate::positivity::MembershipOutcome;
        let mu = AtomicMeasure::dirac(vec![rat(1, 2)], Mode::Rational).unwrap();
        let t = moments(&mu, 4).into_coefficients();
        let op = DiagonalOperator::from_eigenvalues(t);
        let opts = PsdOptions::default();
        let r = op.preserver_check(2, None, &opts).unwrap();
        assert_eq!(r.membership.outcome, MembershipOutcome::PassedNecessaryOnly);
        assert_eq!(r.certification, Certification::NecessaryOnly);
        let r = op.preserver_check(2, Some(&mu), &opts).unwrap();
        assert_eq!(r.certification, Certification::CertifiedOnWindow);
        let wrong = AtomicMeasure::dirac(vec![rat(1, 3)], Mode::Rational).unwrap();
        let r = op.preserver_check(2, Some(&wrong), &opts).unwrap();
        assert_eq!(r.certification, Certification::CertificateRejected);
        // eigenvalues that are not a moment sequence are refuted
        let bad = DiagonalOperator::from_eigenvalues(
            CoefficientSeq::truncated(
                1,
                2,
                Mode::Rational,
                [
                    (idx(&[0]), int(1)),
                    (idx(&[1]), int(2)),
                    (idx(&[2]), int(1)),
                ],
            )
            .unwrap(),
        );
        let r = bad.preserver_check(1, None, &opts).unwrap();
        assert_eq!(r.membership.outcome, MembershipOutcome::Refuted);
    }

    #[test]
    fn d_coefficients_from_a_positive_measure() {
        // μ = δ₂ + δ_{1/2}: d_j = (ln 2)^j + (−ln 2)^j, t_k = 2^k + 2^{−k}
        let mu = AtomicMeasure::new(
            1,
            Mode::Rational,
            [(vec![int(2)], int(1)), (vec![rat(1, 2)], int(1))],
        )
        .unwrap();
        let d = d_coeffs_from_measure(&mu, 40).unwrap();
        assert_eq!(d.mode(), Mode::Float);
        let l2 = std::f64::consts::LN_2;
        assert!((d.value_at(&idx(&[2])).unwrap().to_f64() - 2.0 * l2 * l2).abs() < 1e-12);
        assert!((d.value_at(&idx(&[3])).unwrap().to_f64()).abs() < 1e-12);
        // summing the (truncated) d-series recovers the moments
        let t = t_from_d(&d.assume_finite_support(), 4).unwrap();
        for k in 0..=4i32 {
            let expect = 2f64.powi(k) + 2f64.powi(-k);
            assert!(
                (t.value_at(&idx(&[k as u32])).unwrap().to_f64() - expect).abs() < 1e-10,
                "k = {k}"
            );
        }
        // atoms outside the open positive orthant are refused
        let bad = AtomicMeasure::dirac(vec![int(-1)], Mode::Rational).unwrap();
        assert!(d_coeffs_from_measure(&bad, 3).is_err());
    }

    #[test]
    fn window_preconditions_surface_as_errors() {
        let t = CoefficientSeq::from_fn(1, 2, Mode::Rational, |_| int(1)).unwrap();
        let op = DiagonalOperator::from_eigenvalues(t);
        let p = poly(1, &[(&[3], 1)]);
        assert!(matches!(op.apply(&p), Err(Error::DegreeInsufficient(_))));
        let q = poly(2, &[(&[1, 1], 1)]);
        assert!(matches!(op.apply(&q), Err(Error::DimensionMismatch(_))));
    }
}
