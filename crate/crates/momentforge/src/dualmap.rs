//! General linear maps on moment sequences through their polynomial duals.
//!
//! Every linear map on polynomials is a (possibly infinite) sum
//! T = Σ_α q_α·∂^α; only finite term lists are represented here, which is
//! enough for any bounded-degree input. A map S on sequences is realized
//! exclusively through the duality ⟨Ss, p⟩ = ⟨s, Tp⟩ — coordinatewise,
//! (Ss)_α = L_s(T x^α) — never as a standalone sequence convention.

use std::collections::BTreeMap;

use crate::algebra::MomentSequence;
use crate::combinatorics::{indices_up_to, MultiIndex};
use crate::diagop::Polynomial;
use crate::error::{Error, Result};
use crate::positivity::{
    membership_with_localizers, Cone, MembershipOutcome, MembershipReport, PsdOptions,
};
use crate::scalar::{Mode, Scalar};

/// Finite-term differential operator Σ_α q_α·∂^α.
#[derive(Clone, Debug)]
pub struct DifferentialOperator {
    n: usize,
    mode: Mode,
    terms: BTreeMap<MultiIndex, Polynomial>,
}

impl DifferentialOperator {
    /// At most one term per derivative order; zero polynomials are dropped.
    pub fn new(
        n: usize,
        mode: Mode,
        terms: impl IntoIterator<Item = (MultiIndex, Polynomial)>,
    ) -> Result<DifferentialOperator> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one variable".into()));
        }
        let mut map: BTreeMap<MultiIndex, Polynomial> = BTreeMap::new();
        for (alpha, q) in terms {
            if alpha.dim() != n || q.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "term ∂^{} with a {}-variable coefficient in a {}-variable operator",
                    alpha,
                    q.n(),
                    n
                )));
            }
            if q.mode() != mode {
                return Err(Error::ModeMismatch(format!(
                    "coefficient polynomial of ∂^{alpha} is not {mode}"
                )));
            }
            if q.is_zero() {
                continue;
            }
            if map.insert(alpha.clone(), q).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate term for derivative order {alpha}"
                )));
            }
        }
        Ok(DifferentialOperator { n, mode, terms: map })
    }

    /// The diagonal operator Σ_α (c_α/α!)·x^α∂^α as an explicit term list.
    pub fn from_diagonal_c(c: &crate::combinatorics::CoefficientSeq) -> Result<DifferentialOperator> {
        let terms: Vec<(MultiIndex, Polynomial)> = c
            .support()
            .map(|(alpha, v)| {
                let w = v / Scalar::from_bigint(&alpha.factorial(), c.mode());
                let q = Polynomial::monomial(c.n(), alpha.clone(), w)?;
                Ok((alpha.clone(), q))
            })
            .collect::<Result<_>>()?;
        DifferentialOperator::new(c.n(), c.mode(), terms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Polynomial)> {
        self.terms.iter()
    }

    /// Largest total degree of T x^α over |α| ≤ out_degree — the sequence
    /// window the dual action reads.
    pub fn input_degree_needed(&self, out_degree: u32) -> u32 {
        self.terms
            .iter()
            .map(|(alpha, q)| {
                let gain = q.degree();
                // ∂^α lowers degree by |α| but never below zero
                out_degree.saturating_sub(alpha.total_degree()) + gain
            })
            .max()
            .unwrap_or(0)
    }
}

/// Σ_α q_α·∂^α p, exact in the joined mode.
pub fn apply_diffop(t: &DifferentialOperator, p: &Polynomial) -> Result<Polynomial> {
    if p.n() != t.n() {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable operator applied to a {}-variable polynomial",
            t.n(),
            p.n()
        )));
    }
    let mut acc = Polynomial::zero(t.n(), t.mode().join(p.mode()));
    for (alpha, q) in &t.terms {
        acc = acc.add(&q.mul(&p.derivative(alpha))?)?;
    }
    Ok(acc)
}

/// Riesz pairing ⟨s, p⟩ = L_s(p) = Σ_γ p_γ·s_γ.
pub fn riesz(s: &MomentSequence, p: &Polynomial) -> Result<Scalar> {
    if p.n() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable polynomial paired with a {}-variable sequence",
            p.n(),
            s.n()
        )));
    }
    let mut acc = Scalar::zero(s.mode().join(p.mode()));
    for (gamma, coeff) in p.terms() {
        acc = acc + coeff * s.get(gamma)?;
    }
    Ok(acc)
}

/// Shift operator (M_q s)_α = L_s(q·x^α) = Σ_β q_β·s_{α+β}. The output
/// window is s.degree − deg q; q must fit inside the window.
pub fn shift_apply(q: &Polynomial, s: &MomentSequence) -> Result<MomentSequence> {
    if q.n() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable shift against a {}-variable sequence",
            q.n(),
            s.n()
        )));
    }
    if q.degree() > s.degree() {
        return Err(Error::DegreeInsufficient(format!(
            "shift by degree {} exceeds the window {}",
            q.degree(),
            s.degree()
        )));
    }
    let out_degree = s.degree() - q.degree();
    let mode = s.mode().join(q.mode());
    MomentSequence::from_fn(s.n(), out_degree, mode, |alpha| {
        let mut acc = Scalar::zero(mode);
        for (beta, coeff) in q.terms() {
            acc = acc + coeff * s.get(&(alpha + beta)).expect("window checked");
        }
        acc
    })
}

/// Dual action (Ss)_α = L_s(T x^α) for |α| ≤ out_degree. Requires s to be
/// defined wherever some T x^α reaches.
pub fn dual_apply(
    t: &DifferentialOperator,
    s: &MomentSequence,
    out_degree: u32,
) -> Result<MomentSequence> {
    if t.n() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable operator against a {}-variable sequence",
            t.n(),
            s.n()
        )));
    }
    let needed = t.input_degree_needed(out_degree);
    if s.degree() < needed {
        return Err(Error::DegreeInsufficient(format!(
            "dual action to degree {} reads moments through degree {}, window is {}",
            out_degree,
            needed,
            s.degree()
        )));
    }
    let mode = s.mode().join(t.mode());
    let mut entries = Vec::new();
    for alpha in indices_up_to(s.n(), out_degree) {
        let xa = Polynomial::monomial(s.n(), alpha.clone(), Scalar::one(t.mode()))?;
        let image = apply_diffop(t, &xa)?;
        let v = riesz(s, &image)?.into_mode(mode)?;
        entries.push((alpha, v));
    }
    MomentSequence::new(s.n(), out_degree, mode, entries)
}

#[derive(Clone, Debug)]
pub struct SampleReport {
    pub y: Vec<Scalar>,
    pub membership: MembershipReport,
}

#[derive(Clone, Debug)]
pub struct KMomentReport {
    pub degree: u32,
    pub cone: Cone,
    pub samples: Vec<SampleReport>,
    /// Aggregate over samples. A pass is sampled evidence only — the
    /// underlying condition quantifies over every y in the cone.
    pub outcome: MembershipOutcome,
}

/// Finite-level test of the K-moment preservation condition: for each
/// sample y ∈ K, the sequence u_α = α!·q_α(y) (zero off the term set) must
/// look like a (K−y)-moment sequence. FullSpace is shift-invariant; for the
/// nonnegative orthant the shifted cone is cut out by g_i = x_i + y_i.
/// NECESSARY-ONLY at every level: passes are evidence, refutations final.
pub fn k_moment_preservation_check(
    t: &DifferentialOperator,
    y_samples: &[Vec<Scalar>],
    d: u32,
    cone: Cone,
    opts: &PsdOptions,
) -> Result<KMomentReport> {
    let max_term_degree = t
        .terms
        .keys()
        .map(MultiIndex::total_degree)
        .max()
        .unwrap_or(0);
    let cone_degree = match cone {
        Cone::FullSpace => 0,
        Cone::NonnegOrthant => 1,
    };
    let window = (2 * d + cone_degree).max(max_term_degree);
    let mut samples = Vec::with_capacity(y_samples.len());
    for y in y_samples {
        if y.len() != t.n() {
            return Err(Error::DimensionMismatch(format!(
                "sample with {} coordinates in {} variables",
                y.len(),
                t.n()
            )));
        }
        if cone == Cone::NonnegOrthant {
            if let Some(bad) = y.iter().find(|v| v.is_negative()) {
                return Err(Error::OutsideCone(format!(
                    "sample coordinate {bad} lies outside the nonnegative orthant"
                )));
            }
        }
        let mode = y.iter().fold(t.mode(), |m, v| m.join(v.mode()));
        let mut entries = Vec::new();
        for (alpha, q) in &t.terms {
            let u = Scalar::from_bigint(&alpha.factorial(), mode) * q.eval(y)?;
            entries.push((alpha.clone(), u.into_mode(mode)?));
        }
        let s = MomentSequence::new(t.n(), window, mode, entries)?;
        let localizers: Vec<(String, Polynomial)> = match cone {
            Cone::FullSpace => Vec::new(),
            Cone::NonnegOrthant => (0..t.n())
                .map(|i| {
                    let g = Polynomial::from_terms(
                        t.n(),
                        mode,
                        [
                            (MultiIndex::unit(t.n(), i), Scalar::one(mode)),
                            (MultiIndex::zero(t.n()), y[i].clone().into_mode(mode)?),
                        ],
                    )?;
                    Ok((format!("x_{i} + {}", y[i]), g))
                })
                .collect::<Result<_>>()?,
        };
        let membership = membership_with_localizers(&s, d, cone, &localizers, opts)?;
        samples.push(SampleReport {
            y: y.clone(),
            membership,
        });
    }
    let outcome = samples.iter().map(|r| r.membership.outcome).fold(
        MembershipOutcome::PassedNecessaryOnly,
        |acc, o| match (acc, o) {
            (MembershipOutcome::Refuted, _) | (_, MembershipOutcome::Refuted) => {
                MembershipOutcome::Refuted
            }
            (MembershipOutcome::Inconclusive, _) | (_, MembershipOutcome::Inconclusive) => {
                MembershipOutcome::Inconclusive
            }
            _ => MembershipOutcome::PassedNecessaryOnly,
        },
    );
    Ok(KMomentReport {
        degree: d,
        cone,
        samples,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{moments, AtomicMeasure};
    use crate::combinatorics::{factorial, t_from_c, CoefficientSeq};
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q)
    }

    fn int(v: i64) -> Scalar {
        Scalar::from_int(v, Mode::Rational)
    }

    fn idx(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn poly(n: usize, terms: &[(&[u32], Scalar)]) -> Polynomial {
        Polynomial::from_terms(
            n,
            Mode::Rational,
            terms.iter().map(|(e, c)| (idx(e), c.clone())),
        )
        .unwrap()
    }

    /// T₀ truncated at degree cap: Σ_k ((−1)^k/k!)·x^k·∂^k.
    fn t0_univariate(cap: u32) -> DifferentialOperator {
        let terms = (0..=cap).map(|k| {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let w = Scalar::Rational(BigRational::new(sign.into(), factorial(k)));
            (idx(&[k]), poly(1, &[(&[k], w)]))
        });
        DifferentialOperator::new(1, Mode::Rational, terms).unwrap()
    }

    #[test]
    fn construction_rejects_bad_terms() {
        let q = poly(1, &[(&[1], int(1))]);
        let dup = DifferentialOperator::new(
            1,
            Mode::Rational,
            [(idx(&[0]), q.clone()), (idx(&[0]), q.clone())],
        );
        assert!(matches!(dup, Err(Error::InvalidInput(_))));
        let wrong_dim = DifferentialOperator::new(2, Mode::Rational, [(idx(&[0, 0]), q)]);
        assert!(matches!(wrong_dim, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn multiplication_and_euler_terms() {
        // T = {(0, q)} is multiplication by q
        let q = poly(1, &[(&[2], int(1)), (&[0], int(1))]); // x² + 1
        let t = DifferentialOperator::new(1, Mode::Rational, [(idx(&[0]), q.clone())]).unwrap();
        let p = poly(1, &[(&[1], int(3))]);
        assert_eq!(apply_diffop(&t, &p).unwrap(), q.mul(&p).unwrap());
        // T = {(1, x)} = x∂ scales x³ to 3x³
        let t = DifferentialOperator::new(
            1,
            Mode::Rational,
            [(idx(&[1]), poly(1, &[(&[1], int(1))]))],
        )
        .unwrap();
        let cube = poly(1, &[(&[3], int(1))]);
        assert_eq!(
            apply_diffop(&t, &cube).unwrap(),
            poly(1, &[(&[3], int(3))])
        );
    }

    #[test]
    fn truncated_evaluation_operator_evaluates_at_zero() {
        let t0 = t0_univariate(6);
        // p(x) = (x − 2)³ = x³ − 6x² + 12x − 8
        let p = poly(
            1,
            &[
                (&[3], int(1)),
                (&[2], int(-6)),
                (&[1], int(12)),
                (&[0], int(-8)),
            ],
        );
        assert_eq!(
            apply_diffop(&t0, &p).unwrap(),
            Polynomial::constant(1, int(-8))
        );
    }

    #[test]
    fn shift_apply_is_the_moment_action_of_reweighting() {
        // q = x on (2^{-k}) shifts the index
        let mu = AtomicMeasure::dirac(vec![rat(1, 2)], Mode::Rational).unwrap();
        let s = moments(&mu, 6);
        let x = poly(1, &[(&[1], int(1))]);
        let shifted = shift_apply(&x, &s).unwrap();
        assert_eq!(shifted.degree(), 5);
        for k in 0..=5u32 {
            assert_eq!(
                *shifted.get(&idx(&[k])).unwrap(),
                *s.get(&idx(&[k + 1])).unwrap()
            );
        }
        // q = 1 leaves the sequence untouched
        let one = Polynomial::constant(1, int(1));
        assert_eq!(shift_apply(&one, &s).unwrap(), s);
        // M_q(moments(μ)) equals the moments of q·dμ for a 2-variable μ
        let mu = AtomicMeasure::new(
            2,
            Mode::Rational,
            [
                (vec![int(2), rat(-1, 2)], rat(1, 3)),
                (vec![int(0), int(1)], int(2)),
            ],
        )
        .unwrap();
        let q = poly(2, &[(&[1, 1], int(3)), (&[0, 0], int(1))]); // 3xy + 1
        let s = moments(&mu, 7);
        let lhs = shift_apply(&q, &s).unwrap();
        let rhs = MomentSequence::from_fn(2, 5, Mode::Rational, |alpha| {
            let mut acc = Scalar::zero(Mode::Rational);
            for atom in mu.atoms() {
                acc = acc
                    + &atom.weight
                        * q.eval(&atom.point).unwrap()
                        * alpha.monomial_at(&atom.point, Mode::Rational);
            }
            acc
        })
        .unwrap();
        assert_eq!(lhs, rhs);
        // composition of shifts is the shift of the product
        let q2 = poly(2, &[(&[1, 0], int(1)), (&[0, 0], int(-1))]); // x − 1
        let both = shift_apply(&q.mul(&q2).unwrap(), &s).unwrap();
        let stepwise = shift_apply(&q, &shift_apply(&q2, &s).unwrap()).unwrap();
        assert_eq!(both, stepwise);
        // window precondition
        let tiny = moments(&mu, 1);
        assert!(matches!(
            shift_apply(&q, &tiny),
            Err(Error::DegreeInsufficient(_))
        ));
    }

    #[test]
    fn dual_action_frozen_examples() {
        let mu = AtomicMeasure::dirac(vec![rat(1, 2)], Mode::Rational).unwrap();
        let s = moments(&mu, 6);
        // identity term: s comes back (restricted)
        let id = DifferentialOperator::new(
            1,
            Mode::Rational,
            [(idx(&[0]), Polynomial::constant(1, int(1)))],
        )
        .unwrap();
        let back = dual_apply(&id, &s, 4).unwrap();
        for k in 0..=4u32 {
            assert_eq!(*back.get(&idx(&[k])).unwrap(), *s.get(&idx(&[k])).unwrap());
        }
        // multiplication term agrees with shift_apply
        let q = poly(1, &[(&[2], int(1)), (&[0], int(5))]);
        let m = DifferentialOperator::new(1, Mode::Rational, [(idx(&[0]), q.clone())]).unwrap();
        let via_dual = dual_apply(&m, &s, 4).unwrap();
        let via_shift = shift_apply(&q, &s).unwrap();
        assert_eq!(via_dual, via_shift);
        // pure ∂: (Ss)_k = k·s_{k−1}
        let dt = DifferentialOperator::new(
            1,
            Mode::Rational,
            [(idx(&[1]), Polynomial::constant(1, int(1)))],
        )
        .unwrap();
        let ds = dual_apply(&dt, &s, 5).unwrap();
        assert!(ds.get(&idx(&[0])).unwrap().is_zero());
        for k in 1..=5u32 {
            assert_eq!(
                *ds.get(&idx(&[k])).unwrap(),
                Scalar::from_int(i64::from(k), Mode::Rational) * s.get(&idx(&[k - 1])).unwrap()
            );
        }
        // insufficient window errors
        assert!(matches!(
            dual_apply(&m, &s, 6),
            Err(Error::DegreeInsufficient(_))
        ));
    }

    struct XorShift(u64);

    impl XorShift {
        fn next(&mut self) -> u64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            self.0
        }

        fn rat(&mut self) -> Scalar {
            let p = (self.next() % 11) as i64 - 5;
            let q = (self.next() % 4) as i64 + 1;
            rat(p, q)
        }
    }

    #[test]
    fn duality_identity_holds_exactly() {
        let mut rng = XorShift(0xabcd_ef01_2345_6789);
        for trial in 0..12 {
            // random sequence on a wide window
            let s = MomentSequence::from_fn(2, 8, Mode::Rational, |_| rng.rat()).unwrap();
            // random operator with two terms, |α| ≤ 2, deg q ≤ 2
            let alphas = [idx(&[1, 0]), idx(&[0, 2])];
            let terms: Vec<(MultiIndex, Polynomial)> = alphas
                .iter()
                .map(|a| {
                    let q = Polynomial::from_terms(
                        2,
                        Mode::Rational,
                        indices_up_to(2, 2).into_iter().map(|g| (g, rng.rat())),
                    )
                    .unwrap();
                    (a.clone(), q)
                })
                .collect();
            let t = DifferentialOperator::new(2, Mode::Rational, terms).unwrap();
            // random polynomial of degree ≤ 3
            let p = Polynomial::from_terms(
                2,
                Mode::Rational,
                indices_up_to(2, 3).into_iter().map(|g| (g, rng.rat())),
            )
            .unwrap();
            let lhs = riesz(&dual_apply(&t, &s, 3).unwrap(), &p).unwrap();
            let rhs = riesz(&s, &apply_diffop(&t, &p).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "trial {trial}");
        }
    }

    #[test]
    fn diagonal_operators_dualize_to_the_hadamard_action() {
        let mut rng = XorShift(0x1357_9bdf_2468_ace0);
        let c = CoefficientSeq::from_fn(2, 3, Mode::Rational, |_| rng.rat()).unwrap();
        let t = DifferentialOperator::from_diagonal_c(&c).unwrap();
        let s = MomentSequence::from_fn(2, 3, Mode::Rational, |_| rng.rat()).unwrap();
        let dual = dual_apply(&t, &s, 3).unwrap();
        let eig = t_from_c(&c, 3).unwrap();
        for (alpha, v) in dual.iter() {
            let expect = eig.value_at(alpha).unwrap() * s.get(alpha).unwrap();
            assert_eq!(*v, expect);
        }
    }

    #[test]
    fn kmoment_check_passes_identity_and_refutes_negative_multipliers() {
        let opts = PsdOptions::default();
        // identity: u = δ_{α,0}, the moment sequence of δ₀ — passes anywhere
        let id = DifferentialOperator::new(
            1,
            Mode::Rational,
            [(idx(&[0]), Polynomial::constant(1, int(1)))],
        )
        .unwrap();
        let samples = vec![vec![int(0)], vec![int(2)], vec![rat(-3, 2)]];
        let r = k_moment_preservation_check(&id, &samples, 1, Cone::FullSpace, &opts).unwrap();
        assert_eq!(r.outcome, MembershipOutcome::PassedNecessaryOnly);
        assert_eq!(r.samples.len(), 3);
        // M_q with q = x² + 1 > 0: passes; q = −1: the 1×1 Hankel refutes
        let qpos = poly(1, &[(&[2], int(1)), (&[0], int(1))]);
        let mq = DifferentialOperator::new(1, Mode::Rational, [(idx(&[0]), qpos)]).unwrap();
        let r = k_moment_preservation_check(&mq, &samples, 1, Cone::FullSpace, &opts).unwrap();
        assert_eq!(r.outcome, MembershipOutcome::PassedNecessaryOnly);
        let neg = DifferentialOperator::new(
            1,
            Mode::Rational,
            [(idx(&[0]), Polynomial::constant(1, int(-1)))],
        )
        .unwrap();
        let r = k_moment_preservation_check(&neg, &samples, 1, Cone::FullSpace, &opts).unwrap();
        assert_eq!(r.outcome, MembershipOutcome::Refuted);
        assert!(r.samples[0].membership.hankel.is_not_psd());
    }

    #[test]
    fn kmoment_check_on_evaluation_and_translation_operators() {
        let opts = PsdOptions::default();
        let t0 = t0_univariate(6);
        // at y = 1 the test sequence is ((−1)^k) = moments of δ_{−1}: fine on ℝ
        let r =
            k_moment_preservation_check(&t0, &[vec![int(1)]], 2, Cone::FullSpace, &opts).unwrap();
        assert_eq!(r.outcome, MembershipOutcome::PassedNecessaryOnly);
        // T₀ collapses everything onto δ₀, so it also passes on the orthant —
        // at y = 0 the localizing matrix is identically zero
        let r = k_moment_preservation_check(&t0, &[vec![int(0)]], 1, Cone::NonnegOrthant, &opts)
            .unwrap();
        assert_eq!(r.outcome, MembershipOutcome::PassedNecessaryOnly);
        // the translation Σ_k ((−1)^k/k!)·∂^k (dual: push mass from x to x−1)
        // leaves the orthant: at y = 0 the sequence is ((−1)^k) and the
        // localizer g = x refutes it, since δ_{−1} is not supported on [0,∞)
        let shift = DifferentialOperator::new(
            1,
            Mode::Rational,
            (0..=6u32).map(|k| {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                let w = Scalar::Rational(BigRational::new(sign.into(), factorial(k)));
                (idx(&[k]), Polynomial::constant(1, w))
            }),
        )
        .unwrap();
        let r = k_moment_preservation_check(&shift, &[vec![int(0)]], 1, Cone::NonnegOrthant, &opts)
            .unwrap();
        assert_eq!(r.outcome, MembershipOutcome::Refuted);
        assert!(r.samples[0].membership.hankel.is_psd());
        assert!(r.samples[0].membership.localizing[0].verdict.is_not_psd());
        // at y = 1 the same operator sits on the boundary (δ_{−1} against
        // g = x + 1) and the localizing matrix vanishes: no refutation
        let r = k_moment_preservation_check(&shift, &[vec![int(1)]], 1, Cone::NonnegOrthant, &opts)
            .unwrap();
        assert_eq!(r.outcome, MembershipOutcome::PassedNecessaryOnly);
        // samples must lie in the cone
        assert!(matches!(
            k_moment_preservation_check(&t0, &[vec![int(-1)]], 1, Cone::NonnegOrthant, &opts),
            Err(Error::OutsideCone(_))
        ));
    }
}
