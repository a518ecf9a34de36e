//! Lévy triplets: generator data for diagonal positivity preservers and the
//! moment formula t_α = e^{C_α + I_α} for infinitely ⊙-divisible sequences.
//!
//! A triplet (c₀, b, Σ, ν) encodes the generator
//! A = c₀ + Σᵢ bᵢ·(xᵢ∂ᵢ-part) + quadratic Σ-part + jump integral against ν,
//! whose exponential acts diagonally with eigenvalues e^{C_α + I_α}. All log
//! moments are kept in the triplet's scalar mode (exact when rational);
//! exponentiation happens on demand and is overflow-guarded — the sequences
//! grow like e^{2^k} in the simplest jump examples.

use crate::algebra::{entrywise_power, AtomicMeasure, MomentSequence};
use crate::combinatorics::{t_from_c, CoefficientSeq, MultiIndex};
use crate::error::{Error, Result};
use crate::positivity::{
    is_psd, moment_membership_check_with, Cone, MembershipOutcome, MembershipReport, PsdOptions,
    SymMatrix,
};
use crate::scalar::{Mode, Scalar};

#[derive(Clone, Debug)]
pub struct LevyTriplet {
    n: usize,
    mode: Mode,
    c0: Scalar,
    b: Vec<Scalar>,
    sigma: SymMatrix,
    nu: AtomicMeasure,
}

/// Σᵢ xᵢ² < 1, decided exactly in rational mode (squared norms avoid roots).
fn norm_sq_lt_one(point: &[Scalar], mode: Mode) -> bool {
    let mut s = Scalar::zero(mode);
    for x in point {
        s = s + x * x;
    }
    (Scalar::one(mode) - s).is_positive()
}

impl LevyTriplet {
    /// Validates shape and mode uniformity, Σ ⪰ 0 (a NOT_PSD verdict is
    /// rejected; a float-mode inconclusive verdict is accepted), and
    /// ν({0}) = 0.
    pub fn new(
        c0: Scalar,
        b: Vec<Scalar>,
        sigma: SymMatrix,
        nu: AtomicMeasure,
    ) -> Result<LevyTriplet> {
        let n = b.len();
        if n == 0 {
            return Err(Error::InvalidInput("need at least one variable".into()));
        }
        if sigma.order() != n || nu.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "b has {} entries, sigma order {}, nu dimension {}",
                n,
                sigma.order(),
                nu.n()
            )));
        }
        let mode = c0.mode();
        if b.iter().any(|v| v.mode() != mode) || sigma.mode() != mode || nu.mode() != mode {
            return Err(Error::ModeMismatch(format!(
                "triplet parts must all be {mode}"
            )));
        }
        if is_psd(&sigma).is_not_psd() {
            return Err(Error::NotPsd(
                "sigma must be positive semidefinite".into(),
            ));
        }
        if nu
            .atoms()
            .iter()
            .any(|a| a.point.iter().all(Scalar::is_zero))
        {
            return Err(Error::MassAtOrigin(
                "the Lévy measure must satisfy ν({0}) = 0".into(),
            ));
        }
        Ok(LevyTriplet {
            n,
            mode,
            c0,
            b,
            sigma,
            nu,
        })
    }

    /// The zero triplet: generator 0, moments ≡ 1.
    pub fn empty(n: usize, mode: Mode) -> LevyTriplet {
        let sigma = SymMatrix::new(n, mode, vec![Scalar::zero(mode); n * n])
            .expect("zero matrix is symmetric");
        LevyTriplet::new(
            Scalar::zero(mode),
            vec![Scalar::zero(mode); n],
            sigma,
            AtomicMeasure::empty(n, mode),
        )
        .expect("zero triplet is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn c0(&self) -> &Scalar {
        &self.c0
    }

    pub fn b(&self) -> &[Scalar] {
        &self.b
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn nu(&self) -> &AtomicMeasure {
        &self.nu
    }

    /// The triplet of the scaled generator c·A, c ≥ 0: every part scales
    /// linearly, so log moments are linear in c.
    pub fn scale(&self, c: &Scalar) -> Result<LevyTriplet> {
        if c.is_negative() {
            return Err(Error::InvalidInput(format!(
                "generator scale must be nonnegative, got {c}"
            )));
        }
        let mode = self.mode.join(c.mode());
        let mut entries = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                entries.push((self.sigma.get(i, j) * c).into_mode(mode)?);
            }
        }
        LevyTriplet::new(
            (&self.c0 * c).into_mode(mode)?,
            self.b
                .iter()
                .map(|v| (v * c).into_mode(mode))
                .collect::<Result<_>>()?,
            SymMatrix::new(self.n, mode, entries)?,
            self.nu.scale(c)?,
        )
    }

    /// Drift-and-diffusion part:
    /// C_α = c₀ + Σᵢ αᵢbᵢ + Σ_{i<j} αᵢαⱼσ_{ij} + ½Σᵢ αᵢ(αᵢ−1)σ_{ii}.
    pub fn c_alpha(&self, alpha: &MultiIndex) -> Result<Scalar> {
        if alpha.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "index {} against a {}-variable triplet",
                alpha, self.n
            )));
        }
        let mut acc = self.c0.clone();
        for i in 0..self.n {
            let ai = i64::from(alpha.get(i));
            acc = acc + Scalar::from_int(ai, self.mode) * &self.b[i];
            acc = acc
                + Scalar::from_int(ai * (ai - 1), self.mode)
                    * self.sigma.get(i, i)
                    * Scalar::ratio(1, 2).into_mode(self.mode)?;
            for j in (i + 1)..self.n {
                let aj = i64::from(alpha.get(j));
                acc = acc + Scalar::from_int(ai * aj, self.mode) * self.sigma.get(i, j);
            }
        }
        Ok(acc)
    }

    /// Jump part:
    /// I_α = ∫ (x+𝟙)^α − 1 − Σᵢ αᵢxᵢ·χ_{‖x‖₂<1}(x) dν(x), a finite sum for
    /// atomic ν. The boundary ‖x‖₂ = 1 is excluded from the compensator.
    pub fn i_alpha(&self, alpha: &MultiIndex) -> Result<Scalar> {
        if alpha.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "index {} against a {}-variable triplet",
                alpha, self.n
            )));
        }
        let mut acc = Scalar::zero(self.mode);
        for atom in self.nu.atoms() {
            let mut shifted = Scalar::one(self.mode);
            for i in 0..self.n {
                shifted = shifted * (&atom.point[i] + Scalar::one(self.mode)).pow(alpha.get(i));
            }
            let mut term = shifted - Scalar::one(self.mode);
            if norm_sq_lt_one(&atom.point, self.mode) {
                for i in 0..self.n {
                    term = term
                        - Scalar::from_int(i64::from(alpha.get(i)), self.mode) * &atom.point[i];
                }
            }
            acc = acc + &atom.weight * term;
        }
        Ok(acc)
    }

    /// ln t_α = C_α + I_α.
    pub fn log_moment(&self, alpha: &MultiIndex) -> Result<Scalar> {
        Ok(self.c_alpha(alpha)? + self.i_alpha(alpha)?)
    }

    /// The c-representation of the generator on the window:
    /// c_0 = c₀; c_{e_i} = bᵢ + Σ_{‖x‖₂≥1} w·xᵢ; c at |α| = 2 adds σ to the
    /// full jump moment; c_α = ∫x^α dν for |α| ≥ 3.
    pub fn generator_coeffs(&self, degree: u32) -> Result<CoefficientSeq> {
        let nu_moment = |alpha: &MultiIndex| {
            let mut acc = Scalar::zero(self.mode);
            for atom in self.nu.atoms() {
                acc = acc + &atom.weight * alpha.monomial_at(&atom.point, self.mode);
            }
            acc
        };
        CoefficientSeq::from_fn(self.n, degree, self.mode, |alpha| {
            match alpha.total_degree() {
                0 => self.c0.clone(),
                1 => {
                    let i = (0..self.n).find(|&i| alpha.get(i) == 1).expect("|α| = 1");
                    let mut acc = self.b[i].clone();
                    for atom in self.nu.atoms() {
                        if !norm_sq_lt_one(&atom.point, self.mode) {
                            acc = acc + &atom.weight * &atom.point[i];
                        }
                    }
                    acc
                }
                2 => {
                    let (i, j) = match (0..self.n).find(|&i| alpha.get(i) == 2) {
                        Some(i) => (i, i),
                        None => {
                            let mut it = (0..self.n).filter(|&i| alpha.get(i) == 1);
                            (it.next().expect("|α| = 2"), it.next().expect("|α| = 2"))
                        }
                    };
                    self.sigma.get(i, j) + nu_moment(alpha)
                }
                _ => nu_moment(alpha),
            }
        })
    }

    /// Log moments ln t_α = C_α + I_α on the window, in the triplet's mode.
    pub fn infdiv_log_moments(&self, degree: u32) -> Result<MomentSequence> {
        let mut entries = Vec::new();
        for alpha in crate::combinatorics::indices_up_to(self.n, degree) {
            let v = self.log_moment(&alpha)?;
            entries.push((alpha, v));
        }
        MomentSequence::new(self.n, degree, self.mode, entries)
    }

    /// t_α = e^{C_α + I_α} as floats; errors on overflow rather than
    /// returning infinities.
    pub fn infdiv_moments(&self, degree: u32) -> Result<MomentSequence> {
        let logs = self.infdiv_log_moments(degree)?;
        let mut entries = Vec::new();
        for (alpha, v) in logs.iter() {
            let t = v.exp();
            if !t.to_f64().is_finite() {
                return Err(Error::Overflow(format!(
                    "e^{{{v}}} overflows at index {alpha}"
                )));
            }
            entries.push((alpha.clone(), t));
        }
        MomentSequence::new(self.n, degree, Mode::Float, entries)
    }

    /// Cross-check of the two computation paths: the binomial transform of
    /// the generator coefficients must reproduce the closed-form log
    /// moments, Σ_{β⪯α} binom(α,β)·c_β = C_α + I_α. Exact in rational mode.
    pub fn consistency_check(&self, degree: u32) -> Result<ConsistencyReport> {
        let via_generator = t_from_c(&self.generator_coeffs(degree)?, degree)?;
        let closed_form = self.infdiv_log_moments(degree)?;
        let mut max_dev = 0.0f64;
        for (alpha, v) in closed_form.iter() {
            let g = via_generator.value_at(alpha)?;
            let dev = match self.mode {
                Mode::Rational => {
                    let diff = &g - v;
                    if diff.is_zero() {
                        0.0
                    } else {
                        diff.abs().to_f64()
                    }
                }
                Mode::Float => (g.to_f64() - v.to_f64()).abs(),
            };
            max_dev = max_dev.max(dev);
        }
        Ok(ConsistencyReport {
            degree,
            max_abs_log_deviation: max_dev,
            tol: CONSISTENCY_TOL,
            passed: max_dev <= CONSISTENCY_TOL,
        })
    }
}

/// Absolute log-space tolerance for [`LevyTriplet::consistency_check`].
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct ConsistencyReport {
    pub degree: u32,
    pub max_abs_log_deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Univariate closed form:
/// ln t_k = c + b·k + a·k² + ∫ (x+1)^k − 1 − k·x·χ_{(−1,1)}(x) dν(x),
/// with a ≥ 0 and ν({0}) = 0. Equivalent to the triplet form under
/// σ = 2a, b_triplet = a + b. For ν supported on [0,∞) the compensator
/// indicator coincides with χ_{[0,1)} (the Stieltjes form).
pub fn univariate_log_moment(
    a: &Scalar,
    b: &Scalar,
    c: &Scalar,
    nu: &AtomicMeasure,
    k: u32,
) -> Result<Scalar> {
    if nu.n() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "univariate form against a {}-variable measure",
            nu.n()
        )));
    }
    if a.is_negative() {
        return Err(Error::InvalidInput(format!(
            "the quadratic coefficient must satisfy a ≥ 0, got {a}"
        )));
    }
    if nu.atoms().iter().any(|at| at.point[0].is_zero()) {
        return Err(Error::MassAtOrigin(
            "the Lévy measure must satisfy ν({0}) = 0".into(),
        ));
    }
    let mode = a.mode().join(b.mode()).join(c.mode()).join(nu.mode());
    let kk = Scalar::from_int(i64::from(k), mode);
    let mut acc = c.clone().into_mode(mode)? + b * &kk + a * &kk * &kk;
    for atom in nu.atoms() {
        let x = &atom.point[0];
        let mut term = (x + Scalar::one(mode)).pow(k) - Scalar::one(mode);
        if norm_sq_lt_one(std::slice::from_ref(x), nu.mode()) {
            term = term - &kk * x;
        }
        acc = acc + &atom.weight * term;
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub c: f64,
    pub report: MembershipReport,
}

#[derive(Clone, Debug)]
pub struct DivisibilityScan {
    pub degree: u32,
    pub cone: Cone,
    pub rows: Vec<ScanRow>,
    pub outcome: MembershipOutcome,
}

/// Probes infinite ⊙-divisibility of t: for each c in the grid, checks that
/// t^c still looks like a K-moment sequence at level d. All entries must be
/// strictly positive. A single refutation disproves divisibility; passes are
/// necessary evidence only.
pub fn divisibility_scan(
    t: &MomentSequence,
    d: u32,
    c_grid: &[f64],
    cone: Cone,
    opts: &PsdOptions,
) -> Result<DivisibilityScan> {
    if let Some((alpha, v)) = t.iter().find(|(_, v)| !v.is_positive()) {
        return Err(Error::NonpositiveEntry(format!(
            "t_{alpha} = {v}; the scan needs strictly positive entries"
        )));
    }
    let mut rows = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let powered = entrywise_power(t, c)?;
        let report = moment_membership_check_with(&powered, d, cone, opts)?;
        rows.push(ScanRow { c, report });
    }
    let outcome = rows
        .iter()
        .map(|r| r.report.outcome)
        .fold(MembershipOutcome::PassedNecessaryOnly, |acc, o| {
            match (acc, o) {
                (MembershipOutcome::Refuted, _) | (_, MembershipOutcome::Refuted) => {
                    MembershipOutcome::Refuted
                }
                (MembershipOutcome::Inconclusive, _) | (_, MembershipOutcome::Inconclusive) => {
                    MembershipOutcome::Inconclusive
                }
                _ => MembershipOutcome::PassedNecessaryOnly,
            }
        });
    Ok(DivisibilityScan {
        degree: d,
        cone,
        rows,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{hadamard, moments};
    use crate::positivity::hankel;

    fn rat(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q)
    }

    fn int(v: i64) -> Scalar {
        Scalar::from_int(v, Mode::Rational)
    }

    fn idx(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn zero_sigma(n: usize) -> SymMatrix {
        SymMatrix::new(n, Mode::Rational, vec![int(0); n * n]).unwrap()
    }

    fn univariate(c0: Scalar, b: Scalar, sigma: Scalar, nu: AtomicMeasure) -> LevyTriplet {
        let s = SymMatrix::new(1, Mode::Rational, vec![sigma]).unwrap();
        LevyTriplet::new(c0, vec![b], s, nu).unwrap()
    }

    #[test]
    fn construction_validates_everything() {
        // indefinite sigma
        let bad = SymMatrix::from_rows(
            Mode::Rational,
            vec![vec![int(1), int(2)], vec![int(2), int(1)]],
        )
        .unwrap();
        let r = LevyTriplet::new(
            int(0),
            vec![int(0), int(0)],
            bad,
            AtomicMeasure::empty(2, Mode::Rational),
        );
        assert!(matches!(r, Err(Error::NotPsd(_))));
        // mass at the origin
        let origin = AtomicMeasure::dirac(vec![int(0)], Mode::Rational).unwrap();
        let r = LevyTriplet::new(int(0), vec![int(0)], zero_sigma(1), origin);
        assert!(matches!(r, Err(Error::MassAtOrigin(_))));
        // dimension mismatch
        let r = LevyTriplet::new(
            int(0),
            vec![int(0)],
            zero_sigma(2),
            AtomicMeasure::empty(1, Mode::Rational),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn empty_triplet_is_the_identity() {
        let tr = LevyTriplet::empty(2, Mode::Rational);
        let c = tr.generator_coeffs(3).unwrap();
        assert!(c.support().next().is_none());
        let logs = tr.infdiv_log_moments(3).unwrap();
        assert!(logs.iter().all(|(_, v)| v.is_zero()));
        let t = tr.infdiv_moments(3).unwrap();
        assert!(t.iter().all(|(_, v)| v.to_f64() == 1.0));
        let rep = tr.consistency_check(3).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.max_abs_log_deviation, 0.0);
    }

    #[test]
    fn dirac_one_jump_gives_doubling_logs() {
        // (0, 0, 0, δ₁): C_k = 0, I_k = 2^k − 1 exactly
        let nu = AtomicMeasure::dirac(vec![int(1)], Mode::Rational).unwrap();
        let tr = univariate(int(0), int(0), int(0), nu);
        assert_eq!(tr.i_alpha(&idx(&[3])).unwrap(), int(7));
        assert_eq!(tr.c_alpha(&idx(&[3])).unwrap(), int(0));
        let logs = tr.infdiv_log_moments(8).unwrap();
        for k in 0..=8u32 {
            assert_eq!(*logs.get(&idx(&[k])).unwrap(), int((1i64 << k) - 1));
        }
        // the generator has c_0 = 0 and c_k = 1 for k ≥ 1 (the atom sits on
        // the boundary ‖x‖ = 1, so it feeds the drift coefficient)
        let c = tr.generator_coeffs(5).unwrap();
        assert_eq!(c.value_at(&idx(&[0])).unwrap(), int(0));
        for k in 1..=5u32 {
            assert_eq!(c.value_at(&idx(&[k])).unwrap(), int(1), "k = {k}");
        }
        let rep = tr.consistency_check(6).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.max_abs_log_deviation, 0.0);
        // exponentiation overflows past k ≈ 9 and says so
        assert!(tr.infdiv_moments(8).is_ok());
        assert!(matches!(tr.infdiv_moments(10), Err(Error::Overflow(_))));
    }

    #[test]
    fn lognormal_triplet_matches_closed_form() {
        // (0, 1/2, 1, ∅): C_k = k/2 + k(k−1)/2 = k²/2
        let tr = univariate(
            int(0),
            rat(1, 2),
            int(1),
            AtomicMeasure::empty(1, Mode::Rational),
        );
        for k in 0..=8i64 {
            assert_eq!(
                tr.log_moment(&idx(&[k as u32])).unwrap(),
                Scalar::Rational(num_rational::BigRational::new(
                    (k * k).into(),
                    2.into()
                ))
            );
        }
        let t = tr.infdiv_moments(8).unwrap();
        for k in 0..=8u32 {
            let expect = ((k * k) as f64 / 2.0).exp();
            let got = t.get(&idx(&[k])).unwrap().to_f64();
            assert!(((got - expect) / expect).abs() < 1e-12, "k = {k}");
        }
        // generator: c_1 = 1/2, c_2 = 1, c_k = 0 beyond
        let c = tr.generator_coeffs(4).unwrap();
        assert_eq!(c.value_at(&idx(&[1])).unwrap(), rat(1, 2));
        assert_eq!(c.value_at(&idx(&[2])).unwrap(), int(1));
        assert_eq!(c.value_at(&idx(&[3])).unwrap(), int(0));
        assert!(tr.consistency_check(5).unwrap().passed);
    }

    #[test]
    fn boundary_atoms_feed_drift_not_compensator() {
        // atom at (3/5, 4/5) has ‖x‖₂ = 1 exactly
        let nu = AtomicMeasure::new(
            2,
            Mode::Rational,
            [(vec![rat(3, 5), rat(4, 5)], int(2))],
        )
        .unwrap();
        let tr = LevyTriplet::new(int(0), vec![int(1), int(0)], zero_sigma(2), nu).unwrap();
        let c = tr.generator_coeffs(2).unwrap();
        // c_{e₁} = b₁ + w·x₁ = 1 + 2·3/5
        assert_eq!(c.value_at(&idx(&[1, 0])).unwrap(), rat(11, 5));
        // no compensator subtraction in I either
        assert_eq!(tr.i_alpha(&idx(&[1, 0])).unwrap(), rat(6, 5));
        assert!(tr.consistency_check(4).unwrap().passed);
        // an atom strictly inside the ball is compensated: I_{e₁} = 0
        let inner = AtomicMeasure::new(2, Mode::Rational, [(vec![rat(1, 2), int(0)], int(3))])
            .unwrap();
        let tr = LevyTriplet::new(int(0), vec![int(0), int(0)], zero_sigma(2), inner).unwrap();
        assert!(tr.i_alpha(&idx(&[1, 0])).unwrap().is_zero());
        // ... and does not feed the drift coefficient
        let c = tr.generator_coeffs(2).unwrap();
        assert!(c.value_at(&idx(&[1, 0])).unwrap().is_zero());
        assert!(tr.consistency_check(4).unwrap().passed);
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
            let p = (self.next() % 13) as i64 - 6;
            let q = (self.next() % 4) as i64 + 1;
            rat(p, q)
        }

        fn nonzero_rat(&mut self) -> Scalar {
            let p = (self.next() % 12) as i64 + 1;
            let q = (self.next() % 4) as i64 + 1;
            let s = if self.next() % 2 == 0 { 1 } else { -1 };
            rat(s * p, q)
        }
    }

    fn random_triplet(rng: &mut XorShift, n: usize) -> LevyTriplet {
        // Σ = GᵀG for a random rational G
        let g: Vec<Vec<Scalar>> = (0..n)
            .map(|_| (0..n).map(|_| rng.rat()).collect())
            .collect();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Scalar::zero(Mode::Rational);
                for gk in &g {
                    acc = acc + &gk[i] * &gk[j];
                }
                entries.push(acc);
            }
        }
        let sigma = SymMatrix::new(n, Mode::Rational, entries).unwrap();
        let n_atoms = (rng.next() % 4) as usize + 1;
        let atoms: Vec<(Vec<Scalar>, Scalar)> = (0..n_atoms)
            .map(|_| {
                // first coordinate nonzero keeps the origin out of ν
                let mut point = vec![rng.nonzero_rat()];
                for _ in 1..n {
                    point.push(rng.rat());
                }
                let w = rat((rng.next() % 5) as i64 + 1, (rng.next() % 3) as i64 + 1);
                (point, w)
            })
            .collect();
        let nu = AtomicMeasure::new(n, Mode::Rational, atoms).unwrap();
        let b = (0..n).map(|_| rng.rat()).collect();
        LevyTriplet::new(rng.rat(), b, sigma, nu).unwrap()
    }

    #[test]
    fn consistency_is_exact_for_random_rational_triplets() {
        let mut rng = XorShift(0x1234_5678_9abc_def1);
        for trial in 0..8 {
            let n = 1 + (trial % 2);
            let tr = random_triplet(&mut rng, n);
            let rep = tr.consistency_check(5).unwrap();
            assert!(rep.passed, "trial {trial}");
            assert_eq!(rep.max_abs_log_deviation, 0.0, "trial {trial}");
        }
    }

    #[test]
    fn log_moments_are_linear_in_the_generator_scale() {
        let mut rng = XorShift(0xfeed_beef_cafe_0001);
        let tr = random_triplet(&mut rng, 2);
        let c1 = rat(1, 3);
        let c2 = rat(5, 4);
        let both = tr.scale(&(&c1 + &c2)).unwrap();
        let s1 = tr.scale(&c1).unwrap();
        let s2 = tr.scale(&c2).unwrap();
        let lhs = both.infdiv_log_moments(4).unwrap();
        for (alpha, v) in lhs.iter() {
            let sum = s1.log_moment(alpha).unwrap() + s2.log_moment(alpha).unwrap();
            assert_eq!(*v, sum);
        }
        // float moments multiply (Hadamard semigroup); a small triplet keeps
        // e^{C+I} inside f64 range
        let small = univariate(
            int(0),
            rat(1, 2),
            int(1),
            AtomicMeasure::empty(1, Mode::Rational),
        );
        let s1 = small.scale(&c1).unwrap();
        let s2 = small.scale(&c2).unwrap();
        let t1 = s1.infdiv_moments(4).unwrap();
        let t2 = s2.infdiv_moments(4).unwrap();
        let t12 = small.scale(&(&c1 + &c2)).unwrap().infdiv_moments(4).unwrap();
        let prod = hadamard(&t1, &t2).unwrap();
        for (alpha, v) in t12.iter() {
            let p = prod.get(alpha).unwrap().to_f64();
            assert!(((v.to_f64() - p) / p).abs() < 1e-12);
        }
        // negative scale is rejected
        assert!(tr.scale(&int(-1)).is_err());
    }

    #[test]
    fn univariate_form_agrees_with_triplet_under_reparameterization() {
        // frozen value first: a=b=c=0, ν=δ₁, k=3 → 7
        let nu = AtomicMeasure::dirac(vec![int(1)], Mode::Rational).unwrap();
        assert_eq!(
            univariate_log_moment(&int(0), &int(0), &int(0), &nu, 3).unwrap(),
            int(7)
        );
        // σ = 2a, b_triplet = a + b: identical log moments for all k
        let mut rng = XorShift(0x0dd0_c0de_1234_4321);
        for _ in 0..6 {
            let a = rat((rng.next() % 5) as i64, (rng.next() % 3) as i64 + 1);
            let b = rng.rat();
            let c = rng.rat();
            let nu = AtomicMeasure::new(
                1,
                Mode::Rational,
                [
                    (vec![rng.nonzero_rat()], rat((rng.next() % 4) as i64 + 1, 2)),
                    (vec![rng.nonzero_rat()], rat((rng.next() % 4) as i64 + 1, 3)),
                ],
            )
            .unwrap();
            let tr = univariate(
                c.clone(),
                &a + &b,
                Scalar::from_int(2, Mode::Rational) * &a,
                nu.clone(),
            );
            for k in 0..=6u32 {
                assert_eq!(
                    univariate_log_moment(&a, &b, &c, &nu, k).unwrap(),
                    tr.log_moment(&idx(&[k])).unwrap(),
                    "k = {k}"
                );
            }
        }
        // preconditions
        let origin = AtomicMeasure::dirac(vec![int(0)], Mode::Rational).unwrap();
        assert!(matches!(
            univariate_log_moment(&int(0), &int(0), &int(0), &origin, 1),
            Err(Error::MassAtOrigin(_))
        ));
        assert!(matches!(
            univariate_log_moment(&int(-1), &int(0), &int(0), &nu, 1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn scan_passes_on_infinitely_divisible_output() {
        let tr = univariate(
            int(0),
            rat(1, 2),
            int(1),
            AtomicMeasure::empty(1, Mode::Rational),
        );
        let t = tr.infdiv_moments(6).unwrap();
        let scan = divisibility_scan(
            &t,
            3,
            &[0.1, 0.25, 0.5, 1.0, 2.0],
            Cone::FullSpace,
            &PsdOptions::default(),
        )
        .unwrap();
        assert_eq!(scan.outcome, MembershipOutcome::PassedNecessaryOnly);
        assert_eq!(scan.rows.len(), 5);
        for row in &scan.rows {
            assert!(row.report.hankel.is_psd(), "c = {}", row.c);
        }
    }

    #[test]
    fn scan_refutes_with_reevaluating_witness() {
        let t = MomentSequence::new(
            1,
            2,
            Mode::Rational,
            [
                (idx(&[0]), int(1)),
                (idx(&[1]), int(3)),
                (idx(&[2]), int(2)),
            ],
        )
        .unwrap();
        let scan =
            divisibility_scan(&t, 1, &[1.0], Cone::FullSpace, &PsdOptions::default()).unwrap();
        assert_eq!(scan.outcome, MembershipOutcome::Refuted);
        let verdict = &scan.rows[0].report.hankel;
        let w = verdict.witness.as_ref().expect("refutation witness");
        // re-evaluate vᵀHv < 0 against the Hankel matrix itself
        let h = hankel(&t, 1).unwrap();
        let mut energy = Scalar::zero(Mode::Rational);
        for i in 0..2 {
            for j in 0..2 {
                energy = energy + &w[i] * h.get(i, j) * &w[j];
            }
        }
        assert!(energy.is_negative());
        // nonpositive entries are rejected up front
        let z = MomentSequence::new(1, 1, Mode::Rational, [(idx(&[0]), int(1))]).unwrap();
        assert!(matches!(
            divisibility_scan(&z, 0, &[1.0], Cone::FullSpace, &PsdOptions::default()),
            Err(Error::NonpositiveEntry(_))
        ));
    }

    #[test]
    fn stieltjes_triplets_pass_orthant_checks() {
        // ν on [0,∞), a ≥ 0: the sequence should look Stieltjes at finite
        // level — Hankel and localizing (g = x) both PSD.
        let nu = AtomicMeasure::new(
            1,
            Mode::Rational,
            [(vec![rat(1, 2)], int(1)), (vec![int(2)], rat(1, 3))],
        )
        .unwrap();
        // a = 1/4 → σ = 1/2, pick b_triplet = a + b with b = 1/8
        let tr = univariate(rat(0, 1), rat(3, 8), rat(1, 2), nu);
        let t = tr.infdiv_moments(5).unwrap();
        let report =
            moment_membership_check_with(&t, 2, Cone::NonnegOrthant, &PsdOptions::default())
                .unwrap();
        assert_eq!(report.outcome, MembershipOutcome::PassedNecessaryOnly);
        assert!(report.localizing[0].verdict.is_psd());
    }

    #[test]
    fn moments_of_a_measure_are_divisible_against_its_own_scan() {
        // δ_a moments are t_k = a^k with t^c = (a^c)^k, divisible for a > 0.
        // Integer powers stay rational, so the rank-1 Hankels get exact
        // verdicts instead of float-inconclusive ones.
        let mu = AtomicMeasure::dirac(vec![rat(3, 2)], Mode::Rational).unwrap();
        let t = moments(&mu, 6);
        let scan = divisibility_scan(
            &t,
            3,
            &[1.0, 2.0, 3.0],
            Cone::FullSpace,
            &PsdOptions::default(),
        )
        .unwrap();
        assert_eq!(scan.outcome, MembershipOutcome::PassedNecessaryOnly);
        assert!(scan.rows.iter().all(|r| r.report.hankel.rank == Some(1)));
    }
}
