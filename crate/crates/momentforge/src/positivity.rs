//! Hankel / localizing matrices and PSD certification.
//!
//! Membership of a sequence in the moment cone is probed through the
//! positive semidefiniteness of its Hankel matrix (and localizing matrices
//! for constrained supports). A PSD pass at a finite level is NECESSARY
//! evidence only — it never certifies membership; a NOT_PSD verdict is a
//! hard refutation and always comes with a witness vector v, vᵀAv < 0.
//!
//! Two verification routes, chosen by scalar mode:
//!  * rational — exact symmetric elimination with diagonal pivoting. Output
//!    is a permuted LDLᵀ certificate (PSD) or an exact witness (NOT_PSD);
//!    INCONCLUSIVE cannot occur.
//!  * float — symmetric eigenvalues (cyclic Jacobi) after the congruence
//!    rescaling M ↦ D·M·D, D = diag(1/√M_ii), which preserves inertia and
//!    makes the tolerance relative to the largest diagonal entry. The margin
//!    is the smallest rescaled eigenvalue; |margin| < tol is INCONCLUSIVE.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::algebra::MomentSequence;
use crate::combinatorics::{indices_up_to, MultiIndex};
use crate::diagop::Polynomial;
use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};

/// Default float-mode PSD tolerance, relative to the largest diagonal entry.
pub const DEFAULT_FLOAT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct PsdOptions {
    pub float_tol: f64,
}

impl Default for PsdOptions {
    fn default() -> Self {
        PsdOptions {
            float_tol: DEFAULT_FLOAT_TOL,
        }
    }
}

/// Dense symmetric matrix with optional monomial labels for its rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    order: usize,
    mode: Mode,
    entries: Vec<Scalar>, // row-major, full
    labels: Option<Vec<MultiIndex>>,
}

impl SymMatrix {
    /// Validates symmetry: exact in rational mode, |a_ij − a_ji| ≤
    /// 1e−12·max(1, |a_ij|) in float mode. Float entries must be finite.
    pub fn new(order: usize, mode: Mode, entries: Vec<Scalar>) -> Result<SymMatrix> {
        if entries.len() != order * order {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for order {}",
                entries.len(),
                order
            )));
        }
        if entries.iter().any(|v| v.mode() != mode) {
            return Err(Error::ModeMismatch(format!("matrix entries must be {mode}")));
        }
        if mode == Mode::Float {
            if let Some(bad) = entries.iter().find(|v| !v.to_f64().is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite float entry {bad}"
                )));
            }
        }
        for i in 0..order {
            for j in 0..i {
                let a = &entries[i * order + j];
                let b = &entries[j * order + i];
                let ok = match mode {
                    Mode::Rational => a == b,
                    Mode::Float => {
                        (a.to_f64() - b.to_f64()).abs() <= 1e-12 * a.to_f64().abs().max(1.0)
                    }
                };
                if !ok {
                    return Err(Error::NotSymmetric(format!(
                        "entries ({i},{j}) = {a} and ({j},{i}) = {b}"
                    )));
                }
            }
        }
        Ok(SymMatrix {
            order,
            mode,
            entries,
            labels: None,
        })
    }

    pub fn from_rows(mode: Mode, rows: Vec<Vec<Scalar>>) -> Result<SymMatrix> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        SymMatrix::new(order, mode, rows.into_iter().flatten().collect())
    }

    pub fn with_labels(mut self, labels: Vec<MultiIndex>) -> Result<SymMatrix> {
        if labels.len() != self.order {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for order {}",
                labels.len(),
                self.order
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn labels(&self) -> Option<&[MultiIndex]> {
        self.labels.as_deref()
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.order + j]
    }

    fn to_rationals(&self) -> Result<Vec<BigRational>> {
        self.entries.iter().map(|v| v.as_rational().cloned()).collect()
    }

    fn to_floats(&self) -> Vec<f64> {
        self.entries.iter().map(|v| v.to_f64()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsdStatus {
    Psd,
    NotPsd,
    Inconclusive,
}

/// Permuted LDLᵀ data from the exact route:
/// A[perm[i]][perm[j]] = Σ_k L[i][k]·diag[k]·L[j][k], L unit lower.
#[derive(Clone, Debug)]
pub struct LdltCertificate {
    pub perm: Vec<usize>,
    pub unit_lower: Vec<Vec<BigRational>>,
    pub diag: Vec<BigRational>,
}

impl LdltCertificate {
    /// Rebuilds the matrix in original index order (for verification).
    pub fn reconstruct(&self) -> Vec<Vec<BigRational>> {
        let m = self.perm.len();
        let mut out = vec![vec![BigRational::zero(); m]; m];
        for i in 0..m {
            for j in 0..m {
                let mut acc = BigRational::zero();
                for k in 0..m {
                    acc += &self.unit_lower[i][k] * &self.diag[k] * &self.unit_lower[j][k];
                }
                out[self.perm[i]][self.perm[j]] = acc;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct PsdVerdict {
    pub status: PsdStatus,
    /// Smallest rescaled eigenvalue (float route only).
    pub margin: Option<f64>,
    /// Number of positive pivots (exact route, PSD only).
    pub rank: Option<usize>,
    /// Direction with vᵀAv < 0 (NOT_PSD only; re-evaluates exactly in
    /// rational mode).
    pub witness: Option<Vec<Scalar>>,
    /// Exact factorization (rational route, PSD only).
    pub certificate: Option<LdltCertificate>,
}

impl PsdVerdict {
    pub fn is_psd(&self) -> bool {
        self.status == PsdStatus::Psd
    }

    pub fn is_not_psd(&self) -> bool {
        self.status == PsdStatus::NotPsd
    }

    pub fn is_inconclusive(&self) -> bool {
        self.status == PsdStatus::Inconclusive
    }
}

pub fn is_psd(a: &SymMatrix) -> PsdVerdict {
    is_psd_with(a, &PsdOptions::default())
}

pub fn is_psd_with(a: &SymMatrix, opts: &PsdOptions) -> PsdVerdict {
    match a.mode() {
        Mode::Rational => psd_exact(a),
        Mode::Float => psd_float(a, opts.float_tol),
    }
}

fn verdict_psd_exact(rank: usize, cert: LdltCertificate) -> PsdVerdict {
    PsdVerdict {
        status: PsdStatus::Psd,
        margin: None,
        rank: Some(rank),
        witness: None,
        certificate: Some(cert),
    }
}

fn psd_exact(a: &SymMatrix) -> PsdVerdict {
    let m = a.order();
    let entries = a.to_rationals().expect("rational mode");
    let at = |w: &[BigRational], i: usize, j: usize| w[i * m + j].clone();
    let mut w = entries.clone();
    let mut active: Vec<usize> = (0..m).collect();
    let mut perm: Vec<usize> = Vec::new();
    let mut diag: Vec<BigRational> = Vec::new();
    // per processed pivot: multipliers keyed by original row index
    let mut cols: Vec<Vec<(usize, BigRational)>> = Vec::new();

    let lift_witness = |y: Vec<(usize, BigRational)>,
                        perm: &[usize],
                        cols: &[Vec<(usize, BigRational)>]| {
        // v agrees with y on the active block; pivot entries are filled by
        // back substitution through the stored unit-lower columns.
        let mut v = vec![BigRational::zero(); m];
        for (i, c) in y {
            v[i] = c;
        }
        for k in (0..perm.len()).rev() {
            let mut acc = BigRational::zero();
            for (i, l) in &cols[k] {
                acc += l * &v[*i];
            }
            v[perm[k]] = -acc;
        }
        let witness: Vec<Scalar> = v.into_iter().map(Scalar::Rational).collect();
        PsdVerdict {
            status: PsdStatus::NotPsd,
            margin: None,
            rank: None,
            witness: Some(witness),
            certificate: None,
        }
    };

    loop {
        // 1. a negative diagonal in the Schur complement refutes outright
        if let Some(&k) = active.iter().find(|&&i| at(&w, i, i).is_negative()) {
            return lift_witness(vec![(k, BigRational::one())], &perm, &cols);
        }
        // 2. eliminate on the largest positive diagonal entry
        let pivot = active
            .iter()
            .copied()
            .filter(|&i| at(&w, i, i).is_positive())
            .max_by(|&i, &j| at(&w, i, i).cmp(&at(&w, j, j)));
        if let Some(p) = pivot {
            let d = at(&w, p, p);
            active.retain(|&i| i != p);
            let col: Vec<(usize, BigRational)> = active
                .iter()
                .map(|&i| (i, at(&w, i, p) / &d))
                .collect();
            for &(i, ref li) in &col {
                for &(j, ref lj) in &col {
                    if j > i {
                        continue;
                    }
                    let upd = li * &d * lj;
                    w[i * m + j] -= &upd;
                    if i != j {
                        w[j * m + i] -= upd;
                    }
                }
            }
            perm.push(p);
            diag.push(d);
            cols.push(col);
            if active.is_empty() {
                break;
            }
            continue;
        }
        // 3. all remaining diagonals are zero: the block must vanish
        let mut bad = None;
        'scan: for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                if !at(&w, i, j).is_zero() {
                    bad = Some((i, j, at(&w, i, j)));
                    break 'scan;
                }
            }
        }
        if let Some((i, j, v)) = bad {
            // [[0, v],[v, 0]] energy: (e_i − sgn(v)·e_j) gives −2|v|
            let s = if v.is_positive() {
                -BigRational::one()
            } else {
                BigRational::one()
            };
            return lift_witness(vec![(i, BigRational::one()), (j, s)], &perm, &cols);
        }
        // identically zero residual: record rank-deficient trailing pivots
        for &i in &active {
            perm.push(i);
            diag.push(BigRational::zero());
            cols.push(Vec::new());
        }
        break;
    }

    let rank = diag.iter().filter(|d| d.is_positive()).count();
    // assemble the unit-lower matrix in permuted coordinates
    let mm = perm.len();
    let mut lower = vec![vec![BigRational::zero(); mm]; mm];
    let pos: std::collections::HashMap<usize, usize> =
        perm.iter().enumerate().map(|(p, &orig)| (orig, p)).collect();
    for (i, row) in lower.iter_mut().enumerate() {
        row[i] = BigRational::one();
    }
    for (k, col) in cols.iter().enumerate() {
        for (orig, l) in col {
            lower[pos[orig]][k] = l.clone();
        }
    }
    verdict_psd_exact(
        rank,
        LdltCertificate {
            perm,
            unit_lower: lower,
            diag,
        },
    )
}

fn psd_float(a: &SymMatrix, tol: f64) -> PsdVerdict {
    let m = a.order();
    if m == 0 {
        return PsdVerdict {
            status: PsdStatus::Psd,
            margin: None,
            rank: Some(0),
            witness: None,
            certificate: None,
        };
    }
    let f = a.to_floats();
    let maxd = (0..m).map(|i| f[i * m + i]).fold(f64::NEG_INFINITY, f64::max);
    // congruence rescale: unit diagonal where possible, neutral elsewhere
    let scale: Vec<f64> = (0..m)
        .map(|i| {
            let d = f[i * m + i];
            if d > 0.0 {
                d.sqrt()
            } else if maxd > 0.0 {
                maxd.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut s = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            s[i * m + j] = f[i * m + j] / (scale[i] * scale[j]);
        }
    }
    let threshold = if maxd > 0.0 {
        tol
    } else {
        tol * s.iter().fold(1.0f64, |acc, v| acc.max(v.abs()))
    };
    let (eigvals, eigvecs) = jacobi_eigen(&s, m);
    let (kmin, &lambda_min) = eigvals
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("m ≥ 1");
    if lambda_min > threshold {
        return PsdVerdict {
            status: PsdStatus::Psd,
            margin: Some(lambda_min),
            rank: None,
            witness: None,
            certificate: None,
        };
    }
    if lambda_min < -threshold {
        // unscale the eigenvector and re-evaluate before committing
        let v: Vec<f64> = (0..m).map(|i| eigvecs[i * m + kmin] / scale[i]).collect();
        let mut q = 0.0;
        for i in 0..m {
            for j in 0..m {
                q += v[i] * f[i * m + j] * v[j];
            }
        }
        if q < 0.0 {
            return PsdVerdict {
                status: PsdStatus::NotPsd,
                margin: Some(lambda_min),
                rank: None,
                witness: Some(v.into_iter().map(Scalar::Float).collect()),
                certificate: None,
            };
        }
    }
    PsdVerdict {
        status: PsdStatus::Inconclusive,
        margin: Some(lambda_min),
        rank: None,
        witness: None,
        certificate: None,
    }
}

/// Cyclic Jacobi sweeps; returns (eigenvalues, eigenvectors as columns of a
/// row-major m×m matrix). Deterministic, no pivot randomness.
fn jacobi_eigen(sym: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = sym.to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = (frob * 1e-15).max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                off += a[i * m + j] * a[i * m + j];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let apq = a[i * m + j];
                if apq == 0.0 {
                    continue;
                }
                let app = a[i * m + i];
                let aqq = a[j * m + j];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    let sgn = if theta > 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let aki = a[k * m + i];
                    let akj = a[k * m + j];
                    a[k * m + i] = c * aki - s * akj;
                    a[k * m + j] = s * aki + c * akj;
                }
                for k in 0..m {
                    let aik = a[i * m + k];
                    let ajk = a[j * m + k];
                    a[i * m + k] = c * aik - s * ajk;
                    a[j * m + k] = s * aik + c * ajk;
                }
                for k in 0..m {
                    let vki = v[k * m + i];
                    let vkj = v[k * m + j];
                    v[k * m + i] = c * vki - s * vkj;
                    v[k * m + j] = s * vki + c * vkj;
                }
            }
        }
    }
    let eig: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    (eig, v)
}

/// Hankel (moment) matrix at level d: M[β,γ] = s_{β+γ}, rows labelled by the
/// monomial basis {x^β : |β| ≤ d}. Needs the window through 2d.
pub fn hankel(s: &MomentSequence, d: u32) -> Result<SymMatrix> {
    if s.degree() < 2 * d {
        return Err(Error::DegreeInsufficient(format!(
            "hankel at level {} needs moments through degree {}, window is {}",
            d,
            2 * d,
            s.degree()
        )));
    }
    let basis = indices_up_to(s.n(), d);
    let mut entries = Vec::with_capacity(basis.len() * basis.len());
    for b in &basis {
        for g in &basis {
            entries.push(s.get(&(b + g))?.clone());
        }
    }
    SymMatrix::new(basis.len(), s.mode(), entries)?.with_labels(basis)
}

/// Localizing matrix for g at level d: M[β,γ] = L_s(g·x^{β+γ}). Needs the
/// window through 2d + deg g.
pub fn localizing(s: &MomentSequence, d: u32, g: &Polynomial) -> Result<SymMatrix> {
    if g.n() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "localizing polynomial in {} variables against a {}-variable sequence",
            g.n(),
            s.n()
        )));
    }
    if s.degree() < 2 * d + g.degree() {
        return Err(Error::DegreeInsufficient(format!(
            "localizing at level {} with deg g = {} needs moments through degree {}, window is {}",
            d,
            g.degree(),
            2 * d + g.degree(),
            s.degree()
        )));
    }
    let mode = s.mode().join(g.mode());
    let basis = indices_up_to(s.n(), d);
    let mut entries = Vec::with_capacity(basis.len() * basis.len());
    for b in &basis {
        for gm in &basis {
            let shift = b + gm;
            let mut acc = Scalar::zero(mode);
            for (gamma, coeff) in g.terms() {
                acc = acc + coeff * s.get(&(&shift + gamma))?;
            }
            entries.push(acc);
        }
    }
    SymMatrix::new(basis.len(), mode, entries)?.with_labels(basis)
}

/// Entrywise (Schur) product. Labels are dropped: the result is not a moment
/// matrix of either factor.
pub fn schur_product(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    if a.order() != b.order() {
        return Err(Error::DimensionMismatch(format!(
            "schur product of orders {} and {}",
            a.order(),
            b.order()
        )));
    }
    let mode = a.mode().join(b.mode());
    let mut entries = Vec::with_capacity(a.order() * a.order());
    for i in 0..a.order() {
        for j in 0..a.order() {
            entries.push(a.get(i, j) * b.get(i, j));
        }
    }
    SymMatrix::new(a.order(), mode, entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    FullSpace,
    NonnegOrthant,
}

impl std::fmt::Display for Cone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cone::FullSpace => write!(f, "fullspace"),
            Cone::NonnegOrthant => write!(f, "orthant"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MembershipOutcome {
    /// Every matrix passed. Finite-level PSD is necessary, not sufficient:
    /// this never certifies actual membership in the moment cone.
    PassedNecessaryOnly,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct LocalizingReport {
    pub label: String,
    pub verdict: PsdVerdict,
}

#[derive(Clone, Debug)]
pub struct MembershipReport {
    pub degree: u32,
    pub cone: Cone,
    pub hankel: PsdVerdict,
    pub localizing: Vec<LocalizingReport>,
    pub outcome: MembershipOutcome,
}

fn combined_outcome<'a>(verdicts: impl Iterator<Item = &'a PsdVerdict>) -> MembershipOutcome {
    let mut outcome = MembershipOutcome::PassedNecessaryOnly;
    for v in verdicts {
        match v.status {
            PsdStatus::NotPsd => return MembershipOutcome::Refuted,
            PsdStatus::Inconclusive => outcome = MembershipOutcome::Inconclusive,
            PsdStatus::Psd => {}
        }
    }
    outcome
}

/// Hankel check plus arbitrary localizing constraints (labelled).
pub fn membership_with_localizers(
    s: &MomentSequence,
    d: u32,
    cone: Cone,
    gs: &[(String, Polynomial)],
    opts: &PsdOptions,
) -> Result<MembershipReport> {
    let hankel_verdict = is_psd_with(&hankel(s, d)?, opts);
    let mut reports = Vec::with_capacity(gs.len());
    for (label, g) in gs {
        let verdict = is_psd_with(&localizing(s, d, g)?, opts);
        reports.push(LocalizingReport {
            label: label.clone(),
            verdict,
        });
    }
    let outcome = combined_outcome(
        std::iter::once(&hankel_verdict).chain(reports.iter().map(|r| &r.verdict)),
    );
    Ok(MembershipReport {
        degree: d,
        cone,
        hankel: hankel_verdict,
        localizing: reports,
        outcome,
    })
}

/// Finite-level membership check against the moment cone of K:
/// Hankel PSD at level d, plus localizing matrices for g = x_i when K is the
/// nonnegative orthant. NECESSARY-ONLY semantics throughout.
pub fn moment_membership_check(s: &MomentSequence, d: u32, cone: Cone) -> Result<MembershipReport> {
    moment_membership_check_with(s, d, cone, &PsdOptions::default())
}

pub fn moment_membership_check_with(
    s: &MomentSequence,
    d: u32,
    cone: Cone,
    opts: &PsdOptions,
) -> Result<MembershipReport> {
    let gs: Vec<(String, Polynomial)> = match cone {
        Cone::FullSpace => Vec::new(),
        Cone::NonnegOrthant => (0..s.n())
            .map(|i| {
                let g = Polynomial::monomial(
                    s.n(),
                    MultiIndex::unit(s.n(), i),
                    Scalar::one(s.mode()),
                )
                .expect("valid monomial");
                (format!("x_{i}"), g)
            })
            .collect(),
    };
    membership_with_localizers(s, d, cone, &gs, opts)
}
