//! Randomized zero and equivalence testing of multipartite rational
//! expressions.
//!
//! Points are sampled on square levels `(n, …, n)` for `n = 1..=max_level`
//! with integer entries in `[-B, B]`. Inverse-free expressions are decided
//! exactly through their normal form; sampling only supplies a witness. For
//! expressions with inverses a nonzero evaluation is a proof of
//! nonvanishing, while a run of zero evaluations only bounds the search and
//! is reported as such.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::{mp_evaluate, EvalError, Evaluation, MpPoint, Undefined};
use crate::expr::{poly_normal_form, Alphabet, RationalExpr};
use crate::field::{Field, Rational};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("invalid test configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Sampling budget for randomized tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestConfig {
    /// Largest square level `n` tried.
    pub max_level: usize,
    pub trials_per_level: usize,
    /// Entries are drawn uniformly from `[-entry_bound, entry_bound]`.
    pub entry_bound: u64,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            max_level: 4,
            trials_per_level: 8,
            entry_bound: 10,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<(), IdentityError> {
        if self.max_level == 0 {
            return Err(IdentityError::Config("max_level must be at least 1"));
        }
        if self.trials_per_level == 0 {
            return Err(IdentityError::Config("trials_per_level must be at least 1"));
        }
        if self.entry_bound == 0 {
            return Err(IdentityError::Config("entry_bound must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TestConfig { seed, ..self }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic RNG for one trial.
pub fn trial_rng(seed: u64, dims: &[usize], sizes: &[usize], trial: u64) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for &d in dims {
        h = splitmix(h ^ d as u64);
    }
    h = splitmix(h ^ 0xA5A5);
    for &s in sizes {
        h = splitmix(h ^ s as u64);
    }
    h = splitmix(h ^ trial);
    ChaCha8Rng::seed_from_u64(h)
}

/// `rows x cols` matrix with integer entries uniform in `[-bound, bound]`.
pub fn random_matrix<F: Field, R: Rng>(rng: &mut R, rows: usize, cols: usize, bound: u64) -> Matrix<F> {
    let b = bound as i64;
    let data = (0..rows * cols).map(|_| F::from_i64(rng.gen_range(-b..=b))).collect();
    Matrix::from_vec(rows, cols, data).expect("sized buffer")
}

/// The sample point for `(cfg.seed, dims, trial)`: part `i` holds `g_i`
/// random `n_i x n_i` matrices, followed by its primed copy when the
/// alphabet has one.
pub fn sample_point<F: Field>(alphabet: &Alphabet, dims: &[usize], cfg: &TestConfig, trial: u64) -> MpPoint<F> {
    let mut rng = trial_rng(cfg.seed, dims, alphabet.sizes(), trial);
    let tuple = |rng: &mut ChaCha8Rng, part: usize| -> Vec<Matrix<F>> {
        let n = dims[part - 1];
        (0..alphabet.size(part))
            .map(|_| random_matrix(rng, n, n, cfg.entry_bound))
            .collect()
    };
    let parts = (1..=dims.len()).map(|i| tuple(&mut rng, i)).collect();
    let mut point = MpPoint::new(dims.to_vec(), parts).expect("shapes follow dims");
    for i in 1..=dims.len() {
        if alphabet.has_primed(i) {
            let primed = tuple(&mut rng, i);
            point = point.with_primed(i, primed).expect("shapes follow dims");
        }
    }
    point
}

/// Square level `(n, …, n)` for the alphabet.
pub fn square_dims(alphabet: &Alphabet, n: usize) -> Vec<usize> {
    vec![n; alphabet.parts()]
}

/// Counts for one sampled level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSummary {
    pub level: usize,
    pub sampled: usize,
    /// Trials where the evaluation was defined.
    pub defined: usize,
    pub zero: usize,
    pub nonzero: usize,
    /// Defined trials whose value had nonzero determinant.
    pub det_nonzero: usize,
    pub first_undefined: Option<Undefined>,
}

impl LevelSummary {
    fn new(level: usize) -> Self {
        LevelSummary {
            level,
            sampled: 0,
            defined: 0,
            zero: 0,
            nonzero: 0,
            det_nonzero: 0,
            first_undefined: None,
        }
    }

    /// Determinant criterion: a nonzero value must come with an invertible
    /// value somewhere on the level. Vanishing determinants on every trial
    /// together with a nonzero value would contradict it (up to sampling
    /// luck).
    pub fn determinant_criterion_holds(&self) -> bool {
        self.nonzero == 0 || self.det_nonzero > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZeroVerdict<F: Field> {
    /// Inverse-free and zero in the multipartite free algebra.
    ExactZero,
    /// Inverse-free with a nonzero normal form, but no witness turned up in
    /// the sampling budget.
    ExactNonzero,
    NonzeroWitness {
        level: usize,
        trial: u64,
        point: MpPoint<F>,
        value: Matrix<F>,
    },
    /// Every decided trial up to `max_level` evaluated to zero.
    ProbablyZeroUpTo {
        max_level: usize,
        trials_per_level: usize,
        decided: usize,
    },
    /// No sampled point was in the domain.
    NowhereDefined { undefined: Option<Undefined> },
}

impl<F: Field> ZeroVerdict<F> {
    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroVerdict::NonzeroWitness { .. } | ZeroVerdict::ExactNonzero)
    }

    /// Exact zero or no counterexample in the budget.
    pub fn is_zero_or_probably(&self) -> bool {
        matches!(self, ZeroVerdict::ExactZero | ZeroVerdict::ProbablyZeroUpTo { .. })
    }
}

/// Verdict plus the per-level sampling record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroReport<F: Field> {
    pub verdict: ZeroVerdict<F>,
    pub levels: Vec<LevelSummary>,
}

impl<F: Field> ZeroReport<F> {
    pub fn level(&self, n: usize) -> Option<&LevelSummary> {
        self.levels.iter().find(|l| l.level == n)
    }

    pub fn decided_trials(&self) -> usize {
        self.levels.iter().map(|l| l.defined).sum()
    }
}

enum Scan<F: Field> {
    Witness {
        level: usize,
        trial: u64,
        point: MpPoint<F>,
        value: Matrix<F>,
    },
    Exhausted,
}

/// Samples levels in order, stopping after the first level that produced a
/// nonzero value; the witness is the earliest trial of that level.
fn scan_levels<F: Field>(
    alphabet: &Alphabet,
    cfg: &TestConfig,
    levels: impl IntoIterator<Item = (usize, usize)>,
    summaries: &mut Vec<LevelSummary>,
    mut value_at: impl FnMut(&MpPoint<F>) -> Result<Evaluation<F>, IdentityError>,
) -> Result<Scan<F>, IdentityError> {
    for (n, trials) in levels {
        let dims = square_dims(alphabet, n);
        let mut summary = LevelSummary::new(n);
        let mut witness = None;
        for trial in 0..trials as u64 {
            let point = sample_point::<F>(alphabet, &dims, cfg, trial);
            summary.sampled += 1;
            match value_at(&point)? {
                Evaluation::Undefined(u) => {
                    summary.first_undefined.get_or_insert(u);
                }
                Evaluation::Defined(v) => {
                    summary.defined += 1;
                    if !v.det().map_err(EvalError::from)?.is_zero() {
                        summary.det_nonzero += 1;
                    }
                    if v.is_zero() {
                        summary.zero += 1;
                    } else {
                        summary.nonzero += 1;
                        if witness.is_none() {
                            witness = Some((trial, point, v));
                        }
                    }
                }
            }
        }
        summaries.push(summary);
        if let Some((trial, point, value)) = witness {
            return Ok(Scan::Witness {
                level: n,
                trial,
                point,
                value,
            });
        }
    }
    Ok(Scan::Exhausted)
}

/// Zero test over the rationals.
pub fn is_zero(e: &RationalExpr, alphabet: &Alphabet, cfg: &TestConfig) -> Result<ZeroReport<Rational>, IdentityError> {
    is_zero_in(e, alphabet, cfg)
}

/// Zero test with evaluations over `F`.
pub fn is_zero_in<F: Field>(
    e: &RationalExpr,
    alphabet: &Alphabet,
    cfg: &TestConfig,
) -> Result<ZeroReport<F>, IdentityError> {
    cfg.validate()?;
    e.validate(alphabet).map_err(|err| EvalError::PointShape(err.to_string()))?;
    if e.inversion_height() == 0 {
        return exact_zero_test(e, alphabet, cfg, |pt| Ok(mp_evaluate(e, pt)?));
    }
    sampled_zero_test(alphabet, cfg, |pt| Ok(mp_evaluate(e, pt)?))
}

fn exact_zero_test<F: Field>(
    e: &RationalExpr,
    alphabet: &Alphabet,
    cfg: &TestConfig,
    value_at: impl FnMut(&MpPoint<F>) -> Result<Evaluation<F>, IdentityError>,
) -> Result<ZeroReport<F>, IdentityError> {
    let nf = poly_normal_form(e).expect("height 0 has no inverse");
    let mut levels = Vec::new();
    if nf.is_zero() {
        return Ok(ZeroReport {
            verdict: ZeroVerdict::ExactZero,
            levels,
        });
    }
    // A nonzero polynomial of degree d is not an identity of M_n once
    // 2n > d, so the scan always reaches a separating level.
    let top = cfg.max_level.max(nf.degree() / 2 + 1);
    let plan = (1..=top).map(|n| {
        let trials = if n == top {
            cfg.trials_per_level.max(64)
        } else {
            cfg.trials_per_level
        };
        (n, trials)
    });
    let verdict = match scan_levels(alphabet, cfg, plan, &mut levels, value_at)? {
        Scan::Witness {
            level,
            trial,
            point,
            value,
        } => ZeroVerdict::NonzeroWitness {
            level,
            trial,
            point,
            value,
        },
        Scan::Exhausted => ZeroVerdict::ExactNonzero,
    };
    Ok(ZeroReport { verdict, levels })
}

fn sampled_zero_test<F: Field>(
    alphabet: &Alphabet,
    cfg: &TestConfig,
    value_at: impl FnMut(&MpPoint<F>) -> Result<Evaluation<F>, IdentityError>,
) -> Result<ZeroReport<F>, IdentityError> {
    let mut levels = Vec::new();
    let plan = (1..=cfg.max_level).map(|n| (n, cfg.trials_per_level));
    let verdict = match scan_levels(alphabet, cfg, plan, &mut levels, value_at)? {
        Scan::Witness {
            level,
            trial,
            point,
            value,
        } => ZeroVerdict::NonzeroWitness {
            level,
            trial,
            point,
            value,
        },
        Scan::Exhausted => {
            let decided: usize = levels.iter().map(|l| l.defined).sum();
            if decided > 0 {
                ZeroVerdict::ProbablyZeroUpTo {
                    max_level: cfg.max_level,
                    trials_per_level: cfg.trials_per_level,
                    decided,
                }
            } else {
                let undefined = levels.iter().rev().find_map(|l| l.first_undefined.clone());
                ZeroVerdict::NowhereDefined { undefined }
            }
        }
    };
    Ok(ZeroReport { verdict, levels })
}

/// Tests `e1 ∼ e2`: their difference on points where both are defined.
pub fn equivalent(
    e1: &RationalExpr,
    e2: &RationalExpr,
    alphabet: &Alphabet,
    cfg: &TestConfig,
) -> Result<ZeroReport<Rational>, IdentityError> {
    equivalent_in(e1, e2, alphabet, cfg)
}

pub fn equivalent_in<F: Field>(
    e1: &RationalExpr,
    e2: &RationalExpr,
    alphabet: &Alphabet,
    cfg: &TestConfig,
) -> Result<ZeroReport<F>, IdentityError> {
    cfg.validate()?;
    for e in [e1, e2] {
        e.validate(alphabet).map_err(|err| EvalError::PointShape(err.to_string()))?;
    }
    let diff_at = |pt: &MpPoint<F>| -> Result<Evaluation<F>, IdentityError> {
        let a = mp_evaluate(e1, pt)?;
        let Evaluation::Defined(a) = a else { return Ok(a) };
        let b = mp_evaluate(e2, pt)?;
        let Evaluation::Defined(b) = b else { return Ok(b) };
        Ok(Evaluation::Defined(a.sub(&b).map_err(EvalError::from)?))
    };
    if e1.inversion_height() == 0 && e2.inversion_height() == 0 {
        return exact_zero_test(&e1.sub(e2), alphabet, cfg, diff_at);
    }
    sampled_zero_test(alphabet, cfg, diff_at)
}

/// Result of [`domain_scan`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainScan<F: Field> {
    /// Smallest square level with a sampled point in the domain. The
    /// expression is then also defined somewhere on every multiple of it.
    pub first_defined_level: Option<usize>,
    pub witness: Option<MpPoint<F>>,
    pub levels: Vec<LevelSummary>,
}

/// Finds the smallest square level `n ≤ max_level` where `e` is
/// mp-defined at some sampled point.
pub fn domain_scan(e: &RationalExpr, alphabet: &Alphabet, cfg: &TestConfig) -> Result<DomainScan<Rational>, IdentityError> {
    cfg.validate()?;
    e.validate(alphabet).map_err(|err| EvalError::PointShape(err.to_string()))?;
    let mut levels = Vec::new();
    for n in 1..=cfg.max_level {
        let dims = square_dims(alphabet, n);
        let mut summary = LevelSummary::new(n);
        for trial in 0..cfg.trials_per_level as u64 {
            let point = sample_point(alphabet, &dims, cfg, trial);
            summary.sampled += 1;
            match mp_evaluate(e, &point)? {
                Evaluation::Defined(v) => {
                    summary.defined += 1;
                    if v.is_zero() {
                        summary.zero += 1;
                    } else {
                        summary.nonzero += 1;
                    }
                    levels.push(summary);
                    return Ok(DomainScan {
                        first_defined_level: Some(n),
                        witness: Some(point),
                        levels,
                    });
                }
                Evaluation::Undefined(u) => {
                    summary.first_undefined.get_or_insert(u);
                }
            }
        }
        levels.push(summary);
    }
    Ok(DomainScan {
        first_defined_level: None,
        witness: None,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::field::Fp61;

    fn alphabet(sizes: &[usize]) -> Alphabet {
        Alphabet::new(sizes.to_vec()).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_shaped() {
        let a = alphabet(&[2, 1]);
        let cfg = TestConfig::default().with_seed(42);
        let p1: MpPoint<Rational> = sample_point(&a, &[2, 3], &cfg, 5);
        let p2: MpPoint<Rational> = sample_point(&a, &[2, 3], &cfg, 5);
        assert_eq!(p1, p2);
        assert_ne!(p1, sample_point(&a, &[2, 3], &cfg, 6));
        assert_eq!(p1.part(1).len(), 2);
        assert_eq!(p1.part(1)[0].shape(), (2, 2));
        assert_eq!(p1.part(2).len(), 1);
        assert_eq!(p1.part(2)[0].shape(), (3, 3));
    }

    #[test]
    fn entry_bound_one() {
        let a = alphabet(&[2]);
        let cfg = TestConfig {
            entry_bound: 1,
            ..TestConfig::default()
        };
        for trial in 0..20 {
            let p: MpPoint<Rational> = sample_point(&a, &[3], &cfg, trial);
            for m in p.part(1) {
                for x in m.entries() {
                    assert!(*x >= Rational::from_i64(-1) && *x <= Rational::from_i64(1));
                }
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let a = alphabet(&[1]);
        let e = RationalExpr::x(1, 1);
        for cfg in [
            TestConfig { max_level: 0, ..TestConfig::default() },
            TestConfig { trials_per_level: 0, ..TestConfig::default() },
            TestConfig { entry_bound: 0, ..TestConfig::default() },
        ] {
            assert!(matches!(is_zero(&e, &a, &cfg), Err(IdentityError::Config(_))));
        }
    }

    #[test]
    fn cross_part_commutator_is_exact_zero() {
        let a = alphabet(&[1, 1]);
        let e = parse("X1_1*X2_1 - X2_1*X1_1", &a).unwrap();
        let r = is_zero(&e, &a, &TestConfig::default()).unwrap();
        assert_eq!(r.verdict, ZeroVerdict::ExactZero);
    }

    #[test]
    fn same_part_commutator_separates_at_level_two() {
        let a = alphabet(&[2]);
        let e = parse("X1_1*X1_2 - X1_2*X1_1", &a).unwrap();
        let r = is_zero(&e, &a, &TestConfig::default()).unwrap();
        let ZeroVerdict::NonzeroWitness { level, value, point, .. } = &r.verdict else {
            panic!("expected a witness, got {:?}", r.verdict)
        };
        assert_eq!(*level, 2);
        assert_eq!(r.level(1).unwrap().nonzero, 0);
        assert_eq!(mp_evaluate(&e, point).unwrap().defined().unwrap(), *value);
    }

    #[test]
    fn double_inverse_probably_zero() {
        let a = alphabet(&[1]);
        let r = equivalent(
            &parse("inv(inv(X1_1 + 2))", &a).unwrap(),
            &parse("X1_1 + 2", &a).unwrap(),
            &a,
            &TestConfig::default(),
        )
        .unwrap();
        assert!(matches!(r.verdict, ZeroVerdict::ProbablyZeroUpTo { .. }), "{:?}", r.verdict);
        assert!(r.decided_trials() >= 16);
    }

    #[test]
    fn inverse_of_sum_is_not_sum_of_inverses() {
        let a = alphabet(&[2]);
        let r = equivalent(
            &parse("inv(X1_1 + X1_2)", &a).unwrap(),
            &parse("inv(X1_1) + inv(X1_2)", &a).unwrap(),
            &a,
            &TestConfig::default(),
        )
        .unwrap();
        assert!(matches!(r.verdict, ZeroVerdict::NonzeroWitness { level: 1, .. }));
    }

    #[test]
    fn nowhere_defined_reports_offender() {
        let a = alphabet(&[1, 1]);
        let e = parse("inv(X1_1*X2_1 - X2_1*X1_1)", &a).unwrap();
        let r = is_zero(&e, &a, &TestConfig::default()).unwrap();
        let ZeroVerdict::NowhereDefined { undefined: Some(u) } = r.verdict else {
            panic!("expected nowhere defined")
        };
        assert!(u.path.is_empty());
        let scan = domain_scan(&e, &a, &TestConfig::default()).unwrap();
        assert_eq!(scan.first_defined_level, None);
    }

    #[test]
    fn domain_scan_levels() {
        let a = alphabet(&[2]);
        let cfg = TestConfig::default();
        let poly = parse("X1_1*X1_2 + 3", &a).unwrap();
        assert_eq!(domain_scan(&poly, &a, &cfg).unwrap().first_defined_level, Some(1));
        let inv_comm = parse("inv(X1_1*X1_2 - X1_2*X1_1)", &a).unwrap();
        let scan = domain_scan(&inv_comm, &a, &cfg).unwrap();
        assert_eq!(scan.first_defined_level, Some(2));
        assert!(mp_evaluate(&inv_comm, scan.witness.as_ref().unwrap()).unwrap().is_defined());
    }

    #[test]
    fn prime_field_agrees_on_verdict_kind() {
        let a = alphabet(&[2]);
        let e = parse("X1_1*X1_2 - X1_2*X1_1", &a).unwrap();
        let r: ZeroReport<Fp61> = is_zero_in(&e, &a, &TestConfig::default()).unwrap();
        assert!(r.verdict.is_nonzero());
    }

    #[test]
    fn primed_letters_are_sampled() {
        let a = alphabet(&[1, 1]).with_primed(1);
        let pt = sample_point::<Rational>(&a, &[2, 1], &TestConfig::default(), 0);
        assert_eq!(pt.primed_part(1).map(<[_]>::len), Some(1));
        assert!(pt.primed_part(2).is_none());
        let lhs = parse("X1_1' * X2_1 - X2_1 * X1_1'", &a).unwrap();
        assert!(is_zero(&lhs, &a, &TestConfig::default()).unwrap().verdict.is_zero_or_probably());
        let rhs = parse("X1_1' - X1_1", &a).unwrap();
        assert!(is_zero(&rhs, &a, &TestConfig::default()).unwrap().verdict.is_nonzero());
    }
}
