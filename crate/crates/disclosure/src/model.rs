//! Game primitives: the binary state, the finite signal set with its
//! per-state distributions and likelihood ratios, and run configuration.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for distribution normalization checks.
pub const DIST_TOL: f64 = 1e-12;
/// Two likelihood ratios closer than this are treated as ties and rejected.
pub const RATIO_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum State {
    High,
    Low,
}

impl State {
    pub const BOTH: [State; 2] = [State::High, State::Low];
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("likelihood ratios of signals {0} and {1} coincide within 1e-12")]
    NonDistinctRatios(usize, usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("signal probability at index {0} is degenerate (0 or 1)")]
    DegenerateSignal(usize),
    #[error("failed to generate a model meeting the ratio separation after {0} attempts")]
    GenerationFailed(usize),
    #[error("invalid prior: must lie strictly inside (0,1)")]
    InvalidPrior,
    #[error("invalid friction spec: {0}")]
    InvalidFriction(String),
}

/// Exact-rational mirror of a [`SignalModel`], used by the cutoff formulas
/// when inputs are supplied as fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    pub f_high: Vec<BigRational>,
    pub f_low: Vec<BigRational>,
    pub prior: BigRational,
}

impl ExactModel {
    pub fn ratio(&self, i: usize) -> BigRational {
        &self.f_high[i] / &self.f_low[i]
    }
}

/// Signal structure of the game: `l` signal realizations, their per-state
/// probabilities, the prior on the high state, and cached likelihood ratios.
///
/// Signals are re-indexed at construction so that ratios are strictly
/// decreasing; all public accessors refer to that canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    l: usize,
    f_high: Vec<f64>,
    f_low: Vec<f64>,
    prior: f64,
    ratios: Vec<f64>,
    exact: Option<ExactModel>,
}

impl SignalModel {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn f_high(&self) -> &[f64] {
        &self.f_high
    }

    pub fn f_low(&self) -> &[f64] {
        &self.f_low
    }

    /// Likelihood ratios, strictly decreasing in the signal index.
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn f(&self, state: State, i: usize) -> f64 {
        match state {
            State::High => self.f_high[i],
            State::Low => self.f_low[i],
        }
    }

    pub fn f_vec(&self, state: State) -> &[f64] {
        match state {
            State::High => &self.f_high,
            State::Low => &self.f_low,
        }
    }

    /// Cumulative probability of the first `n` signals, `sum_{i<n} f_{theta,i}`.
    pub fn q(&self, state: State, n: usize) -> f64 {
        self.f_vec(state)[..n].iter().sum()
    }

    pub fn exact(&self) -> Option<&ExactModel> {
        self.exact.as_ref()
    }

    pub fn prior_odds(&self) -> f64 {
        self.prior / (1.0 - self.prior)
    }
}

fn check_distribution(name: &str, v: &[f64]) -> Result<(), ModelError> {
    for (i, &p) in v.iter().enumerate() {
        if !p.is_finite() || p <= 0.0 {
            return Err(ModelError::InvalidDistribution(format!(
                "{name}[{i}] = {p} is not strictly positive"
            )));
        }
        if p >= 1.0 {
            return Err(ModelError::DegenerateSignal(i));
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > DIST_TOL {
        return Err(ModelError::InvalidDistribution(format!(
            "{name} sums to {sum}, not 1 within 1e-12"
        )));
    }
    Ok(())
}

/// Validates the primitives and returns the canonical model, with signals
/// re-indexed so likelihood ratios are strictly decreasing.
pub fn validate_model(
    l: usize,
    f_high: Vec<f64>,
    f_low: Vec<f64>,
    prior: f64,
) -> Result<SignalModel, ModelError> {
    validate_model_with_exact(l, f_high, f_low, prior, None)
}

/// As [`validate_model`], carrying an exact-rational mirror alongside.
/// The mirror must agree with the float entries; it is permuted in lockstep.
pub fn validate_model_with_exact(
    l: usize,
    f_high: Vec<f64>,
    f_low: Vec<f64>,
    prior: f64,
    exact: Option<ExactModel>,
) -> Result<SignalModel, ModelError> {
    if l < 2 {
        return Err(ModelError::InvalidDistribution(
            "need at least two signal realizations".into(),
        ));
    }
    if f_high.len() != l || f_low.len() != l {
        return Err(ModelError::InvalidDistribution(format!(
            "expected vectors of length {l}, got {} and {}",
            f_high.len(),
            f_low.len()
        )));
    }
    if !(prior > 0.0 && prior < 1.0) {
        return Err(ModelError::InvalidPrior);
    }
    check_distribution("f_high", &f_high)?;
    check_distribution("f_low", &f_low)?;
    if let Some(ref ex) = exact {
        check_exact(l, ex)?;
    }

    let mut order: Vec<usize> = (0..l).collect();
    let raw_ratio = |i: usize| f_high[i] / f_low[i];
    order.sort_by(|&a, &b| raw_ratio(b).partial_cmp(&raw_ratio(a)).unwrap());

    let ratios: Vec<f64> = order.iter().map(|&i| raw_ratio(i)).collect();
    for k in 0..l - 1 {
        if (ratios[k] - ratios[k + 1]).abs() <= RATIO_TIE_TOL {
            let (a, b) = (order[k], order[k + 1]);
            return Err(ModelError::NonDistinctRatios(a.min(b), a.max(b)));
        }
    }

    let permute = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let exact = exact.map(|ex| ExactModel {
        f_high: order.iter().map(|&i| ex.f_high[i].clone()).collect(),
        f_low: order.iter().map(|&i| ex.f_low[i].clone()).collect(),
        prior: ex.prior,
    });
    Ok(SignalModel {
        l,
        f_high: permute(&f_high),
        f_low: permute(&f_low),
        prior,
        ratios,
        exact,
    })
}

fn check_exact(l: usize, ex: &ExactModel) -> Result<(), ModelError> {
    if ex.f_high.len() != l || ex.f_low.len() != l {
        return Err(ModelError::InvalidDistribution(
            "exact vectors have the wrong length".into(),
        ));
    }
    for v in [&ex.f_high, &ex.f_low] {
        let sum: BigRational = v.iter().sum();
        if !sum.is_one() {
            return Err(ModelError::InvalidDistribution(
                "exact distribution does not sum to 1".into(),
            ));
        }
        if v.iter().any(|p| !p.is_positive()) {
            return Err(ModelError::InvalidDistribution(
                "exact distribution has a non-positive entry".into(),
            ));
        }
    }
    if !ex.prior.is_positive() || ex.prior >= BigRational::one() {
        return Err(ModelError::InvalidPrior);
    }
    Ok(())
}

/// Deterministic random model generator for property tests.
///
/// `ratio_gap` is the minimal separation required between consecutive
/// likelihood ratios after sorting. Fails after a bounded number of retries
/// when the separation is infeasible.
pub fn random_model(seed: u64, l: usize, ratio_gap: f64) -> Result<SignalModel, ModelError> {
    const MAX_ATTEMPTS: usize = 500;
    assert!(l >= 2, "need l >= 2");
    assert!(ratio_gap > 0.0, "ratio_gap must be positive");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let draw = |rng: &mut ChaCha12Rng| -> Vec<f64> {
            let raw: Vec<f64> = (0..l).map(|_| rng.gen_range(0.05f64..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        };
        let f_high = draw(&mut rng);
        let f_low = draw(&mut rng);
        let prior = rng.gen_range(0.05f64..0.95);
        let model = match validate_model(l, f_high, f_low, prior) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let separated = model.ratios().windows(2).all(|w| w[0] - w[1] >= ratio_gap);
        // Any valid model has max ratio > 1 (ratios average to 1 under f_low),
        // so only the separation needs a retry loop.
        if separated {
            return Ok(model);
        }
    }
    Err(ModelError::GenerationFailed(MAX_ATTEMPTS))
}

/// Message-dependent communication success rate: `delta(h) = exp(-scale * p(len(h)))`
/// where `p` is weakly increasing in the message length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionSpec {
    /// The scale parameter multiplying `p`.
    pub scale: f64,
    /// `p` values by message length; lengths beyond the table reuse the last entry.
    pub p_by_len: Vec<f64>,
}

impl FrictionSpec {
    pub fn new(scale: f64, p_by_len: Vec<f64>) -> Result<Self, ModelError> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(ModelError::InvalidFriction("scale must be positive".into()));
        }
        if p_by_len.is_empty() {
            return Err(ModelError::InvalidFriction("p table is empty".into()));
        }
        if p_by_len.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(ModelError::InvalidFriction(
                "p values must be positive and finite".into(),
            ));
        }
        if p_by_len.windows(2).any(|w| w[1] < w[0]) {
            return Err(ModelError::InvalidFriction(
                "p must be weakly increasing in message length".into(),
            ));
        }
        Ok(FrictionSpec { scale, p_by_len })
    }

    pub fn p(&self, len: usize) -> f64 {
        let idx = len.min(self.p_by_len.len() - 1);
        self.p_by_len[idx]
    }

    pub fn p_lower(&self) -> f64 {
        self.p_by_len[0]
    }

    pub fn p_upper(&self) -> f64 {
        *self.p_by_len.last().unwrap()
    }

    pub fn delta(&self, len: usize) -> f64 {
        (-self.scale * self.p(len)).exp()
    }
}

/// Communication success rate: either a constant `delta` or message-dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Friction {
    Constant { delta: f64 },
    MessageDependent(FrictionSpec),
}

impl Friction {
    pub fn constant(delta: f64) -> Result<Self, ModelError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ModelError::InvalidFriction(
                "delta must lie strictly inside (0,1)".into(),
            ));
        }
        Ok(Friction::Constant { delta })
    }

    /// Success probability for a message of the given length.
    pub fn delta_for_len(&self, len: usize) -> f64 {
        match self {
            Friction::Constant { delta } => *delta,
            Friction::MessageDependent(spec) => spec.delta(len),
        }
    }

    /// Upper bound on the success rate over all messages; this is the
    /// contraction modulus of the history chain.
    pub fn delta_max(&self) -> f64 {
        match self {
            Friction::Constant { delta } => *delta,
            Friction::MessageDependent(spec) => spec.delta(0),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Friction::Constant { .. })
    }
}

/// Numerical tolerances shared across solvers and verifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Total-variation tolerance for the fixed-point solver.
    pub fixed_point_tv: f64,
    /// Strictness margin separating strict from weak verdicts.
    pub strict_margin: f64,
    /// Root-finding tolerance for cutoff bisection.
    pub root_finding: f64,
    /// Maximum acceptable truncation tail mass in verification operations.
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fixed_point_tv: 1e-12,
            strict_margin: 1e-9,
            root_finding: 1e-12,
            tail: 1e-8,
        }
    }
}

/// Run configuration: friction, optional disclosure cap, truncation depth.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub friction: Friction,
    /// Maximum number of signals disclosable per message, if any.
    pub cap: Option<u32>,
    /// Maximum total history length retained in computations.
    pub truncation: usize,
    pub tolerances: Tolerances,
}

impl GameConfig {
    pub fn new(friction: Friction, truncation: usize) -> Self {
        assert!(truncation >= 1, "truncation must be at least 1");
        GameConfig {
            friction,
            cap: None,
            truncation,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_constant_delta(delta: f64, truncation: usize) -> Self {
        Self::new(
            Friction::constant(delta).expect("delta in (0,1)"),
            truncation,
        )
    }

    pub fn with_cap(mut self, cap: u32) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn with_tail_tol(mut self, tail: f64) -> Self {
        self.tolerances.tail = tail;
        self
    }
}

/// Picks a truncation depth `T` with `delta_max^(T+1)` below `tail_tol`.
pub fn truncation_for_tail(delta_max: f64, tail_tol: f64) -> usize {
    assert!(delta_max > 0.0 && delta_max < 1.0);
    assert!(tail_tol > 0.0 && tail_tol < 1.0);
    let t = tail_tol.ln() / delta_max.ln();
    (t.ceil() as usize).max(1)
}

// --- model file I/O ---------------------------------------------------------

/// One number in a model file: a plain decimal or a `"p/q"` fraction string.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum NumberOrFraction {
    Number(f64),
    Fraction(String),
}

impl NumberOrFraction {
    fn as_f64(&self) -> Result<f64, ModelError> {
        match self {
            NumberOrFraction::Number(x) => Ok(*x),
            NumberOrFraction::Fraction(s) => {
                let r = parse_fraction(s)?;
                Ok(rational_to_f64(&r))
            }
        }
    }

    fn as_exact(&self) -> Option<BigRational> {
        match self {
            NumberOrFraction::Number(_) => None,
            NumberOrFraction::Fraction(s) => parse_fraction(s).ok(),
        }
    }
}

fn parse_fraction(s: &str) -> Result<BigRational, ModelError> {
    let mut parts = s.splitn(2, '/');
    let num = parts.next().unwrap_or("").trim();
    let den = parts.next().unwrap_or("1").trim();
    let num: BigInt = num
        .parse()
        .map_err(|_| ModelError::InvalidDistribution(format!("bad fraction {s:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| ModelError::InvalidDistribution(format!("bad fraction {s:?}")))?;
    if den.is_zero() {
        return Err(ModelError::InvalidDistribution(format!(
            "zero denominator in {s:?}"
        )));
    }
    Ok(BigRational::new(num, den))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // Values in this domain are probabilities; direct conversion is adequate.
    bigint_to_f64(num) / bigint_to_f64(den)
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    x.to_string().parse().unwrap_or(f64::NAN)
}

/// On-disk model schema.
#[derive(Debug, Deserialize, Serialize)]
pub struct ModelFile {
    pub l: usize,
    pub f_high: Vec<NumberOrFraction>,
    pub f_low: Vec<NumberOrFraction>,
    pub prior: NumberOrFraction,
}

impl ModelFile {
    /// Builds the validated model. The exact-rational mirror is attached when
    /// every entry was given as a fraction string.
    pub fn into_model(self) -> Result<SignalModel, ModelError> {
        let f_high: Vec<f64> = self
            .f_high
            .iter()
            .map(|n| n.as_f64())
            .collect::<Result<_, _>>()?;
        let f_low: Vec<f64> = self
            .f_low
            .iter()
            .map(|n| n.as_f64())
            .collect::<Result<_, _>>()?;
        let prior = self.prior.as_f64()?;
        let exact_high: Option<Vec<BigRational>> =
            self.f_high.iter().map(|n| n.as_exact()).collect();
        let exact_low: Option<Vec<BigRational>> = self.f_low.iter().map(|n| n.as_exact()).collect();
        let exact_prior = self.prior.as_exact();
        let exact = match (exact_high, exact_low, exact_prior) {
            (Some(h), Some(lo), Some(p)) => Some(ExactModel {
                f_high: h,
                f_low: lo,
                prior: p,
            }),
            _ => None,
        };
        validate_model_with_exact(self.l, f_high, f_low, prior, exact)
    }
}

pub fn load_model(path: &std::path::Path) -> Result<SignalModel, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read model file {}: {e}", path.display()))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| format!("malformed model file {}: {e}", path.display()))?;
    file.into_model()
        .map_err(|e| format!("invalid model in {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn model_a() -> SignalModel {
        validate_model(2, vec![0.7, 0.3], vec![0.3, 0.7], 0.5).unwrap()
    }

    #[test]
    fn model_a_ratios() {
        let m = model_a();
        assert!((m.ratios()[0] - 7.0 / 3.0).abs() < 1e-15);
        assert!((m.ratios()[1] - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(m.f_high(), &[0.7, 0.3]);
    }

    #[test]
    fn reindexes_by_decreasing_ratio() {
        let m = validate_model(2, vec![0.3, 0.7], vec![0.7, 0.3], 0.5).unwrap();
        // Signals swapped so the first has ratio 7/3.
        assert!((m.ratios()[0] - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.f_high(), &[0.7, 0.3]);
        assert_eq!(m.f_low(), &[0.3, 0.7]);
    }

    #[test]
    fn equal_ratios_rejected() {
        let err = validate_model(2, vec![0.5, 0.5], vec![0.5, 0.5], 0.5).unwrap_err();
        assert!(matches!(err, ModelError::NonDistinctRatios(_, _)));
    }

    #[test]
    fn bad_normalization_rejected() {
        let err = validate_model(2, vec![0.7, 0.4], vec![0.3, 0.7], 0.5).unwrap_err();
        assert!(matches!(err, ModelError::InvalidDistribution(_)));
    }

    #[test]
    fn zero_entry_rejected() {
        let err = validate_model(2, vec![1.0, 0.0], vec![0.3, 0.7], 0.5).unwrap_err();
        assert!(matches!(
            err,
            ModelError::InvalidDistribution(_) | ModelError::DegenerateSignal(_)
        ));
    }

    #[test]
    fn random_model_is_deterministic_and_valid() {
        let a = random_model(1, 3, 0.05).unwrap();
        let b = random_model(1, 3, 0.05).unwrap();
        assert_eq!(a, b);
        assert!(a.ratios().windows(2).all(|w| w[0] > w[1] + 0.05));
        assert!(a.ratios()[0] > 1.0);
    }

    #[test]
    fn random_model_infeasible_gap_fails() {
        let err = random_model(2, 2, 1000.0).unwrap_err();
        assert!(matches!(err, ModelError::GenerationFailed(_)));
    }

    #[test]
    fn revalidation_is_identity() {
        let m = model_a();
        let again =
            validate_model(m.l(), m.f_high().to_vec(), m.f_low().to_vec(), m.prior()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn model_file_fractions_give_exact_mirror() {
        let json = r#"{"l":2,"f_high":["7/10","3/10"],"f_low":["3/10","7/10"],"prior":"1/2"}"#;
        let file: ModelFile = serde_json::from_str(json).unwrap();
        let m = file.into_model().unwrap();
        let ex = m.exact().unwrap();
        assert_eq!(
            ex.ratio(0),
            BigRational::new(BigInt::from(7), BigInt::from(3))
        );
        assert!((m.f_high()[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn model_file_decimals_have_no_exact_mirror() {
        let json = r#"{"l":2,"f_high":[0.7,0.3],"f_low":[0.3,0.7],"prior":0.5}"#;
        let file: ModelFile = serde_json::from_str(json).unwrap();
        let m = file.into_model().unwrap();
        assert!(m.exact().is_none());
    }

    #[test]
    fn friction_spec_validation() {
        assert!(FrictionSpec::new(0.5, vec![1.0, 2.0]).is_ok());
        assert!(FrictionSpec::new(0.5, vec![2.0, 1.0]).is_err());
        assert!(FrictionSpec::new(-0.5, vec![1.0]).is_err());
        let spec = FrictionSpec::new(0.5, vec![1.0, 2.0]).unwrap();
        assert!((spec.delta(0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((spec.delta(5) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(spec.delta(5) < spec.delta(0));
    }

    #[test]
    fn truncation_bound() {
        let t = truncation_for_tail(0.5, 1e-10);
        assert!(0.5f64.powi(t as i32 + 1) < 1e-10);
    }
}
