//! Synthetic sparse autoregressions with conditionally heteroscedastic noise.
//!
//! Paths follow
//!
//! ```text
//! Y_t = Σ_{k ∈ S} φ_k Y_{t−k} + ε_t,      ε_t = σ_t Z_t,   Z_t ~ N(0,1)
//! ```
//!
//! with a geometric-in-√k coefficient profile over the support `S`,
//!
//! ```text
//! φ_k = mass · (φ⁻¹ − 1) · φ^{√k},
//! ```
//!
//! chosen so that over the square-number support the coefficients sum to
//! `mass` (each √k is then an integer and the sum telescopes to a geometric
//! series). The noise scale follows a first-power ARCH recursion, optionally
//! with a threshold (leverage) term that reacts to negative shocks only, or
//! is held constant for homoscedastic baselines.
//!
//! Generation is fully deterministic in `(seed, stream)`: paths are drawn
//! from a counter-based generator so Monte Carlo replications can use one
//! seed with distinct streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest lag the path generator will feed back. The coefficient profile is
/// summable, so truncating beyond this changes the law of the process by
/// less than the `f64` noise floor of the studies that use it.
pub const GENERATION_LAG_CAP: usize = 2500;

/// Which lags carry nonzero autoregressive coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportRule {
    /// Lags 1, 4, 9, 16, …: sparse but unbounded, the benchmark choice.
    SquareNumbers,
    /// An explicit lag list.
    Explicit(Vec<usize>),
}

impl SupportRule {
    /// Support lags up to and including `horizon`, sorted.
    pub fn lags(&self, horizon: usize) -> Result<Vec<usize>> {
        match self {
            SupportRule::SquareNumbers => {
                Ok((1..).map(|j| j * j).take_while(|&k| k <= horizon).collect())
            }
            SupportRule::Explicit(lags) => {
                let mut out = lags.clone();
                out.sort_unstable();
                if out.first() == Some(&0) {
                    return Err(Error::InvalidLagSet("support contains lag 0".into()));
                }
                if out.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidLagSet("support contains a duplicate".into()));
                }
                out.retain(|&k| k <= horizon);
                Ok(out)
            }
        }
    }
}

/// Conditional-scale recursion for the innovations.
#[derive(Debug, Clone, PartialEq)]
pub enum VolKind<F: Scalar> {
    /// Homoscedastic noise with the given scale.
    Constant(F),
    /// `σ_t = α₀ + Σ_k α_k |ε_{t−k}|`.
    Arch { alpha0: F, alpha: Vec<F> },
    /// `σ_t = α₀ + Σ_k α_k |ε_{t−k}| + Σ_k α⁻_k 1{ε_{t−k} < 0} |ε_{t−k}|`.
    Tarch {
        alpha0: F,
        alpha: Vec<F>,
        alpha_neg: Vec<F>,
    },
}

impl<F: Scalar> VolKind<F> {
    /// The benchmark symmetric recursion: `σ_t = 0.01 + 0.49|ε_{t−1}| +
    /// 0.49|ε_{t−2}|`.
    pub fn arch_default() -> Self {
        VolKind::Arch {
            alpha0: F::cast(0.01),
            alpha: vec![F::cast(0.49), F::cast(0.49)],
        }
    }

    /// The benchmark threshold recursion with the same persistence as
    /// [`VolKind::arch_default`] but twice the response to negative shocks.
    pub fn tarch_default() -> Self {
        VolKind::Tarch {
            alpha0: F::cast(0.01),
            alpha: vec![F::cast(0.245), F::cast(0.245)],
            alpha_neg: vec![F::cast(0.49), F::cast(0.49)],
        }
    }

    /// Largest lag the recursion reads.
    pub fn max_lag(&self) -> usize {
        match self {
            VolKind::Constant(_) => 0,
            VolKind::Arch { alpha, .. } => alpha.len(),
            VolKind::Tarch {
                alpha, alpha_neg, ..
            } => alpha.len().max(alpha_neg.len()),
        }
    }

    fn validate(&self) -> Result<()> {
        let check_nonneg = |name: &str, vals: &[F]| -> Result<()> {
            if let Some(v) = vals.iter().find(|v| !(**v >= F::zero()) || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} coefficients must be finite and non-negative, got {v}"
                )));
            }
            Ok(())
        };
        match self {
            VolKind::Constant(c) => {
                if !(*c > F::zero() && c.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "constant scale must be positive, got {c}"
                    )));
                }
            }
            VolKind::Arch { alpha0, alpha } => {
                if !(*alpha0 > F::zero() && alpha0.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha0 must be positive, got {alpha0}"
                    )));
                }
                check_nonneg("arch", alpha)?;
            }
            VolKind::Tarch {
                alpha0,
                alpha,
                alpha_neg,
            } => {
                if !(*alpha0 > F::zero() && alpha0.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha0 must be positive, got {alpha0}"
                    )));
                }
                check_nonneg("arch", alpha)?;
                check_nonneg("threshold", alpha_neg)?;
            }
        }
        Ok(())
    }

    /// Scale at absolute time `t` given the innovation history `eps[..t]`
    /// (zero before time 0).
    fn sigma_at(&self, eps: &[F], t: usize) -> F {
        match self {
            VolKind::Constant(c) => *c,
            VolKind::Arch { alpha0, alpha } => {
                let mut s = *alpha0;
                for (k, &a) in alpha.iter().enumerate() {
                    let lag = k + 1;
                    if lag <= t {
                        s += a * eps[t - lag].abs();
                    }
                }
                s
            }
            VolKind::Tarch {
                alpha0,
                alpha,
                alpha_neg,
            } => {
                let mut s = *alpha0;
                for (k, &a) in alpha.iter().enumerate() {
                    let lag = k + 1;
                    if lag <= t {
                        s += a * eps[t - lag].abs();
                    }
                }
                for (k, &a) in alpha_neg.iter().enumerate() {
                    let lag = k + 1;
                    if lag <= t && eps[t - lag] < F::zero() {
                        s += a * eps[t - lag].abs();
                    }
                }
                s
            }
        }
    }
}

/// Full description of one synthetic process.
#[derive(Debug, Clone)]
pub struct DgpSpec<F: Scalar> {
    /// Observations to keep after burn-in.
    pub n: usize,
    /// Discarded warm-up steps; must be at least twice the largest
    /// autoregressive lag actually generated.
    pub burn_in: usize,
    /// Geometric decay φ ∈ (0, 1) of the coefficient profile.
    pub phi: F,
    /// Total coefficient mass over the square-number support; values below 1
    /// keep the mean recursion stable.
    pub mass: F,
    /// Which lags carry coefficients.
    pub support: SupportRule,
    /// Innovation-scale recursion.
    pub vol: VolKind<F>,
    /// Base RNG seed.
    pub seed: u64,
    /// RNG stream, so replications can share a seed.
    pub stream: u64,
}

impl<F: Scalar> DgpSpec<F> {
    /// Benchmark process with square-number support and symmetric ARCH noise.
    pub fn benchmark_arch(n: usize, seed: u64) -> Self {
        Self {
            n,
            burn_in: 5000,
            phi: F::cast(0.85),
            mass: F::cast(0.95),
            support: SupportRule::SquareNumbers,
            vol: VolKind::arch_default(),
            seed,
            stream: 0,
        }
    }

    /// Benchmark process with square-number support and threshold-ARCH noise.
    pub fn benchmark_tarch(n: usize, seed: u64) -> Self {
        Self {
            vol: VolKind::tarch_default(),
            ..Self::benchmark_arch(n, seed)
        }
    }

    /// Same process, different RNG stream.
    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    /// True autoregressive coefficients `(k, φ_k)` up to `horizon`.
    ///
    /// Over the square-number support the total mass across *all* lags is
    /// exactly `mass`; partial sums approach it geometrically, so a horizon
    /// of `85² = 7225` already captures it to within one part in a million.
    pub fn ar_coefficients(&self, horizon: usize) -> Result<Vec<(usize, F)>> {
        self.validate()?;
        let scale = self.mass * (self.phi.recip() - F::one());
        Ok(self
            .support
            .lags(horizon)?
            .into_iter()
            .map(|k| (k, scale * self.phi.powf(F::of(k).sqrt())))
            .collect())
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !(self.phi > F::zero() && self.phi < F::one()) {
            return Err(Error::InvalidParameter(format!(
                "phi must lie in (0, 1), got {}",
                self.phi
            )));
        }
        if !(self.mass > F::zero() && self.mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        self.vol.validate()
    }
}

/// One simulated path, burn-in already discarded; all three vectors have
/// length `spec.n`.
#[derive(Debug, Clone)]
pub struct SimulatedPath<F: Scalar> {
    /// Observed series.
    pub y: Vec<F>,
    /// Innovations ε_t = σ_t Z_t.
    pub eps: Vec<F>,
    /// True conditional scales σ_t.
    pub sigma: Vec<F>,
}

/// Draws one path of `spec`.
pub fn simulate_path<F: Scalar>(spec: &DgpSpec<F>) -> Result<SimulatedPath<F>>
where
    StandardNormal: Distribution<F>,
{
    spec.validate()?;
    let coefs = spec.ar_coefficients(GENERATION_LAG_CAP)?;
    let gen_lag = coefs.last().map_or(0, |&(k, _)| k);
    if spec.burn_in < 2 * gen_lag {
        return Err(Error::InvalidParameter(format!(
            "burn-in {} is shorter than twice the largest generated lag {gen_lag}",
            spec.burn_in
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);

    let total = spec.burn_in + spec.n;
    let mut y = vec![F::zero(); total];
    let mut eps = vec![F::zero(); total];
    let mut sigma = vec![F::zero(); total];
    let blow_up = F::cast(1e12);
    for t in 0..total {
        let s = spec.vol.sigma_at(&eps, t);
        let z: F = StandardNormal.sample(&mut rng);
        let e = s * z;
        let mut v = e;
        for &(k, phi_k) in &coefs {
            if k <= t {
                v += phi_k * y[t - k];
            }
        }
        if !v.is_finite() || v.abs() > blow_up {
            return Err(Error::ExplosivePath { t });
        }
        sigma[t] = s;
        eps[t] = e;
        y[t] = v;
    }
    Ok(SimulatedPath {
        y: y.split_off(spec.burn_in),
        eps: eps.split_off(spec.burn_in),
        sigma: sigma.split_off(spec.burn_in),
    })
}
