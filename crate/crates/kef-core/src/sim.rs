//! Monte Carlo samplers for killed exponential functionals and paths of the
//! generalized Ornstein-Uhlenbeck process.
//!
//! Two independent schemes produce draws of `V`:
//!
//! * [`SamplerKind::Direct`] integrates `e^{-ξ_{s-}} dη_s` up to the killing
//!   time, working with the triplet of `ξ` itself;
//! * [`SamplerKind::Sde`] builds the killed partner `Ũ = kill(xi_to_u(ξ), q)`,
//!   realizes the killing through an explicit independent Poisson clock, and
//!   integrates the stochastic exponential `E(Ũ)_{s-} dη_s`.
//!
//! Both use exact compound-Poisson jump times. Segments between jumps are
//! integrated in closed form whenever the log-integrand is piecewise linear
//! (no Gaussian part in `ξ`), including exact sampling of Wiener integrals
//! of `η`'s Brownian part; otherwise a left-point Euler rule with step
//! bounded by `SimConfig::step` is used, evaluating the integrand at the
//! left endpoint so jumps act strictly after their arrival.

use crate::error::{KefError, Result};
use crate::levy::{
    kill, q0_sufficient_convergence, xi_to_u, JumpSource, LevyTriplet, ProcessSpec,
};
use crate::quad::Tol;
use crate::rng::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Time horizon of the integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Exponential killing; requires `q > 0`.
    Killed,
    /// Fixed horizon for `q = 0` (truncation of the improper integral).
    FixedT(f64),
}

/// Treatment of sub-cutoff jumps of infinite-activity measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpMode {
    /// Drop jumps below the cutoff, add their mean rate to the drift.
    DropCompensate,
    /// Additionally add a Brownian term matching their variance rate.
    GaussianApprox,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    /// Euler step bound for diffusive segments.
    pub step: f64,
    /// Small-jump cutoff for infinite-activity measures.
    pub eps: f64,
    pub horizon: Horizon,
    pub small_jump_mode: SmallJumpMode,
    pub master_seed: u64,
    /// Skip the q = 0 convergence check (user-asserted convergence).
    #[serde(default)]
    pub assume_convergence: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step: 1e-3,
            eps: 1e-4,
            horizon: Horizon::Killed,
            small_jump_mode: SmallJumpMode::DropCompensate,
            master_seed: 0,
            assume_convergence: false,
        }
    }
}

/// Truncation-bias bookkeeping attached to every batch.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BiasNote {
    /// `∫_{0<|x|<eps} x ν_ξ(dx)`: drift rate of dropped ξ-jumps.
    pub xi_eps_drift: f64,
    /// Same for η.
    pub eta_eps_drift: f64,
    /// Combined variance rate of dropped jumps (matched in GaussianApprox mode).
    pub eps_var: f64,
    /// Heuristic tail indicator `e^{-E[ξ₁]·T}` for fixed-horizon runs; no
    /// rigorous bound is attempted.
    pub horizon_tail_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Result of a Monte Carlo batch: i.i.d. draws of `V` plus provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub master_seed: u64,
    pub bias: BiasNote,
}

impl SampleBatch {
    pub fn from_values(values: Vec<f64>) -> Self {
        SampleBatch {
            values,
            master_seed: 0,
            bias: BiasNote::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            / (self.values.len() as f64 - 1.0)
    }

    /// Standard error of the sample mean.
    pub fn mc_se(&self) -> f64 {
        (self.variance() / self.values.len() as f64).sqrt()
    }

    /// Share of exact zeros, the empirical estimate of an atom at 0.
    pub fn atom0_share(&self) -> f64 {
        self.values.iter().filter(|v| **v == 0.0).count() as f64 / self.values.len() as f64
    }
}

/// A process reduced to simulation primitives: drift, Gaussian scale and
/// exact jump sources (plus dropped small-jump statistics).
#[derive(Clone, Debug)]
pub struct Engine {
    pub drift: f64,
    pub sigma: f64,
    pub sources: Vec<JumpSource>,
    pub small_mean: f64,
    pub small_var: f64,
}

impl Engine {
    pub fn build(t: &LevyTriplet, cfg: &SimConfig) -> Result<Engine> {
        let tol = Tol::default();
        if t.nu.infinite_activity() && !(cfg.eps > 0.0) {
            return Err(KefError::config(
                "infinite-activity jump measure requires eps > 0",
            ));
        }
        let plan = t.nu.jump_plan(cfg.eps, tol)?;
        let mut drift = t.drift0()?;
        let mut sigma2 = t.sigma2;
        match cfg.small_jump_mode {
            SmallJumpMode::DropCompensate => drift += plan.small_mean,
            SmallJumpMode::GaussianApprox => {
                drift += plan.small_mean;
                sigma2 += plan.small_var;
            }
        }
        Ok(Engine {
            drift,
            sigma: sigma2.sqrt(),
            sources: plan.sources,
            small_mean: plan.small_mean,
            small_var: plan.small_var,
        })
    }

    fn is_diffusive(&self) -> bool {
        self.sigma > 0.0
    }
}

/// One process increment over `dt`, with the jump times realized inside.
#[derive(Clone, Debug)]
pub struct Increment {
    pub value: f64,
    /// `(time in (0, dt], size)` pairs, time-ordered.
    pub jumps: Vec<(f64, f64)>,
}

/// Sample one increment of the process over `dt`, returning the jump times
/// so integrators can evaluate the integrand left of each jump.
pub fn sample_increment(
    spec: &ProcessSpec,
    dt: f64,
    cfg: &SimConfig,
    rng: &mut Rng,
) -> Result<Increment> {
    if !(dt > 0.0) {
        return Err(KefError::domain("sample_increment: dt must be > 0"));
    }
    let eng = Engine::build(&spec.triplet, cfg)?;
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    for src in &eng.sources {
        let mut t = rng.exponential(src.rate);
        while t <= dt {
            jumps.push((t, src.kind.sample(rng)));
            t += rng.exponential(src.rate);
        }
    }
    jumps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let gauss = if eng.is_diffusive() {
        eng.sigma * dt.sqrt() * rng.normal()
    } else {
        0.0
    };
    let value = eng.drift * dt + gauss + jumps.iter().map(|j| j.1).sum::<f64>();
    Ok(Increment { value, jumps })
}

/// How a jump of the driving process enters the log-integrand.
#[derive(Clone, Copy)]
enum LogJump {
    /// Direct scheme: `log W -= jump of ξ`.
    NegateXi,
    /// Stochastic-exponential scheme: `log W += ln(1 + jump of U)`.
    Ln1pU,
}

struct Integrator<'a> {
    /// Drift of the log-integrand between jumps.
    w_slope: f64,
    /// Diffusion coefficient of the log-integrand.
    w_diff: f64,
    w_sources: &'a [JumpSource],
    w_jump: LogJump,
    eta: &'a Engine,
    step: f64,
}

impl<'a> Integrator<'a> {
    /// Integrate `∫_0^T W_{s-} dη_s` with `W = e^{log w}`.
    fn run(&self, horizon: f64, rng: &mut Rng) -> f64 {
        let mut t = 0.0f64;
        let mut logw = 0.0f64;
        let mut v = 0.0f64;

        // next arrival time per source; η sources listed after W sources
        let nw = self.w_sources.len();
        let mut next: Vec<f64> = Vec::with_capacity(nw + self.eta.sources.len());
        for s in self.w_sources.iter().chain(self.eta.sources.iter()) {
            next.push(rng.exponential(s.rate));
        }

        loop {
            // earliest event; η events processed before W events at a tie so
            // η jumps see the pre-jump integrand
            let mut ev_idx: Option<usize> = None;
            let mut ev_t = horizon;
            for (i, &ti) in next.iter().enumerate() {
                let is_eta = i >= nw;
                if ti < ev_t || (ti == ev_t && is_eta && ev_idx.map(|j| j < nw).unwrap_or(false)) {
                    ev_t = ti;
                    ev_idx = Some(i);
                }
            }
            if ev_t > horizon {
                ev_idx = None;
                ev_t = horizon;
            }

            // advance over the continuous segment [t, ev_t)
            let seg = ev_t - t;
            if seg > 0.0 {
                if self.w_diff > 0.0 {
                    // left-point Euler with step bound
                    let nsub = (seg / self.step).ceil().max(1.0) as usize;
                    let dt = seg / nsub as f64;
                    let sq = dt.sqrt();
                    for _ in 0..nsub {
                        let w = logw.exp();
                        let mut deta = self.eta.drift * dt;
                        if self.eta.sigma > 0.0 {
                            deta += self.eta.sigma * sq * rng.normal();
                        }
                        v += w * deta;
                        logw += self.w_slope * dt + self.w_diff * sq * rng.normal();
                    }
                } else {
                    // piecewise-linear log-integrand: closed-form segment
                    let w = logw.exp();
                    let a = self.w_slope;
                    let i1 = if a == 0.0 { seg } else { (a * seg).exp_m1() / a };
                    v += w * self.eta.drift * i1;
                    if self.eta.sigma > 0.0 {
                        let i2 = if a == 0.0 {
                            seg
                        } else {
                            (2.0 * a * seg).exp_m1() / (2.0 * a)
                        };
                        v += w * self.eta.sigma * i2.sqrt() * rng.normal();
                    }
                    logw += a * seg;
                }
            }
            t = ev_t;

            match ev_idx {
                None => break,
                Some(i) if i >= nw => {
                    // η jump: contributes W_{s-} · jump size
                    let src = &self.eta.sources[i - nw];
                    let y = src.kind.sample(rng);
                    v += logw.exp() * y;
                    next[i] = t + rng.exponential(src.rate);
                }
                Some(i) => {
                    let src = &self.w_sources[i];
                    let x = src.kind.sample(rng);
                    logw += match self.w_jump {
                        LogJump::NegateXi => -x,
                        LogJump::Ln1pU => x.ln_1p(),
                    };
                    next[i] = t + rng.exponential(src.rate);
                }
            }
        }
        v
    }
}

fn validate_horizon(q: f64, cfg: &SimConfig) -> Result<()> {
    match cfg.horizon {
        Horizon::Killed => {
            if !(q > 0.0) {
                return Err(KefError::config(
                    "horizon 'killed' requires q > 0; q = 0 needs the field horizon = {\"fixed_t\": T}",
                ));
            }
        }
        Horizon::FixedT(t) => {
            if q > 0.0 {
                return Err(KefError::config(
                    "horizon 'fixed_t' is for q = 0; use horizon \"killed\" when q > 0",
                ));
            }
            if !(t > 0.0) {
                return Err(KefError::config("fixed_t horizon must be > 0"));
            }
        }
    }
    Ok(())
}

fn horizon_draw(q: f64, cfg: &SimConfig, rng: &mut Rng) -> f64 {
    match cfg.horizon {
        Horizon::Killed => rng.exponential(q),
        Horizon::FixedT(t) => t,
    }
}

fn check_q0_convergence(xi: &LevyTriplet, eta: &LevyTriplet, q: f64, cfg: &SimConfig) -> Result<()> {
    if q == 0.0 && !cfg.assume_convergence && !q0_sufficient_convergence(xi, eta)? {
        return Err(KefError::precondition(
            "q = 0 convergence check failed (need E ξ₁ > 0 and E|η₁| < ∞); \
             pass assume_convergence to override",
        ));
    }
    Ok(())
}

/// Prebuilt state for the direct sampler.
pub struct DirectSampler {
    xi: Engine,
    eta: Engine,
    q: f64,
    cfg: SimConfig,
}

impl DirectSampler {
    pub fn new(xi: &ProcessSpec, eta: &ProcessSpec, q: f64, cfg: &SimConfig) -> Result<Self> {
        if !(q >= 0.0) {
            return Err(KefError::domain("q must be >= 0"));
        }
        validate_horizon(q, cfg)?;
        check_q0_convergence(&xi.triplet, &eta.triplet, q, cfg)?;
        Ok(DirectSampler {
            xi: Engine::build(&xi.triplet, cfg)?,
            eta: Engine::build(&eta.triplet, cfg)?,
            q,
            cfg: *cfg,
        })
    }

    pub fn draw(&self, rng: &mut Rng) -> f64 {
        let horizon = horizon_draw(self.q, &self.cfg, rng);
        let integ = Integrator {
            w_slope: -self.xi.drift,
            w_diff: self.xi.sigma,
            w_sources: &self.xi.sources,
            w_jump: LogJump::NegateXi,
            eta: &self.eta,
            step: self.cfg.step,
        };
        integ.run(horizon, rng)
    }

    fn bias(&self) -> BiasNote {
        BiasNote {
            xi_eps_drift: self.xi.small_mean,
            eta_eps_drift: self.eta.small_mean,
            eps_var: self.xi.small_var + self.eta.small_var,
            horizon_tail_scale: None,
            note: None,
        }
    }
}

/// Prebuilt state for the stochastic-exponential sampler.
pub struct SdeSampler {
    u: Engine,
    u_sigma2: f64,
    eta: Engine,
    kill_rate: f64,
    cfg: SimConfig,
}

impl SdeSampler {
    pub fn new(xi: &ProcessSpec, eta: &ProcessSpec, q: f64, cfg: &SimConfig) -> Result<Self> {
        if !(q > 0.0) {
            return Err(KefError::domain("SDE sampler requires q > 0"));
        }
        let u = xi_to_u(&xi.triplet)?;
        // The killed triplet carries the rate as the atom at -1; realize it
        // as an explicit Poisson clock rather than as a thinning.
        let utilde = kill(&u, q)?;
        let kill_rate = utilde.nu.mass_below(-1.0, false);
        debug_assert!((kill_rate - q).abs() < 1e-12);
        let u_engine = Engine::build(&u, cfg)?;
        Ok(SdeSampler {
            u_sigma2: u.sigma2,
            u: u_engine,
            eta: Engine::build(&eta.triplet, cfg)?,
            kill_rate,
            cfg: *cfg,
        })
    }

    pub fn draw(&self, rng: &mut Rng) -> f64 {
        // first jump of the independent killing clock stops the integral:
        // the stochastic exponential jumps to 0 there and stays
        let t_kill = rng.exponential(self.kill_rate);
        let integ = Integrator {
            // log E(U) drifts at (drift of U) - σ_U²/2 between jumps
            w_slope: self.u.drift - 0.5 * self.u_sigma2,
            w_diff: self.u.sigma,
            w_sources: &self.u.sources,
            w_jump: LogJump::Ln1pU,
            eta: &self.eta,
            step: self.cfg.step,
        };
        integ.run(t_kill, rng)
    }

    fn bias(&self) -> BiasNote {
        BiasNote {
            xi_eps_drift: self.u.small_mean,
            eta_eps_drift: self.eta.small_mean,
            eps_var: self.u.small_var + self.eta.small_var,
            horizon_tail_scale: None,
            note: Some(
                "xi_eps_drift refers to the image measure of U; a.s. convergence of the \
                 stochastic-exponential integral is assumed, not verified"
                    .into(),
            ),
        }
    }
}

/// Which of the two sampling schemes to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Direct,
    Sde,
}

/// Draw one value of `V` with the direct scheme.
pub fn simulate_kef_direct(
    xi: &ProcessSpec,
    eta: &ProcessSpec,
    q: f64,
    cfg: &SimConfig,
    rng: &mut Rng,
) -> Result<f64> {
    Ok(DirectSampler::new(xi, eta, q, cfg)?.draw(rng))
}

/// Draw one value of `V` with the stochastic-exponential scheme.
pub fn simulate_kef_sde(
    xi: &ProcessSpec,
    eta: &ProcessSpec,
    q: f64,
    cfg: &SimConfig,
    rng: &mut Rng,
) -> Result<f64> {
    Ok(SdeSampler::new(xi, eta, q, cfg)?.draw(rng))
}

/// `n` independent draws. Draw `i` uses the substream mixed from
/// `(master_seed, i)`, so output is identical for serial and parallel runs.
pub fn batch(
    xi: &ProcessSpec,
    eta: &ProcessSpec,
    q: f64,
    cfg: &SimConfig,
    kind: SamplerKind,
    n: usize,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(KefError::domain("batch: n must be >= 1"));
    }
    let (values, mut bias) = match kind {
        SamplerKind::Direct => {
            let s = DirectSampler::new(xi, eta, q, cfg)?;
            let values: Vec<f64> = (0..n as u64)
                .into_par_iter()
                .map(|i| s.draw(&mut Rng::substream(cfg.master_seed, i)))
                .collect();
            (values, s.bias())
        }
        SamplerKind::Sde => {
            let s = SdeSampler::new(xi, eta, q, cfg)?;
            let values: Vec<f64> = (0..n as u64)
                .into_par_iter()
                .map(|i| s.draw(&mut Rng::substream(cfg.master_seed, i)))
                .collect();
            (values, s.bias())
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(KefError::Numeric {
            msg: "sampler produced non-finite draws".into(),
            achieved: f64::INFINITY,
            required: 0.0,
        });
    }
    if let Horizon::FixedT(t) = cfg.horizon {
        if let Some(m) = xi.triplet.mean()? {
            bias.horizon_tail_scale = Some((-m * t).exp());
        }
    }
    Ok(SampleBatch {
        values,
        master_seed: cfg.master_seed,
        bias,
    })
}

/// Path of the generalized Ornstein-Uhlenbeck process
/// `X_t = e^{-ξ_t} (∫_0^t e^{ξ_{s-}} dη_s + x0)` sampled on the grid
/// `{0, step_out, 2·step_out, …, T}`.
pub fn simulate_gou_path(
    xi: &ProcessSpec,
    eta: &ProcessSpec,
    x0: f64,
    t_end: f64,
    step_out: f64,
    cfg: &SimConfig,
    rng: &mut Rng,
) -> Result<Vec<(f64, f64)>> {
    if !(t_end > 0.0) {
        return Err(KefError::domain("simulate_gou_path: T must be > 0"));
    }
    let xi_eng = Engine::build(&xi.triplet, cfg)?;
    let eta_eng = Engine::build(&eta.triplet, cfg)?;

    let mut out = Vec::new();
    let mut t = 0.0f64;
    let mut xi_val = 0.0f64;
    // A_t = ∫_0^t e^{+ξ_{s-}} dη_s; the integrand here is e^{+ξ}
    let mut acc = 0.0f64;
    out.push((0.0, x0));

    let mut next: Vec<f64> = xi_eng
        .sources
        .iter()
        .chain(eta_eng.sources.iter())
        .map(|s| rng.exponential(s.rate))
        .collect();
    let nw = xi_eng.sources.len();
    let mut next_out = step_out.min(t_end);

    loop {
        let mut ev_idx = None;
        let mut ev_t = t_end;
        for (i, &ti) in next.iter().enumerate() {
            if ti < ev_t {
                ev_t = ti;
                ev_idx = Some(i);
            }
        }
        let stop = ev_t.min(t_end);

        // walk the segment, emitting grid points as they are crossed
        while t < stop {
            let target = next_out.min(stop);
            let seg = target - t;
            if seg > 0.0 {
                if xi_eng.sigma > 0.0 {
                    let nsub = (seg / cfg.step).ceil().max(1.0) as usize;
                    let dt = seg / nsub as f64;
                    let sq = dt.sqrt();
                    for _ in 0..nsub {
                        let w = xi_val.exp();
                        let mut deta = eta_eng.drift * dt;
                        if eta_eng.sigma > 0.0 {
                            deta += eta_eng.sigma * sq * rng.normal();
                        }
                        acc += w * deta;
                        xi_val += xi_eng.drift * dt + xi_eng.sigma * sq * rng.normal();
                    }
                } else {
                    let a = xi_eng.drift; // slope of +ξ
                    let w = xi_val.exp();
                    let i1 = if a == 0.0 { seg } else { (a * seg).exp_m1() / a };
                    acc += w * eta_eng.drift * i1;
                    if eta_eng.sigma > 0.0 {
                        let i2 = if a == 0.0 {
                            seg
                        } else {
                            (2.0 * a * seg).exp_m1() / (2.0 * a)
                        };
                        acc += w * eta_eng.sigma * i2.sqrt() * rng.normal();
                    }
                    xi_val += a * seg;
                }
                t = target;
            }
            if t >= next_out && next_out <= t_end {
                out.push((next_out, (-xi_val).exp() * (acc + x0)));
                next_out += step_out;
            }
            if t >= stop {
                break;
            }
        }

        if ev_t >= t_end {
            break;
        }
        match ev_idx {
            Some(i) if i >= nw => {
                let src = &eta_eng.sources[i - nw];
                acc += xi_val.exp() * src.kind.sample(rng);
                next[i] = t + rng.exponential(src.rate);
            }
            Some(i) => {
                let src = &xi_eng.sources[i];
                xi_val += src.kind.sample(rng);
                next[i] = t + rng.exponential(src.rate);
            }
            None => break,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{LevyMeasure, Role};

    fn spec(t: LevyTriplet, role: Role) -> ProcessSpec {
        ProcessSpec::new(t, role)
    }

    fn det(g: f64) -> ProcessSpec {
        spec(LevyTriplet::deterministic(g), Role::Xi)
    }

    #[test]
    fn increment_deterministic() {
        let cfg = SimConfig::default();
        let mut rng = Rng::new(1);
        let inc = sample_increment(&det(3.0), 0.5, &cfg, &mut rng).unwrap();
        assert_eq!(inc.value, 1.5);
        assert!(inc.jumps.is_empty());
    }

    #[test]
    fn increment_brownian_moments() {
        let cfg = SimConfig::default();
        let bm = spec(LevyTriplet::brownian(1.0, 0.0), Role::Eta);
        let mut rng = Rng::new(5);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = sample_increment(&bm, 1.0, &cfg, &mut rng).unwrap().value;
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        // within 4σ of (0, 1)
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0f64 / n as f64).sqrt());
    }

    #[test]
    fn increment_ml_bias_note() {
        // dropped-mass drift equals the truncated first moment of the measure
        let cfg = SimConfig {
            eps: 1e-4,
            ..SimConfig::default()
        };
        let nu = LevyMeasure::MlSubordinator { alpha: 0.5 };
        let expected = nu.truncated_mean(1e-4, Tol::default()).unwrap();
        let t = LevyTriplet::from_drift(0.0, nu, 0.0).unwrap();
        let eng = Engine::build(&t, &cfg).unwrap();
        assert!(
            (eng.small_mean - expected).abs() < 1e-10,
            "{} vs {}",
            eng.small_mean,
            expected
        );
        // halving eps never increases the reported bounds
        let cfg2 = SimConfig {
            eps: 5e-5,
            ..cfg
        };
        let eng2 = Engine::build(&t, &cfg2).unwrap();
        assert!(eng2.small_mean <= eng.small_mean);
        assert!(eng2.small_var <= eng.small_var);
    }

    #[test]
    fn gaussian_approx_matches_small_jump_variance() {
        let nu = LevyMeasure::MlSubordinator { alpha: 0.5 };
        let t = LevyTriplet::from_drift(0.0, nu.clone(), 0.0).unwrap();
        let cfg = SimConfig {
            eps: 1e-3,
            small_jump_mode: SmallJumpMode::GaussianApprox,
            ..SimConfig::default()
        };
        let eng = Engine::build(&t, &cfg).unwrap();
        let var = nu.truncated_var(1e-3, Tol::default()).unwrap();
        assert!((eng.sigma * eng.sigma - var).abs() < 1e-10);
        // increments still have the right mean: E L_1 = γ⁰ + ∫ x ν(dx)
        let spec = ProcessSpec::new(t, crate::levy::Role::Xi);
        let mut rng = Rng::new(77);
        let n = 20_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += sample_increment(&spec, 1.0, &cfg, &mut rng).unwrap().value;
        }
        let expect = nu.integrate(&|x| x, crate::levy::Iv::above(0.0, false), Tol::default())
            .unwrap()
            .value;
        let se = 4.0 * (2.0 / n as f64).sqrt().max(0.02);
        assert!((s / n as f64 - expect).abs() < se * (1.0 + expect));
    }

    #[test]
    fn increment_jump_times_are_ordered_within_window() {
        let cp = spec(
            LevyTriplet::from_drift(
                0.0,
                LevyMeasure::CompoundPoissonExp {
                    intensity: 5.0,
                    jump_rate: 1.0,
                },
                0.3,
            )
            .unwrap(),
            Role::Xi,
        );
        let mut rng = Rng::new(15);
        let inc = sample_increment(&cp, 2.0, &SimConfig::default(), &mut rng).unwrap();
        let mut prev = 0.0;
        let mut sum = 0.0;
        for &(t, y) in &inc.jumps {
            assert!(t > prev && t <= 2.0);
            prev = t;
            sum += y;
        }
        assert!((inc.value - (0.3 * 2.0 + sum)).abs() < 1e-14);
    }

    #[test]
    fn infinite_activity_needs_eps() {
        let cfg = SimConfig {
            eps: 0.0,
            ..SimConfig::default()
        };
        let t = LevyTriplet::from_drift(0.0, LevyMeasure::MlSubordinator { alpha: 0.5 }, 0.0)
            .unwrap();
        assert!(matches!(
            Engine::build(&t, &cfg),
            Err(KefError::Config(_))
        ));
    }

    #[test]
    fn trivial_case_is_exact() {
        // ξ_t = γ t, η_t = t: V = (1 - e^{-γ τ})/γ exactly, no discretization
        let gamma = 1.3;
        let xi = det(gamma);
        let eta = det(1.0);
        let cfg = SimConfig::default();
        let q = 0.7;
        for i in 0..200 {
            let mut rng = Rng::substream(99, i);
            let tau = rng.exponential(q);
            let mut rng2 = Rng::substream(99, i);
            let v = simulate_kef_direct(&xi, &eta, q, &cfg, &mut rng2).unwrap();
            let exact = (1.0 - (-gamma * tau).exp()) / gamma;
            assert!((v - exact).abs() < 1e-14, "draw {i}: {v} vs {exact}");
        }
    }

    #[test]
    fn zero_xi_returns_eta_at_tau() {
        // ξ ≡ 0, η compound Poisson: V = η_τ; with E η₁ = λ/a and τ ~ Exp(q)
        let xi = det(0.0);
        let eta = spec(
            LevyTriplet::from_drift(
                0.0,
                LevyMeasure::CompoundPoissonExp {
                    intensity: 1.0,
                    jump_rate: 1.0,
                },
                0.0,
            )
            .unwrap(),
            Role::Eta,
        );
        let cfg = SimConfig {
            master_seed: 7,
            ..SimConfig::default()
        };
        let b = batch(&xi, &eta, 1.0, &cfg, SamplerKind::Direct, 40_000).unwrap();
        // E V = E η₁ · E τ = 1
        assert!((b.mean() - 1.0).abs() < 4.0 * b.mc_se(), "mean {}", b.mean());
        // atom at zero: P(no jump before τ) = q/(q+λ) = 1/2
        assert!((b.atom0_share() - 0.5).abs() < 0.01);
    }

    #[test]
    fn mean_of_trivial_kef() {
        // q = γ = 1: E V = 1/2
        let cfg = SimConfig {
            master_seed: 3,
            ..SimConfig::default()
        };
        let b = batch(&det(1.0), &det(1.0), 1.0, &cfg, SamplerKind::Direct, 100_000).unwrap();
        assert!((b.mean() - 0.5).abs() < 3.0 * b.mc_se());
    }

    #[test]
    fn batch_deterministic_and_order_independent() {
        let xi = spec(LevyTriplet::brownian(4.0, 0.0), Role::Xi);
        let eta = det(1.0);
        let cfg = SimConfig {
            master_seed: 11,
            step: 1e-2,
            ..SimConfig::default()
        };
        let a = batch(&xi, &eta, 2.0, &cfg, SamplerKind::Direct, 64).unwrap();
        let b = batch(&xi, &eta, 2.0, &cfg, SamplerKind::Direct, 64).unwrap();
        assert_eq!(a.values, b.values);

        // explicit single- and multi-thread pools give the identical array
        for threads in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let c = pool.install(|| batch(&xi, &eta, 2.0, &cfg, SamplerKind::Direct, 64).unwrap());
            assert_eq!(a.values, c.values, "{threads} threads");
        }

        // n = 1 equals a single draw on substream 0
        let one = batch(&xi, &eta, 2.0, &cfg, SamplerKind::Direct, 1).unwrap();
        let s = DirectSampler::new(&xi, &eta, 2.0, &cfg).unwrap();
        let direct = s.draw(&mut Rng::substream(11, 0));
        assert_eq!(one.values[0], direct);
    }

    #[test]
    fn sde_matches_direct_in_law_for_deterministic_xi() {
        // ξ_t = γt: both samplers produce (1/γ)(1-e^{-γ T₁}) with T₁ ~ Exp(q)
        let xi = det(1.0);
        let eta = det(1.0);
        let cfg = SimConfig {
            master_seed: 21,
            ..SimConfig::default()
        };
        let a = batch(&xi, &eta, 1.0, &cfg, SamplerKind::Direct, 50_000).unwrap();
        let b = batch(&xi, &eta, 1.0, &cfg, SamplerKind::Sde, 50_000).unwrap();
        // support check and mean agreement
        assert!(b.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let se = (a.mc_se().powi(2) + b.mc_se().powi(2)).sqrt();
        assert!((a.mean() - b.mean()).abs() < 4.0 * se);
    }

    #[test]
    fn q0_gate_and_horizon_validation() {
        let cfg = SimConfig::default(); // Killed horizon
        let eta = det(1.0);
        // q = 0 with Killed horizon: config error at draw time
        let err = batch(&det(1.0), &eta, 0.0, &cfg, SamplerKind::Direct, 1);
        assert!(err.is_err());
        // decreasing ξ fails the convergence gate
        let cfg_t = SimConfig {
            horizon: Horizon::FixedT(10.0),
            ..SimConfig::default()
        };
        let err = batch(&det(-1.0), &eta, 0.0, &cfg_t, SamplerKind::Direct, 1);
        assert!(matches!(err, Err(KefError::Precondition(_))));
        let ok = batch(&det(1.0), &eta, 0.0, &cfg_t, SamplerKind::Direct, 8);
        assert!(ok.is_ok());
    }

    #[test]
    fn gou_path_examples() {
        let cfg = SimConfig::default();
        // η ≡ 0, ξ_t = t, x0 = 1: X_t = e^{-t}
        let path = simulate_gou_path(&det(1.0), &det(0.0), 1.0, 2.0, 0.5, &cfg, &mut Rng::new(1))
            .unwrap();
        for &(t, x) in &path {
            assert!((x - (-t).exp()).abs() < 1e-12, "t={t} x={x}");
        }
        // ξ ≡ 0: X_t = x0 + η_t (deterministic η here)
        let path = simulate_gou_path(&det(0.0), &det(2.0), 0.3, 1.0, 0.25, &cfg, &mut Rng::new(2))
            .unwrap();
        for &(t, x) in &path {
            assert!((x - (0.3 + 2.0 * t)).abs() < 1e-12);
        }
        // ξ_t = t, η_t = t, x0 = 0: X_1 = 1 - e^{-1} exactly
        let path = simulate_gou_path(&det(1.0), &det(1.0), 0.0, 1.0, 1.0, &cfg, &mut Rng::new(3))
            .unwrap();
        let (t, x) = *path.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!((x - (1.0 - (-1.0f64).exp())).abs() < 1e-12, "{x}");
    }
}
