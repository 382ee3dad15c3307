//! Homodyne-conditioned stochastic master equation trajectories.
//!
//! The conditioned state follows
//!
//! ```text
//! dρ = (deterministic master RHS)·dt + H[L̄]ρ·dW
//! ```
//!
//! with `L̄ = Σ_j l_j σ_j⁻` the Markov-approximated coupling operator at the
//! measurement port and `H[L̄]` the measurement-backaction superoperator.
//! The deterministic sub-increment reuses the RK4 step of
//! [`crate::dynamics`]; the noise coupling stays Euler–Maruyama. Both parts
//! are trace-free, so the per-step hermitize + renormalize is a no-op up to
//! rounding, and the ensemble mean of the scheme coincides with the RK4
//! master solution in expectation.
//!
//! The measurement record is generated in innovation form,
//! `dY = Tr[(L̄+L̄†)ρ]·dt + dW`, with `dW ~ Normal(0, dt)` drawn from a
//! per-trajectory counter-based stream: trajectory `k` of base seed `s`
//! reads ChaCha12 stream `k` under seed `s`, so ensembles are reproducible
//! bit-for-bit regardless of worker count or scheduling.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
// Needed for float math in the no_std build; redundant when a build in the
// same graph links std (whose inherent methods shadow the trait).
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{CoefficientMode, DynamicsError, MasterEngine, Observable};
use crate::network::{Network, NetworkError};
use crate::operator::{
    clip_negative_eigenvalues, homodyne_signal, measurement_superop, psd_within, sigma,
    DensityMatrix, Operator, SigmaKind,
};

/// Knobs of a filtering run.
#[derive(Clone, Debug)]
pub struct FilterOptions {
    pub mode: CoefficientMode,
    pub exchange: bool,
    /// Reject a step whose post-update minimum eigenvalue dips below −1e-3.
    /// Permissive (default) records the excursion and continues.
    pub strict_positivity: bool,
    pub observables: Vec<Observable>,
}

impl FilterOptions {
    pub fn new(observables: Vec<Observable>) -> Self {
        Self {
            mode: CoefficientMode::InstantOn,
            exchange: false,
            strict_positivity: false,
            observables,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FilterError {
    Network(NetworkError),
    Dynamics(DynamicsError),
    /// Strict mode: minimum eigenvalue fell below −1e-3 after a step.
    PositivityExcursion { step: usize, min_eigenvalue: f64 },
    NonFiniteState { step: usize, detail: String },
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterError::Network(e) => write!(f, "{e}"),
            FilterError::Dynamics(e) => write!(f, "{e}"),
            FilterError::PositivityExcursion { step, min_eigenvalue } => write!(
                f,
                "positivity excursion at step {step}: min eigenvalue {min_eigenvalue:.3e}"
            ),
            FilterError::NonFiniteState { step, detail } => {
                write!(f, "non-finite state at step {step}: {detail}")
            }
        }
    }
}

impl core::error::Error for FilterError {}

impl From<NetworkError> for FilterError {
    fn from(e: NetworkError) -> Self {
        FilterError::Network(e)
    }
}

impl From<DynamicsError> for FilterError {
    fn from(e: DynamicsError) -> Self {
        FilterError::Dynamics(e)
    }
}

/// Precomputed pieces of the filtering equation: the deterministic engine
/// (Hamiltonian + activated coefficient table) and the measurement operator.
pub struct FilterContext {
    engine: MasterEngine,
    lbar: Operator,
}

impl FilterContext {
    /// Build for the network's measurement port.
    pub fn new(net: &Network, mode: CoefficientMode, exchange: bool) -> Result<Self, FilterError> {
        let weights = net.coupling_operator_weights(net.port)?;
        let n = net.atom_count();
        let mut lbar = Operator::zeros(1 << n);
        for (j, w) in weights.iter().enumerate() {
            lbar.axpy(*w, &sigma(j + 1, SigmaKind::Minus, n));
        }
        let engine = MasterEngine::new(net, mode, exchange)?;
        Ok(Self { engine, lbar })
    }

    pub fn lbar(&self) -> &Operator {
        &self.lbar
    }

    /// Expected homodyne signal `Tr[(L̄+L̄†)ρ]`.
    pub fn signal(&self, rho: &Operator) -> f64 {
        homodyne_signal(&self.lbar, rho)
    }
}

/// Outcome of one conditioned step.
#[derive(Clone, Debug)]
pub struct FilterStep {
    pub rho: Operator,
    /// Most negative eigenvalue seen after hermitize + renormalize, before
    /// the positivity projection; 0 when the state was already positive
    /// semidefinite within tolerance.
    pub min_eigenvalue: f64,
    /// Purity Tr(ρ²) of the physical readout: the PSD projection of the
    /// post-step state (identical to the state itself when no dip occurred).
    pub purity: f64,
}

/// One conditioned update over `[t, t+dt]` with noise increment `dw`:
/// deterministic RK4 increment, plus `H[L̄]ρ·dw`, then hermitize and
/// renormalize the trace to 1.
///
/// The noise coupling is not small at coarse steps, so a step can push the
/// state off the positive cone. Such excursions are reported through
/// [`FilterStep::min_eigenvalue`]; strict mode rejects the step below
/// −1e-3, permissive mode projects back onto the cone (eigenvalue clip +
/// renormalize) and carries on.
pub fn filter_step(
    ctx: &FilterContext,
    rho: &Operator,
    t: f64,
    dt: f64,
    dw: f64,
    strict: bool,
) -> Result<FilterStep, FilterError> {
    filter_step_at(ctx, rho, t, dt, dw, strict, 0)
}

fn filter_step_at(
    ctx: &FilterContext,
    rho: &Operator,
    t: f64,
    dt: f64,
    dw: f64,
    strict: bool,
    step: usize,
) -> Result<FilterStep, FilterError> {
    filter_update(ctx, rho, t, dt, dw, strict, step, false)
}

// The shared update. With `milstein` set, the noise coupling is completed
// to second order with (dW² − dt)·CρC†, C = L̄ − Tr[(L̄+L̄†)ρ]/2: the noise
// part then equals the completely positive map MρM†, M = I + C·dW, while
// its average over dW remains exactly the deterministic RK4 increment.
// Trajectories use this form; the bare first-order form is kept for the
// single-step primitive.
#[allow(clippy::too_many_arguments)]
fn filter_update(
    ctx: &FilterContext,
    rho: &Operator,
    t: f64,
    dt: f64,
    dw: f64,
    strict: bool,
    step: usize,
    milstein: bool,
) -> Result<FilterStep, FilterError> {
    let mut next = rho.clone();
    next.axpy(Complex64::new(1.0, 0.0), &ctx.engine.rk4_increment(t, rho, dt));
    next.axpy(Complex64::new(dw, 0.0), &measurement_superop(&ctx.lbar, rho));
    if milstein {
        let s = homodyne_signal(&ctx.lbar, rho);
        let mut c = ctx.lbar.clone();
        c.axpy(Complex64::new(-0.5 * s, 0.0), &Operator::identity(rho.dim()));
        let quad = c.matmul(rho).matmul(&c.dagger());
        next.axpy(Complex64::new(dw * dw - dt, 0.0), &quad);
    }
    let mut next = next.hermitize();
    let tr = next.trace().re;
    if !tr.is_finite() || tr <= 0.0 {
        return Err(FilterError::NonFiniteState {
            step,
            detail: alloc::format!("trace became {tr}"),
        });
    }
    next = next.scale(Complex64::new(1.0 / tr, 0.0));
    if psd_within(&next, 1e-12) {
        let purity = purity_of(&next);
        return Ok(FilterStep { rho: next, min_eigenvalue: 0.0, purity });
    }
    let (clipped, min) = clip_negative_eigenvalues(&next);
    if strict && min < -1e-3 {
        return Err(FilterError::PositivityExcursion { step, min_eigenvalue: min });
    }
    let tr = clipped.trace().re;
    if !tr.is_finite() || tr <= 0.0 {
        return Err(FilterError::NonFiniteState {
            step,
            detail: alloc::format!("trace became {tr} after projection"),
        });
    }
    let clipped = clipped.scale(Complex64::new(1.0 / tr, 0.0));
    let purity = purity_of(&clipped);
    if min >= PROJECTION_FLOOR {
        // Transient dip: keep evolving the unprojected state. The update is
        // exactly trace-free and linear in dW, so the ensemble mean stays
        // exactly the deterministic RK4 path; projecting would trade that
        // for a bias. The projected copy only serves as the readout.
        return Ok(FilterStep { rho: next, min_eigenvalue: min, purity });
    }
    Ok(FilterStep { rho: clipped, min_eigenvalue: min, purity })
}

/// Excursions past this are projected back onto the positive cone (a rare
/// safety net against runaway feedback); milder dips are reported but left
/// untouched so the scheme stays mean-exact.
pub const PROJECTION_FLOOR: f64 = -0.05;

/// Largest internal step of the conditioned integration. Finer than the
/// deterministic engine's limit: the noise coupling scales as √dt, and the
/// projection safety net must stay a tail event for the ensemble mean to
/// remain unbiased.
pub const MAX_FILTER_STEP: f64 = 0.015625;

/// Number of conditioned substeps used for one grid step of `dt`.
pub fn filter_substeps(dt: f64) -> usize {
    ((dt / MAX_FILTER_STEP) - 1e-12).ceil().max(1.0) as usize
}

/// One conditioned trajectory: grid, noise and record increments, tracked
/// expectations, and invariant extremes.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub base_seed: u64,
    pub index: u64,
    pub times: Vec<f64>,
    /// Wiener increments, one per step.
    pub dw: Vec<f64>,
    /// Homodyne record increments `dY = Tr[(L̄+L̄†)ρ]·dt + dW`, one per step.
    pub dy: Vec<f64>,
    /// `observables[k][i]` is observable `k` at grid point `i`.
    pub observables: Vec<Vec<f64>>,
    /// Most negative pre-projection eigenvalue over the run (0 when the
    /// state never left the positive cone).
    pub min_eigenvalue: f64,
    /// Largest readout purity over the run (evaluated on the PSD-projected
    /// state, so ≤ 1 up to rounding).
    pub max_purity: f64,
}

/// Run one trajectory. Deterministic in `(base_seed, index)`: the Wiener
/// increments come from ChaCha12 stream `index` under `base_seed`.
///
/// Each grid step of `dt` is integrated as [`filter_substeps`]`(dt)`
/// conditioned updates with independent substep increments; the recorded
/// `dW` is their sum (still `Normal(0, dt)`) and the record increment uses
/// the grid-start state, `dY = Tr[(L̄+L̄†)ρ]·dt + dW`.
pub fn run_trajectory(
    net: &Network,
    rho0: &DensityMatrix,
    t_end: f64,
    dt: f64,
    opts: &FilterOptions,
    base_seed: u64,
    index: u64,
) -> Result<TrajectoryRecord, FilterError> {
    if !(dt > 0.0) {
        return Err(FilterError::Dynamics(DynamicsError::NonPositiveStep { dt }));
    }
    let ctx = FilterContext::new(net, opts.mode, opts.exchange)?;
    let mut rng = ChaCha12Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let substeps = filter_substeps(dt);
    let dti = dt / substeps as f64;
    let sqrt_dti = dti.sqrt();

    let mut rho = rho0.operator().clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut dw_series = Vec::with_capacity(steps);
    let mut dy_series = Vec::with_capacity(steps);
    let mut observables = vec![Vec::with_capacity(steps + 1); opts.observables.len()];
    let mut min_eig = 0.0f64;
    let mut max_purity = 0.0f64;

    let snapshot = |rho: &Operator, observables: &mut Vec<Vec<f64>>| {
        for (k, obs) in opts.observables.iter().enumerate() {
            observables[k].push(obs.evaluate(rho));
        }
    };
    times.push(0.0);
    snapshot(&rho, &mut observables);
    max_purity = max_purity.max(purity_of(&rho));

    for i in 0..steps {
        let t0 = i as f64 * dt;
        let signal0 = ctx.signal(&rho);
        let mut dw = 0.0f64;
        for s in 0..substeps {
            let z: f64 = StandardNormal.sample(&mut rng);
            let dwi = z * sqrt_dti;
            let out = filter_update(
                &ctx,
                &rho,
                t0 + s as f64 * dti,
                dti,
                dwi,
                opts.strict_positivity,
                i + 1,
                false,
            )?;
            rho = out.rho;
            min_eig = min_eig.min(out.min_eigenvalue);
            max_purity = max_purity.max(out.purity);
            dw += dwi;
        }
        dw_series.push(dw);
        dy_series.push(signal0 * dt + dw);
        times.push((i + 1) as f64 * dt);
        snapshot(&rho, &mut observables);
    }

    Ok(TrajectoryRecord {
        base_seed,
        index,
        times,
        dw: dw_series,
        dy: dy_series,
        observables,
        min_eigenvalue: min_eig,
        max_purity,
    })
}

fn purity_of(rho: &Operator) -> f64 {
    rho.data().iter().map(|z| z.norm_sqr()).sum()
}

/// Per-time mean and standard error over a set of trajectories.
///
/// The reduction runs in record order, so callers that fill a slot per
/// trajectory index get bit-identical results for any worker count.
#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    /// `mean[k][i]`: observable `k`, grid point `i`.
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean, `sample std / √M`.
    pub stderr: Vec<Vec<f64>>,
    pub trajectories: usize,
    pub min_eigenvalue: f64,
    pub max_purity: f64,
}

pub fn ensemble_stats(records: &[TrajectoryRecord]) -> EnsembleStats {
    assert!(!records.is_empty(), "ensemble needs at least one trajectory");
    let m = records.len();
    let n_obs = records[0].observables.len();
    let n_t = records[0].times.len();
    let mut mean = vec![vec![0.0f64; n_t]; n_obs];
    for rec in records {
        for k in 0..n_obs {
            for i in 0..n_t {
                mean[k][i] += rec.observables[k][i];
            }
        }
    }
    for row in &mut mean {
        for v in row.iter_mut() {
            *v /= m as f64;
        }
    }
    let mut stderr = vec![vec![0.0f64; n_t]; n_obs];
    if m > 1 {
        for rec in records {
            for k in 0..n_obs {
                for i in 0..n_t {
                    let d = rec.observables[k][i] - mean[k][i];
                    stderr[k][i] += d * d;
                }
            }
        }
        let norm = 1.0 / ((m - 1) as f64 * m as f64);
        for row in &mut stderr {
            for v in row.iter_mut() {
                *v = (*v * norm).sqrt();
            }
        }
    }
    EnsembleStats {
        times: records[0].times.clone(),
        mean,
        stderr,
        trajectories: m,
        min_eigenvalue: records.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min),
        max_purity: records.iter().map(|r| r.max_purity).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_master;
    use crate::network::{Atom, MeasurementPort, WaveguideKind};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn dark_port_network() -> Network {
        // γ_L = γ_R at zero phase makes the port weight vanish: no
        // backaction, dynamics still dissipative.
        Network::new(
            WaveguideKind::SemiInfinite,
            vec![Atom::single_point(1.0, 0.0, 0.2, 0.2)],
            MeasurementPort::SemiInfiniteEnd,
        )
    }

    fn decay_network() -> Network {
        Network::new(
            WaveguideKind::SemiInfinite,
            vec![Atom::single_point(1.0, 0.3, 0.0, 0.2)],
            MeasurementPort::SemiInfiniteEnd,
        )
    }

    #[test]
    fn identity_step_with_no_generators() {
        let net = Network::new(
            WaveguideKind::SemiInfinite,
            vec![Atom::single_point(1.0, 0.0, 0.0, 0.0)],
            MeasurementPort::SemiInfiniteEnd,
        );
        let ctx = FilterContext::new(&net, CoefficientMode::InstantOn, false).unwrap();
        let rho = DensityMatrix::product_state(&[true]);
        let out = filter_step(&ctx, rho.operator(), 0.0, 0.5, 0.7, false).unwrap();
        assert_abs_diff_eq!((&out.rho - rho.operator()).max_abs(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ground_state_is_fixed_point_of_the_filter() {
        let net = decay_network();
        let ctx = FilterContext::new(&net, CoefficientMode::InstantOn, false).unwrap();
        let rho = DensityMatrix::product_state(&[false]);
        for dw in [-0.9, 0.0, 1.3] {
            let out = filter_step(&ctx, rho.operator(), 0.0, 0.5, dw, true).unwrap();
            assert_abs_diff_eq!((&out.rho - rho.operator()).max_abs(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn hand_evaluated_decay_step() {
        // Single atom, γ_R = 0.2, excited, dW = 0: the excited population
        // after one step is the RK4 polynomial of e^{−γ·dt} at γ·dt = 0.1,
        // 1 − 0.1 + 0.1²/2 − 0.1³/6 + 0.1⁴/24.
        let net = decay_network();
        let ctx = FilterContext::new(&net, CoefficientMode::InstantOn, false).unwrap();
        let rho = DensityMatrix::product_state(&[true]);
        let out = filter_step(&ctx, rho.operator(), 0.0, 0.5, 0.0, true).unwrap();
        let expected = 1.0 - 0.1 + 0.005 - 0.1f64.powi(3) / 6.0 + 0.1f64.powi(4) / 24.0;
        assert_abs_diff_eq!(out.rho[(0, 0)].re, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(out.rho.trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn antithetic_pair_averages_to_deterministic_step() {
        // The dW coupling is linear, so (step(+w) + step(−w))/2 equals the
        // deterministic step whenever renormalization is a no-op.
        let net = Network::new(
            WaveguideKind::SemiInfinite,
            vec![
                Atom::single_point(1.0, 0.3, 0.2, 0.2).with_drive(0.1),
                Atom::single_point(2.0, 1.1, 0.4, 0.4),
            ],
            MeasurementPort::SemiInfiniteEnd,
        );
        let ctx = FilterContext::new(&net, CoefficientMode::InstantOn, false).unwrap();
        // A state in the interior of the positive cone, so moderate updates
        // stay on the projection-free path where the identity is exact.
        let mut rho = Operator::identity(4).scale(Complex64::new(0.1, 0.0));
        rho[(1, 1)] = Complex64::new(0.7, 0.0);
        rho[(1, 2)] = Complex64::new(0.1, 0.05);
        rho[(2, 1)] = Complex64::new(0.1, -0.05);
        let w = 0.2;
        let plus = filter_step(&ctx, &rho, 0.0, 0.5, w, false).unwrap();
        let minus = filter_step(&ctx, &rho, 0.0, 0.5, -w, false).unwrap();
        assert_eq!(plus.min_eigenvalue, 0.0);
        assert_eq!(minus.min_eigenvalue, 0.0);
        let (plus, minus) = (plus.rho, minus.rho);
        let mut avg = &plus + &minus;
        avg = avg.scale(Complex64::new(0.5, 0.0));
        let mut det = rho.clone();
        det.axpy(Complex64::new(1.0, 0.0), &ctx.engine.rk4_increment(0.0, &rho, 0.5));
        assert!((&avg - &det).max_abs() < 1e-13);
    }

    #[test]
    fn zero_port_weight_trajectory_matches_master_equation() {
        let net = dark_port_network();
        let rho0 = DensityMatrix::product_state(&[true]);
        let opts = FilterOptions::new(vec![Observable::Excitation(1)]);
        let rec = run_trajectory(&net, &rho0, 20.0, 0.5, &opts, 11, 3).unwrap();
        let master =
            evolve_master(&net, &rho0, 20.0, 0.5, CoefficientMode::InstantOn, false).unwrap();
        let series = master.series(Observable::Excitation(1));
        for (a, b) in rec.observables[0].iter().zip(series.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // dY reduces to dW when the port weight vanishes.
        for (dy, dw) in rec.dy.iter().zip(rec.dw.iter()) {
            assert_abs_diff_eq!(dy, dw, epsilon = 1e-15);
        }
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let net = decay_network();
        let rho0 = DensityMatrix::product_state(&[true]);
        let opts = FilterOptions::new(vec![Observable::SigmaZ(1)]);
        let a = run_trajectory(&net, &rho0, 10.0, 0.5, &opts, 42, 7).unwrap();
        let b = run_trajectory(&net, &rho0, 10.0, 0.5, &opts, 42, 7).unwrap();
        assert_eq!(a.dw, b.dw);
        assert_eq!(a.dy, b.dy);
        assert_eq!(a.observables, b.observables);
        let c = run_trajectory(&net, &rho0, 10.0, 0.5, &opts, 42, 8).unwrap();
        assert_ne!(a.dw, c.dw);
    }

    #[test]
    fn record_identity_dy_equals_signal_dt_plus_dw() {
        // dt below the internal-step limit, so one grid step is one update
        // and the filter path can be replayed from the recorded dW.
        let dt = 0.01;
        assert_eq!(filter_substeps(dt), 1);
        let net = decay_network();
        let rho0 = DensityMatrix::product_state(&[true]);
        let opts = FilterOptions::new(vec![Observable::Excitation(1)]);
        let rec = run_trajectory(&net, &rho0, 0.5, dt, &opts, 5, 0).unwrap();
        let ctx = FilterContext::new(&net, CoefficientMode::InstantOn, false).unwrap();
        let mut rho = rho0.operator().clone();
        for (i, (&dw, &dy)) in rec.dw.iter().zip(rec.dy.iter()).enumerate() {
            let expected = ctx.signal(&rho) * dt + dw;
            assert_abs_diff_eq!(dy, expected, epsilon = 1e-12);
            rho = filter_step(&ctx, &rho, i as f64 * dt, dt, dw, false).unwrap().rho;
        }
    }

    #[test]
    fn strict_mode_rejects_deep_excursions() {
        // A large increment from a pure state dips the spectrum well past
        // -1e-3; strict mode must reject the step, permissive must carry on.
        let net = Network::new(
            WaveguideKind::SemiInfinite,
            vec![Atom::single_point(1.0, 0.3 * core::f64::consts::PI, 0.4, 0.4)],
            MeasurementPort::SemiInfiniteEnd,
        );
        let ctx = FilterContext::new(&net, CoefficientMode::InstantOn, false).unwrap();
        let rho = DensityMatrix::product_state(&[true]);
        let err = filter_step(&ctx, rho.operator(), 0.0, 0.5, 2.5, true).unwrap_err();
        assert!(matches!(err, FilterError::PositivityExcursion { .. }));
        let ok = filter_step(&ctx, rho.operator(), 0.0, 0.5, 2.5, false).unwrap();
        assert!(ok.min_eigenvalue < -1e-3);
    }

    #[test]
    fn trajectory_invariants_purity_and_trace() {
        let net = Network::new(
            WaveguideKind::SemiInfinite,
            vec![
                Atom::single_point(1.0, 0.3 * core::f64::consts::PI, 0.2, 0.2),
                Atom::single_point(2.5, 0.8 * core::f64::consts::PI, 0.4, 0.4).with_drive(0.2),
            ],
            MeasurementPort::SemiInfiniteEnd,
        );
        let rho0 = DensityMatrix::product_state(&[true, false]);
        let opts = FilterOptions::new(vec![Observable::SigmaZ(1), Observable::SigmaZ(2)]);
        let rec = run_trajectory(&net, &rho0, 50.0, 0.5, &opts, 123, 1).unwrap();
        assert!(rec.max_purity <= 1.0 + 1e-8, "purity reached {}", rec.max_purity);
        assert!(rec.min_eigenvalue > -0.3, "min eigenvalue {}", rec.min_eigenvalue);
    }

    #[test]
    fn ensemble_stats_single_trajectory_is_that_trajectory() {
        let net = decay_network();
        let rho0 = DensityMatrix::product_state(&[true]);
        let opts = FilterOptions::new(vec![Observable::Excitation(1)]);
        let rec = run_trajectory(&net, &rho0, 10.0, 0.5, &opts, 9, 0).unwrap();
        let stats = ensemble_stats(core::slice::from_ref(&rec));
        assert_eq!(stats.mean[0], rec.observables[0]);
        assert!(stats.stderr[0].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn wiener_moments_are_sane() {
        let net = decay_network();
        let rho0 = DensityMatrix::product_state(&[true]);
        let opts = FilterOptions::new(vec![]);
        let mut all = Vec::new();
        for k in 0..64 {
            let rec = run_trajectory(&net, &rho0, 25.0, 0.5, &opts, 77, k).unwrap();
            all.extend_from_slice(&rec.dw);
        }
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        // dW ~ N(0, dt): mean → 0, variance → dt = 0.5.
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 0.5).abs() < 0.03, "variance {var}");
    }
}
