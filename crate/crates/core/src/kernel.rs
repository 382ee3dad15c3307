//! Exact symbolic algebra of delay-delta kernels.
//!
//! Every channel kernel, noise commutator and master-equation coefficient in
//! an ideal-waveguide network is a finite sum of Dirac deltas. A term
//! `(w, d)` of a [`DelayKernel`] stands for `w·δ(x − d)` where `x` is the
//! time difference: `t − ν` for channel kernels and `t − t′` for commutator
//! kernels.
//!
//! Channel kernels come in two flavors per atom:
//!
//! - the four printed kernels ([`channel_kernel`]): the semi-infinite input
//!   noise kernel κ̃, the semi-infinite output kernel κ, and the
//!   left/right infinite-guide output kernels κˡ, κʳ;
//! - the input noise kernels that drive the commutator algebra
//!   ([`noise_kernel`]): κ̃ again for the mirror-terminated guide, and for
//!   the open guide the right-propagating channel (delay `+τ`, the field
//!   reaches a downstream atom late) and left-propagating channel (delay
//!   `−τ`).
//!
//! The commutator of two channels is the pair-product kernel
//! `[(w_a, d_a), (w_b, d_b)] ↦ (conj(w_a)·w_b, d_a − d_b)`; left- and
//! right-propagating fields of an infinite guide commute outright, so their
//! cross commutators are empty. From the pairwise commutators follow the
//! Itô table (weights within `|d| ≤ dt`), the Markovianity verdict (no
//! surviving delayed term anywhere) and the activated master-equation
//! coefficients (terms with `d ≥ 0`, phase-folded, delay-0 at half weight).

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use num_complex::Complex64;
// Needed for float math in the no_std build; redundant when a build in the
// same graph links std (whose inherent methods shadow the trait).
#[allow(unused_imports)]
use num_traits::Float;

use crate::network::{Network, NetworkError, WaveguideKind};

/// Delays closer than this are merged into one delta.
pub const DELAY_MERGE_TOL: f64 = 1e-12;
/// Merged weights below this magnitude are pruned.
const WEIGHT_PRUNE_TOL: f64 = 1e-14;

/// One weighted delta, `weight·δ(x − delay)`.
///
/// Units are context dependent: √MHz for channel kernels, MHz for
/// commutator kernels. Delays are μs and may be negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaTerm {
    pub weight: Complex64,
    pub delay: f64,
}

/// A finite sum of deltas, sorted by delay with pairwise-distinct delays.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DelayKernel {
    terms: Vec<DeltaTerm>,
}

impl DelayKernel {
    pub fn empty() -> Self {
        Self { terms: Vec::new() }
    }

    /// Sort by delay, merge terms within [`DELAY_MERGE_TOL`], prune zeros.
    pub fn from_terms(mut terms: Vec<DeltaTerm>) -> Self {
        terms.retain(|t| t.weight.norm() > 0.0);
        terms.sort_by(|a, b| a.delay.partial_cmp(&b.delay).unwrap());
        let mut merged: Vec<DeltaTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if (t.delay - last.delay).abs() < DELAY_MERGE_TOL => {
                    last.weight += t.weight;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.weight.norm() > WEIGHT_PRUNE_TOL);
        Self { terms: merged }
    }

    pub fn terms(&self) -> &[DeltaTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Weight of the term at `delay`, zero if absent.
    pub fn weight_at(&self, delay: f64) -> Complex64 {
        self.terms
            .iter()
            .find(|t| (t.delay - delay).abs() < DELAY_MERGE_TOL)
            .map(|t| t.weight)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// True if any term sits at a nonzero delay.
    pub fn has_delayed_term(&self) -> bool {
        self.terms.iter().any(|t| t.delay.abs() >= DELAY_MERGE_TOL)
    }
}

impl fmt::Display for DelayKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:+.6}{:+.6}i)·δ(x − {:.6})", t.weight.re, t.weight.im, t.delay)?;
        }
        Ok(())
    }
}

/// Commutator kernel of two channel kernels:
/// terms `(conj(w_a)·w_b, d_a − d_b)` over all pairs, merged and pruned.
///
/// For channel kernels `a`, `b` of the same underlying field this is the
/// kernel of `[a(t), b†(t′)]` in `t − t′`.
pub fn commutator_kernel(a: &DelayKernel, b: &DelayKernel) -> DelayKernel {
    let mut terms = Vec::with_capacity(a.terms.len() * b.terms.len());
    for ta in &a.terms {
        for tb in &b.terms {
            terms.push(DeltaTerm {
                weight: ta.weight.conj() * tb.weight,
                delay: ta.delay - tb.delay,
            });
        }
    }
    DelayKernel::from_terms(terms)
}

/// The four printed per-atom kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Semi-infinite input noise kernel κ̃: `+√γ_R` at `+τ`, `−√γ_L` at `−τ`.
    SemiTilde,
    /// Semi-infinite output kernel κ: `+√γ_L` at `+τ`, `−√γ_R` at `−τ`.
    SemiOutput,
    /// Infinite-guide left output kernel κˡ: `+√γ_L` at `+τ`.
    InfLeft,
    /// Infinite-guide right output kernel κʳ: `+√γ_R` at `−τ`.
    InfRight,
}

/// Input noise channels entering the commutator algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseChannelId {
    /// The single bidirectional channel of a mirror-terminated guide.
    Semi,
    /// Right-propagating channel of an open guide.
    InfRightProp,
    /// Left-propagating channel of an open guide.
    InfLeftProp,
}

/// Errors from the kernel-level operations.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelError {
    Network(NetworkError),
    /// Channel not available for this waveguide kind.
    ChannelMismatch { channel: String, kind: WaveguideKind },
    /// dt must be positive.
    NonPositiveStep { dt: f64 },
    /// Semi-infinite Itô table requires dt smaller than the first delay.
    StepExceedsFirstDelay { dt: f64, tau_first: f64 },
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::Network(e) => write!(f, "{e}"),
            KernelError::ChannelMismatch { channel, kind } => {
                write!(f, "channel {channel} is not defined for waveguide kind {kind:?}")
            }
            KernelError::NonPositiveStep { dt } => write!(f, "dt = {dt} must be > 0"),
            KernelError::StepExceedsFirstDelay { dt, tau_first } => write!(
                f,
                "semi-infinite Itô table needs dt < first coupling delay: dt = {dt}, τ₁ = {tau_first}"
            ),
        }
    }
}

impl core::error::Error for KernelError {}

impl From<NetworkError> for KernelError {
    fn from(e: NetworkError) -> Self {
        KernelError::Network(e)
    }
}

// Internal channel representation. Each delta remembers the signed phase of
// its originating coupling point so that Markov-approximated weights can be
// phase-folded even when stored phases are not ω_a·τ.
#[derive(Clone, Copy)]
struct NoiseTerm {
    weight: f64,
    delay: f64,
    phase: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Mirror,
    Right,
    Left,
}

struct NoiseChannel {
    field: Field,
    terms: Vec<NoiseTerm>,
}

impl NoiseChannel {
    fn kernel(&self, dressed: bool) -> DelayKernel {
        DelayKernel::from_terms(
            self.terms
                .iter()
                .map(|t| DeltaTerm {
                    weight: if dressed {
                        t.weight * Complex64::from_polar(1.0, -t.phase)
                    } else {
                        Complex64::new(t.weight, 0.0)
                    },
                    delay: t.delay,
                })
                .collect(),
        )
    }
}

fn input_channels(net: &Network, j: usize) -> Vec<NoiseChannel> {
    let atom = &net.atoms[j];
    match net.kind {
        WaveguideKind::SemiInfinite => {
            let mut terms = Vec::with_capacity(2 * atom.points.len());
            for p in &atom.points {
                terms.push(NoiseTerm { weight: p.gamma_r.sqrt(), delay: p.tau, phase: p.phi });
                terms.push(NoiseTerm { weight: -p.gamma_l.sqrt(), delay: -p.tau, phase: -p.phi });
            }
            vec![NoiseChannel { field: Field::Mirror, terms }]
        }
        WaveguideKind::Infinite => {
            let right = atom
                .points
                .iter()
                .map(|p| NoiseTerm { weight: p.gamma_r.sqrt(), delay: p.tau, phase: p.phi })
                .collect();
            let left = atom
                .points
                .iter()
                .map(|p| NoiseTerm { weight: p.gamma_l.sqrt(), delay: -p.tau, phase: -p.phi })
                .collect();
            vec![
                NoiseChannel { field: Field::Right, terms: right },
                NoiseChannel { field: Field::Left, terms: left },
            ]
        }
    }
}

fn channel_pair_commutator(a: &NoiseChannel, b: &NoiseChannel, dressed: bool) -> DelayKernel {
    if a.field != b.field {
        return DelayKernel::empty();
    }
    let mut terms = Vec::with_capacity(a.terms.len() * b.terms.len());
    for ta in &a.terms {
        for tb in &b.terms {
            let weight = if dressed {
                // conj(w_a e^{−i p_a})·(w_b e^{−i p_b}) for real w.
                ta.weight * tb.weight * Complex64::from_polar(1.0, ta.phase - tb.phase)
            } else {
                Complex64::new(ta.weight * tb.weight, 0.0)
            };
            terms.push(DeltaTerm { weight, delay: ta.delay - tb.delay });
        }
    }
    DelayKernel::from_terms(terms)
}

fn pairwise_commutator_impl(net: &Network, j: usize, l: usize, dressed: bool) -> DelayKernel {
    let mut terms = Vec::new();
    for a in &input_channels(net, j) {
        for b in &input_channels(net, l) {
            terms.extend_from_slice(channel_pair_commutator(a, b, dressed).terms());
        }
    }
    DelayKernel::from_terms(terms)
}

/// One of the four printed kernels for atom `j` (1-based).
pub fn channel_kernel(net: &Network, j: usize, channel: Channel) -> Result<DelayKernel, KernelError> {
    net.checked()?;
    let mismatch = |name: &str| KernelError::ChannelMismatch {
        channel: String::from(name),
        kind: net.kind,
    };
    match (channel, net.kind) {
        (Channel::SemiTilde, WaveguideKind::SemiInfinite)
        | (Channel::SemiOutput, WaveguideKind::SemiInfinite)
        | (Channel::InfLeft, WaveguideKind::Infinite)
        | (Channel::InfRight, WaveguideKind::Infinite) => {}
        (Channel::SemiTilde, _) => return Err(mismatch("SemiTilde")),
        (Channel::SemiOutput, _) => return Err(mismatch("SemiOutput")),
        (Channel::InfLeft, _) => return Err(mismatch("InfLeft")),
        (Channel::InfRight, _) => return Err(mismatch("InfRight")),
    }
    let atom = &net.atoms[j - 1];
    let mut terms = Vec::new();
    for p in &atom.points {
        match channel {
            Channel::SemiTilde => {
                terms.push(DeltaTerm { weight: Complex64::new(p.gamma_r.sqrt(), 0.0), delay: p.tau });
                terms.push(DeltaTerm {
                    weight: Complex64::new(-p.gamma_l.sqrt(), 0.0),
                    delay: -p.tau,
                });
            }
            Channel::SemiOutput => {
                terms.push(DeltaTerm { weight: Complex64::new(p.gamma_l.sqrt(), 0.0), delay: p.tau });
                terms.push(DeltaTerm {
                    weight: Complex64::new(-p.gamma_r.sqrt(), 0.0),
                    delay: -p.tau,
                });
            }
            Channel::InfLeft => {
                terms.push(DeltaTerm { weight: Complex64::new(p.gamma_l.sqrt(), 0.0), delay: p.tau });
            }
            Channel::InfRight => {
                terms.push(DeltaTerm {
                    weight: Complex64::new(p.gamma_r.sqrt(), 0.0),
                    delay: -p.tau,
                });
            }
        }
    }
    Ok(DelayKernel::from_terms(terms))
}

/// Input noise kernel of atom `j` for one channel id.
pub fn noise_kernel(net: &Network, j: usize, id: NoiseChannelId) -> Result<DelayKernel, KernelError> {
    net.checked()?;
    let channels = input_channels(net, j - 1);
    let field = match (id, net.kind) {
        (NoiseChannelId::Semi, WaveguideKind::SemiInfinite) => Field::Mirror,
        (NoiseChannelId::InfRightProp, WaveguideKind::Infinite) => Field::Right,
        (NoiseChannelId::InfLeftProp, WaveguideKind::Infinite) => Field::Left,
        _ => {
            return Err(KernelError::ChannelMismatch {
                channel: format!("{id:?}"),
                kind: net.kind,
            })
        }
    };
    Ok(channels
        .iter()
        .find(|c| c.field == field)
        .map(|c| c.kernel(false))
        .unwrap_or_default())
}

/// Commutator kernel of two named input noise channels. Channels living on
/// independent fields (left vs right propagation in an open guide) commute,
/// giving an empty kernel.
pub fn noise_commutator(
    net: &Network,
    j: usize,
    id_a: NoiseChannelId,
    l: usize,
    id_b: NoiseChannelId,
) -> Result<DelayKernel, KernelError> {
    let a = noise_kernel(net, j, id_a)?;
    let b = noise_kernel(net, l, id_b)?;
    let same_field = id_a == id_b;
    if !same_field {
        return Ok(DelayKernel::empty());
    }
    Ok(commutator_kernel(&a, &b))
}

/// Combined commutator kernel of the full input noise seen by atoms `j` and
/// `l` (1-based): the mirror channel for a semi-infinite guide, the sum of
/// the two propagation directions for an infinite one.
pub fn pairwise_commutator(net: &Network, j: usize, l: usize) -> Result<DelayKernel, KernelError> {
    net.checked()?;
    Ok(pairwise_commutator_impl(net, j - 1, l - 1, false))
}

/// Markovianity verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Markovianity {
    Markovian,
    NonMarkovian,
}

/// Why the classifier decided the way it did.
#[derive(Clone, Debug, PartialEq)]
pub enum MarkovWitness {
    /// A delayed delta survives in the commutator of channels `j` and `l`.
    DelayedTerm { j: usize, l: usize, term: DeltaTerm },
    /// The clause of the classification rule that is satisfied.
    Clause(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovVerdict {
    pub verdict: Markovianity,
    pub witness: MarkovWitness,
}

/// Classify the network: Markovian iff no pairwise input-noise commutator
/// kernel contains a delta at nonzero delay.
pub fn is_markovian(net: &Network) -> Result<MarkovVerdict, KernelError> {
    net.checked()?;
    let n = net.atom_count();
    for j in 0..n {
        for l in 0..n {
            let kernel = pairwise_commutator_impl(net, j, l, false);
            let delayed = kernel
                .terms()
                .iter()
                .filter(|t| t.delay.abs() >= DELAY_MERGE_TOL)
                .min_by(|a, b| {
                    (a.delay.abs(), -a.delay)
                        .partial_cmp(&(b.delay.abs(), -b.delay))
                        .unwrap()
                });
            if let Some(&term) = delayed {
                return Ok(MarkovVerdict {
                    verdict: Markovianity::NonMarkovian,
                    witness: MarkovWitness::DelayedTerm { j: j + 1, l: l + 1, term },
                });
            }
        }
    }
    let clause = match net.kind {
        WaveguideKind::SemiInfinite => {
            "every input-noise commutator is a bare delta: each coupled atom has γ_L·γ_R = 0 and no delayed cross terms survive"
        }
        WaveguideKind::Infinite => {
            "every input-noise commutator is a bare delta: co-propagating cross couplings vanish or the atoms are co-located"
        }
    };
    Ok(MarkovVerdict {
        verdict: Markovianity::Markovian,
        witness: MarkovWitness::Clause(String::from(clause)),
    })
}

/// The channel Itô table at step `dt`: entry `(j,l)` is the coefficient of
/// `dt` in `dB⁽ʲ⁾ dB⁽ˡ⁾†`.
///
/// All annihilation-side products (`dB dB`, `dB† dB†`, `dB† dB`) vanish on
/// the vacuum and are exposed as [`ItoTable::ANNIHILATION_PRODUCT`].
#[derive(Clone, Debug, PartialEq)]
pub struct ItoTable {
    n: usize,
    dt: f64,
    entries: Vec<Complex64>,
}

impl ItoTable {
    /// dB dB = dB† dB† = dB† dB = 0.
    pub const ANNIHILATION_PRODUCT: Complex64 = Complex64::new(0.0, 0.0);

    pub fn channel_count(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn entry(&self, j: usize, l: usize) -> Complex64 {
        self.entries[(j - 1) * self.n + (l - 1)]
    }
}

/// Build the Itô table: entry `(j,l)` sums the pairwise-commutator weights
/// with `|delay| ≤ dt` (the boundary counts as inside; the delay-0 term
/// counts fully).
///
/// In semi-infinite mode the construction assumes `dt` is smaller than the
/// first atom's first coupling delay; violating it is an error. Infinite
/// mode carries no such hypothesis.
pub fn ito_table(net: &Network, dt: f64) -> Result<ItoTable, KernelError> {
    net.checked()?;
    if !(dt > 0.0) {
        return Err(KernelError::NonPositiveStep { dt });
    }
    if net.kind == WaveguideKind::SemiInfinite {
        let tau_first = net.atoms[0].points[0].tau;
        if dt >= tau_first {
            return Err(KernelError::StepExceedsFirstDelay { dt, tau_first });
        }
    }
    let n = net.atom_count();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for l in 0..n {
            let kernel = pairwise_commutator_impl(net, j, l, false);
            entries[j * n + l] = kernel
                .terms()
                .iter()
                .filter(|t| t.delay.abs() <= dt)
                .map(|t| t.weight)
                .sum();
        }
    }
    Ok(ItoTable { n, dt, entries })
}

/// Per-pair activated coefficient lists for the Markov-approximated master
/// equation: entry `(j,l)` at time `t` is the sum of the amplitudes whose
/// activation delay is ≤ `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    n: usize,
    pairs: Vec<Vec<CoefficientTerm>>,
}

/// One activated contribution: `amplitude` switches on at `t = activation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientTerm {
    /// Complex rate, MHz.
    pub amplitude: Complex64,
    /// Activation delay, μs (≥ 0).
    pub activation: f64,
}

impl CoefficientTable {
    pub fn channel_count(&self) -> usize {
        self.n
    }

    /// The activated terms of pair `(j,l)` (1-based).
    pub fn terms(&self, j: usize, l: usize) -> &[CoefficientTerm] {
        &self.pairs[(j - 1) * self.n + (l - 1)]
    }

    /// Coefficient value at time `t`; `t = ∞` gives the fully activated value.
    pub fn value_at(&self, j: usize, l: usize, t: f64) -> Complex64 {
        self.terms(j, l)
            .iter()
            .filter(|c| c.activation <= t)
            .map(|c| c.amplitude)
            .sum()
    }

    /// Every distinct activation delay, ascending.
    pub fn activation_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .pairs
            .iter()
            .flat_map(|terms| terms.iter().map(|c| c.activation))
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup_by(|a, b| (*a - *b).abs() < DELAY_MERGE_TOL);
        times
    }
}

/// Build the activated coefficient table from the phase-folded pairwise
/// commutators: a kernel term `(w, d)` with `d ≥ 0` contributes amplitude
/// `w·e^{i·Δφ}` (folded in from the originating coupling-point phases, equal
/// to `e^{iω_a d}` for consistent positions) activating at `t = d`; the
/// delay-0 term carries half weight; negative delays never contribute.
pub fn gauge_coefficients(net: &Network) -> Result<CoefficientTable, KernelError> {
    net.checked()?;
    let n = net.atom_count();
    let mut pairs = Vec::with_capacity(n * n);
    for j in 0..n {
        for l in 0..n {
            let kernel = pairwise_commutator_impl(net, j, l, true);
            let mut terms: Vec<CoefficientTerm> = kernel
                .terms()
                .iter()
                .filter(|t| t.delay > -DELAY_MERGE_TOL)
                .map(|t| {
                    let boundary = t.delay.abs() < DELAY_MERGE_TOL;
                    CoefficientTerm {
                        amplitude: if boundary { 0.5 * t.weight } else { t.weight },
                        activation: if boundary { 0.0 } else { t.delay },
                    }
                })
                .collect();
            terms.sort_by(|a, b| a.activation.partial_cmp(&b.activation).unwrap());
            pairs.push(terms);
        }
    }
    Ok(CoefficientTable { n, pairs })
}
