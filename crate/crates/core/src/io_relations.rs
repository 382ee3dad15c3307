//! Input-output analysis: exact output-field kernels, their
//! Markov-approximated weights, and multi-point ↔ single-point equivalence
//! certificates.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
// Needed for float math in the no_std build; redundant when a build in the
// same graph links std (whose inherent methods shadow the trait).
#[allow(unused_imports)]
use num_traits::Float;

use crate::kernel::{channel_kernel, Channel, DelayKernel, KernelError};
use crate::network::{Atom, MeasurementPort, Network, WaveguideKind};

/// Output field at a port: per-atom exact kernel and per-atom
/// Markov-approximated complex weight.
///
/// The weight of atom `j` is the phase-folded kernel, `Σ w·e^{iφ}` over its
/// terms with the originating point phases, and agrees with
/// [`Network::coupling_operator_weights`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputRelation {
    pub port: MeasurementPort,
    pub kernels: Vec<DelayKernel>,
    pub markov_weights: Vec<Complex64>,
}

/// Exact and Markov-approximated output relation at `port`.
pub fn output_relation(net: &Network, port: MeasurementPort) -> Result<OutputRelation, KernelError> {
    net.checked()?;
    let channel = match port {
        MeasurementPort::SemiInfiniteEnd => Channel::SemiOutput,
        MeasurementPort::InfiniteLeft => Channel::InfLeft,
        MeasurementPort::InfiniteRight => Channel::InfRight,
    };
    let kernels = (1..=net.atom_count())
        .map(|j| channel_kernel(net, j, channel))
        .collect::<Result<Vec<_>, _>>()?;
    let markov_weights = net.coupling_operator_weights(port).map_err(KernelError::Network)?;
    Ok(OutputRelation { port, kernels, markov_weights })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    NotEquivalent,
}

/// Residuals of the multi-point ↔ single-point equivalence conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub verdict: Equivalence,
    pub residuals: Vec<f64>,
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}, residuals [", self.verdict)?;
        for (i, r) in self.residuals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r:.3e}")?;
        }
        write!(f, "]")
    }
}

/// Residual tolerance: the conditions are exact algebraic identities, so
/// only floating-point slack is allowed.
pub const EQUIVALENCE_TOL: f64 = 1e-10;

/// Check whether a multi-point atom's input-output difference matches a
/// single-point atom's at the Markov level.
///
/// Semi-infinite guides impose two real conditions,
///
/// ```text
/// (√γ_L + √γ_R) sin φ = Σ_n (√γ_L⁽ⁿ⁾ + √γ_R⁽ⁿ⁾) sin φ⁽ⁿ⁾
/// (√γ_L − √γ_R) cos φ = Σ_n (√γ_L⁽ⁿ⁾ − √γ_R⁽ⁿ⁾) cos φ⁽ⁿ⁾
/// ```
///
/// and infinite guides two complex ones,
///
/// ```text
/// √γ_L e^{+iφ} = Σ_n √γ_L⁽ⁿ⁾ e^{+iφ⁽ⁿ⁾},   √γ_R e^{−iφ} = Σ_n √γ_R⁽ⁿ⁾ e^{−iφ⁽ⁿ⁾}.
/// ```
///
/// `single` must have exactly one coupling point.
pub fn equivalence_check(multi: &Atom, single: &Atom, kind: WaveguideKind) -> EquivalenceReport {
    assert_eq!(single.points.len(), 1, "reference atom must have one coupling point");
    let s = &single.points[0];
    let residuals = match kind {
        WaveguideKind::SemiInfinite => {
            let mut sin_sum = 0.0;
            let mut cos_sum = 0.0;
            for p in &multi.points {
                sin_sum += (p.gamma_l.sqrt() + p.gamma_r.sqrt()) * p.phi.sin();
                cos_sum += (p.gamma_l.sqrt() - p.gamma_r.sqrt()) * p.phi.cos();
            }
            let r_sin = (s.gamma_l.sqrt() + s.gamma_r.sqrt()) * s.phi.sin() - sin_sum;
            let r_cos = (s.gamma_l.sqrt() - s.gamma_r.sqrt()) * s.phi.cos() - cos_sum;
            alloc::vec![r_sin.abs(), r_cos.abs()]
        }
        WaveguideKind::Infinite => {
            let mut left = Complex64::new(0.0, 0.0);
            let mut right = Complex64::new(0.0, 0.0);
            for p in &multi.points {
                left += p.gamma_l.sqrt() * Complex64::from_polar(1.0, p.phi);
                right += p.gamma_r.sqrt() * Complex64::from_polar(1.0, -p.phi);
            }
            let r_left = s.gamma_l.sqrt() * Complex64::from_polar(1.0, s.phi) - left;
            let r_right = s.gamma_r.sqrt() * Complex64::from_polar(1.0, -s.phi) - right;
            alloc::vec![r_left.norm(), r_right.norm()]
        }
    };
    let max = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    EquivalenceReport {
        verdict: if max < EQUIVALENCE_TOL {
            Equivalence::Equivalent
        } else {
            Equivalence::NotEquivalent
        },
        residuals,
    }
}
