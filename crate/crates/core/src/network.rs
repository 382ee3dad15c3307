//! Physical configuration of an atom-waveguide network.
//!
//! A [`Network`] is an ordered list of two-level [`Atom`]s attached to a
//! waveguide that is either terminated by a mirror ([`WaveguideKind::SemiInfinite`])
//! or open at both ends ([`WaveguideKind::Infinite`]). Each atom couples to
//! the guide at one or more [`CouplingPoint`]s; a point stores its
//! propagation delay `tau = z/c` and its phase `phi = ω_a z/c` separately,
//! because delays enter the kernel algebra and Itô thresholds while phases
//! enter the Markov-approximated coefficients. Networks are immutable after
//! construction and safe to share across trajectory workers.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use num_complex::Complex64;
// Needed for float math in the no_std build; redundant when a build in the
// same graph links std (whose inherent methods shadow the trait).
#[allow(unused_imports)]
use num_traits::Float;

/// Waveguide topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveguideKind {
    /// Terminated by a mirror at `z = 0`; one bidirectional field.
    SemiInfinite,
    /// Open; independent left- and right-propagating fields.
    Infinite,
}

/// Where the homodyne detector sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementPort {
    /// Open end of a semi-infinite guide.
    SemiInfiniteEnd,
    /// Left output of an infinite guide.
    InfiniteLeft,
    /// Right output of an infinite guide.
    InfiniteRight,
}

impl MeasurementPort {
    /// The waveguide kind this port can be attached to.
    pub fn kind(self) -> WaveguideKind {
        match self {
            MeasurementPort::SemiInfiniteEnd => WaveguideKind::SemiInfinite,
            MeasurementPort::InfiniteLeft | MeasurementPort::InfiniteRight => {
                WaveguideKind::Infinite
            }
        }
    }
}

/// One attachment of an atom to the waveguide.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingPoint {
    /// Propagation delay `z/c` from the reference end, μs. Non-negative.
    pub tau: f64,
    /// Phase `ω_a z/c`, radians.
    pub phi: f64,
    /// Coupling rate to the left-propagating field, MHz. Non-negative.
    pub gamma_l: f64,
    /// Coupling rate to the right-propagating field, MHz. Non-negative.
    pub gamma_r: f64,
}

impl CouplingPoint {
    pub fn new(tau: f64, phi: f64, gamma_l: f64, gamma_r: f64) -> Self {
        Self { tau, phi, gamma_l, gamma_r }
    }
}

/// A two-level atom and its attachments.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    /// Resonant frequency ω_a, MHz. Only enters through the identical-frequency
    /// check and the optional phase-consistency check; the dynamics are in the
    /// rotating frame.
    pub omega_a: f64,
    /// Extra decay rate to the environment outside the guide, MHz.
    pub eta: f64,
    /// Constant resonant drive amplitude Ω, MHz.
    pub drive_amplitude: f64,
    /// Coupling points, ordered by strictly increasing delay.
    pub points: Vec<CouplingPoint>,
}

impl Atom {
    /// Atom attached at a single point.
    pub fn single_point(tau: f64, phi: f64, gamma_l: f64, gamma_r: f64) -> Self {
        Self {
            omega_a: 1.0,
            eta: 0.0,
            drive_amplitude: 0.0,
            points: vec![CouplingPoint::new(tau, phi, gamma_l, gamma_r)],
        }
    }

    pub fn with_drive(mut self, omega: f64) -> Self {
        self.drive_amplitude = omega;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_omega_a(mut self, omega_a: f64) -> Self {
        self.omega_a = omega_a;
        self
    }

    /// Delay of the first coupling point, used for atom ordering.
    pub fn first_tau(&self) -> f64 {
        self.points.first().map(|p| p.tau).unwrap_or(f64::NAN)
    }
}

/// The full physical configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub kind: WaveguideKind,
    /// Atoms ordered by position (index `j = 1..N` in formulas).
    pub atoms: Vec<Atom>,
    pub port: MeasurementPort,
}

/// Errors from operations that require a valid network.
#[derive(Clone, Debug, PartialEq)]
pub enum NetworkError {
    /// The network fails validation; all violations are listed.
    Invalid(Vec<String>),
    /// Requested port is incompatible with the waveguide kind.
    PortMismatch { port: MeasurementPort, kind: WaveguideKind },
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::Invalid(violations) => {
                write!(f, "invalid network: {}", violations.join("; "))
            }
            NetworkError::PortMismatch { port, kind } => {
                write!(f, "port {port:?} is incompatible with waveguide kind {kind:?}")
            }
        }
    }
}

impl core::error::Error for NetworkError {}

impl Network {
    pub fn new(kind: WaveguideKind, atoms: Vec<Atom>, port: MeasurementPort) -> Self {
        Self { kind, atoms, port }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        1usize << self.atoms.len()
    }

    /// Collect every invariant violation. An empty list means the network is
    /// valid. Never aborts; idempotent and side-effect free.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.atoms.is_empty() {
            violations.push(String::from("network has no atoms"));
        }
        if self.port.kind() != self.kind {
            violations.push(format!(
                "measurement port {:?} requires waveguide kind {:?}, network has {:?}",
                self.port,
                self.port.kind(),
                self.kind
            ));
        }
        for (j, atom) in self.atoms.iter().enumerate() {
            let j = j + 1;
            if !atom.eta.is_finite() || atom.eta < 0.0 {
                violations.push(format!("atom {j}: eta = {} must be finite and >= 0", atom.eta));
            }
            if !atom.omega_a.is_finite() {
                violations.push(format!("atom {j}: omega_a must be finite"));
            }
            if !atom.drive_amplitude.is_finite() {
                violations.push(format!("atom {j}: drive amplitude must be finite"));
            }
            if atom.points.is_empty() {
                violations.push(format!("atom {j}: no coupling points"));
            }
            for (n, p) in atom.points.iter().enumerate() {
                let n = n + 1;
                if !p.tau.is_finite() || p.tau < 0.0 {
                    violations.push(format!(
                        "atom {j} point {n}: tau = {} must be finite and >= 0",
                        p.tau
                    ));
                }
                if !p.phi.is_finite() {
                    violations.push(format!("atom {j} point {n}: phi must be finite"));
                }
                if !p.gamma_l.is_finite() || p.gamma_l < 0.0 {
                    violations.push(format!(
                        "atom {j} point {n}: gamma_l = {} must be finite and >= 0",
                        p.gamma_l
                    ));
                }
                if !p.gamma_r.is_finite() || p.gamma_r < 0.0 {
                    violations.push(format!(
                        "atom {j} point {n}: gamma_r = {} must be finite and >= 0",
                        p.gamma_r
                    ));
                }
            }
            for w in atom.points.windows(2) {
                if !(w[0].tau < w[1].tau) {
                    violations.push(format!(
                        "atom {j}: point delays must be strictly increasing ({} then {})",
                        w[0].tau, w[1].tau
                    ));
                }
            }
        }
        for (j, w) in self.atoms.windows(2).enumerate() {
            let (a, b) = (w[0].first_tau(), w[1].first_tau());
            if a.is_finite() && b.is_finite() && a > b {
                violations.push(format!(
                    "atoms {} and {} out of order: first-point delays {} > {}",
                    j + 1,
                    j + 2,
                    a,
                    b
                ));
            }
        }
        violations
    }

    /// Validation as a `Result` for operations with a validity precondition.
    pub fn checked(&self) -> Result<(), NetworkError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(NetworkError::Invalid(violations))
        }
    }

    /// Optional consistency check between stored phases and `ω_a·tau`.
    /// Returns violations where `|phi − ω_a·tau| ≥ tol` (phases compared
    /// modulo nothing: the stored values are taken literally).
    pub fn phase_consistency(&self, omega_a: f64, tol: f64) -> Vec<String> {
        let mut violations = Vec::new();
        for (j, atom) in self.atoms.iter().enumerate() {
            for (n, p) in atom.points.iter().enumerate() {
                let expected = omega_a * p.tau;
                if (p.phi - expected).abs() >= tol {
                    violations.push(format!(
                        "atom {} point {}: phi = {} but omega_a*tau = {}",
                        j + 1,
                        n + 1,
                        p.phi,
                        expected
                    ));
                }
            }
        }
        violations
    }

    /// Per-atom weights `l_j = Σ_n l_jn` of the Markov-approximated coupling
    /// operator `L̄ = Σ_j l_j σ_j^-` seen at `port`:
    ///
    /// - semi-infinite end: `l_jn = √γ_L e^{+iφ} − √γ_R e^{−iφ}`,
    /// - infinite left:     `l_jn = √γ_L e^{+iφ}`,
    /// - infinite right:    `l_jn = √γ_R e^{−iφ}`.
    pub fn coupling_operator_weights(
        &self,
        port: MeasurementPort,
    ) -> Result<Vec<Complex64>, NetworkError> {
        self.checked()?;
        if port.kind() != self.kind {
            return Err(NetworkError::PortMismatch { port, kind: self.kind });
        }
        Ok(self
            .atoms
            .iter()
            .map(|atom| {
                atom.points
                    .iter()
                    .map(|p| point_weight(p, port))
                    .fold(Complex64::new(0.0, 0.0), |acc, w| acc + w)
            })
            .collect())
    }
}

fn point_weight(p: &CouplingPoint, port: MeasurementPort) -> Complex64 {
    let plus = Complex64::from_polar(1.0, p.phi);
    let minus = Complex64::from_polar(1.0, -p.phi);
    match port {
        MeasurementPort::SemiInfiniteEnd => p.gamma_l.sqrt() * plus - p.gamma_r.sqrt() * minus,
        MeasurementPort::InfiniteLeft => p.gamma_l.sqrt() * plus,
        MeasurementPort::InfiniteRight => p.gamma_r.sqrt() * minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn single_atom_net(gamma_l: f64, gamma_r: f64) -> Network {
        Network::new(
            WaveguideKind::SemiInfinite,
            vec![Atom::single_point(1.0, 0.0, gamma_l, gamma_r)],
            MeasurementPort::SemiInfiniteEnd,
        )
    }

    #[test]
    fn minimal_network_is_valid() {
        assert!(single_atom_net(0.2, 0.2).validate().is_empty());
    }

    #[test]
    fn negative_rate_is_reported() {
        let net = single_atom_net(-0.1, 0.2);
        let violations = net.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("gamma_l"));
        assert!(violations[0].contains(">= 0"));
    }

    #[test]
    fn port_topology_mismatch_is_reported() {
        let mut net = single_atom_net(0.2, 0.2);
        net.port = MeasurementPort::InfiniteLeft;
        let violations = net.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("port"));
    }

    #[test]
    fn validate_is_idempotent() {
        let net = single_atom_net(-0.1, 0.2);
        assert_eq!(net.validate(), net.validate());
    }

    #[test]
    fn symmetric_zero_phase_weight_cancels() {
        let net = single_atom_net(0.2, 0.2);
        let w = net.coupling_operator_weights(MeasurementPort::SemiInfiniteEnd).unwrap();
        assert_abs_diff_eq!(w[0].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fig3_weights_alternate_in_sign() {
        // Three atoms on an infinite guide, adjacent phase difference π,
        // measured at the right end: l_j = √γ_jR e^{−iφ_j}.
        let atoms: Vec<Atom> = [(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)]
            .iter()
            .map(|&(g, k)| Atom::single_point(k * PI, k * PI, g, g))
            .collect();
        let net = Network::new(WaveguideKind::Infinite, atoms, MeasurementPort::InfiniteRight);
        let w = net.coupling_operator_weights(MeasurementPort::InfiniteRight).unwrap();
        let phase1 = Complex64::from_polar(1.0, -PI);
        assert_abs_diff_eq!((w[0] - 0.1_f64.sqrt() * phase1).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((w[1] + 0.2_f64.sqrt() * phase1).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((w[2] - 0.3_f64.sqrt() * phase1).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn copoint_split_preserves_weight() {
        // Splitting one point into two equal-phase points whose √γ sum to the
        // original's leaves the port weight unchanged. The weight depends on
        // the points only through phases and rates, so the split points get
        // distinct delays to keep the atom well-formed.
        let g = |gamma: f64, f: f64| (f * gamma.sqrt()).powi(2);
        let split = Atom {
            omega_a: 1.0,
            eta: 0.0,
            drive_amplitude: 0.0,
            points: vec![
                CouplingPoint::new(1.0, 0.7, g(0.2, 0.25), g(0.3, 0.6)),
                CouplingPoint::new(1.1, 0.7, g(0.2, 0.75), g(0.3, 0.4)),
            ],
        };
        let port = MeasurementPort::SemiInfiniteEnd;
        let kind = WaveguideKind::SemiInfinite;
        let single_net =
            Network::new(kind, vec![Atom::single_point(1.0, 0.7, 0.2, 0.3)], port);
        let split_net = Network::new(kind, vec![split], port);
        let w_single = single_net.coupling_operator_weights(port).unwrap()[0];
        let w_split = split_net.coupling_operator_weights(port).unwrap()[0];
        assert!((w_single - w_split).norm() < 1e-12);
    }

    #[test]
    fn phase_consistency_flags_mismatch() {
        let net = single_atom_net(0.2, 0.2);
        assert!(net.phase_consistency(1.0, 1e-9).len() == 1);
        assert!(net.phase_consistency(0.0, 1e-9).is_empty());
    }
}
