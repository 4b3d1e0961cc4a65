//! Frozen-coefficient convergence analysis of the explicit source sub-step.
//!
//! With the drag rate `D = g|u| / (k1² H)` held constant, one sub-step maps
//! the velocity through the block `[[1+α, β], [-β, 1+α]]` of the
//! amplification matrix `J*`, whose velocity eigenvalues are `(1+α) ± iβ`.
//! Two convergence predicates are exposed:
//!
//! * the published cubic `aτ³ - bτ² + cτ - d < 0`, whose real root is the
//!   critical step `τ_c` (5.41 s for g = 9.81, k0 = 1e-4, k1 = 40,
//!   |u| = 0.1, H = 0.1);
//! * the modulus condition `(1+α)² + β² < 1` evaluated directly.
//!
//! The two do not coincide algebraically: the cubic's leading coefficient
//! carries an extra `4D²`, so the modulus route admits larger steps
//! (about 6.80 s for the same parameters). The simulator gates on the cubic.

use crate::mesh::DEFAULT_H_MIN;

/// Physical constants of the source terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Gravity, m/s².
    pub g: f64,
    /// Coriolis coefficient, 1/s.
    pub k0: f64,
    /// Chezy coefficient, m^(1/2)/s.
    pub k1: f64,
    /// Wind drag coefficient (dimensionless).
    pub xi: f64,
    /// Depth clamp, m.
    pub h_min: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            g: 9.81,
            k0: 1e-4,
            k1: 40.0,
            xi: 3.2e-6,
            h_min: DEFAULT_H_MIN,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.g > 0.0) {
            return Err("g must be positive");
        }
        if !(self.k1 > 0.0) {
            return Err("k1 must be positive");
        }
        if !(self.k0 >= 0.0) {
            return Err("k0 must be non-negative");
        }
        if !(self.xi >= 0.0) {
            return Err("xi must be non-negative");
        }
        if !(self.h_min > 0.0) {
            return Err("h_min must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityInputs {
    /// Explicit step τ, s.
    pub tau: f64,
    /// Velocity magnitude |u|, m/s.
    pub speed: f64,
    /// Water depth, m.
    pub depth: f64,
    pub params: PhysicalParams,
}

/// Coefficients of `aτ³ - bτ² + cτ - d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Cubic {
    pub fn eval(&self, tau: f64) -> f64 {
        ((self.a * tau - self.b) * tau + self.c) * tau - self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub inputs: StabilityInputs,
    /// Drag rate D, 1/s.
    pub drag: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `|λ₂,₃|` of J*.
    pub modulus: f64,
    pub cubic: Cubic,
    /// Real root of the cubic; `None` when D = 0 (never convergent).
    pub tau_c_paper: Option<f64>,
    /// First step at which the modulus reaches one; `None` when no step converges.
    pub tau_c_modulus: Option<f64>,
    pub convergent_paper: bool,
    pub convergent_modulus: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CriticalStepError {
    #[error("D = 0: the source sub-step is never convergent")]
    NeverConvergent,
    #[error("leading coefficient a = {0} must be positive")]
    BadLeading(f64),
}

/// Linearised Chezy drag rate `D = g|u| / (k1² H)`.
pub fn drag_d(speed: f64, depth: f64, params: &PhysicalParams) -> f64 {
    params.g * speed / (params.k1 * params.k1 * depth)
}

/// α and β as used by the convergence criterion:
/// `α = -τ²k0²/2 - τD + τ²D²/2`, `β = τk0 - τ²D`.
pub fn alpha_beta(tau: f64, k0: f64, drag: f64) -> (f64, f64) {
    let alpha = -tau * tau * k0 * k0 / 2.0 - tau * drag + tau * tau * drag * drag / 2.0;
    let beta = tau * k0 - tau * tau * drag;
    (alpha, beta)
}

/// α and β of the two-stage Taylor update `τA(I + τA/2)` with
/// `A = [[-D, k0], [-k0, -D]]`. α is identical to [`alpha_beta`]; β picks
/// up a factor k0 on its second-order term: `β = τk0 - τ²Dk0`.
pub fn alpha_beta_taylor(tau: f64, k0: f64, drag: f64) -> (f64, f64) {
    let alpha = -tau * tau * k0 * k0 / 2.0 - tau * drag + tau * tau * drag * drag / 2.0;
    let beta = tau * k0 - tau * tau * drag * k0;
    (alpha, beta)
}

/// Amplification matrix of the source sub-step acting on `(η, u1, u2)`.
pub fn build_j_star(alpha: f64, beta: f64) -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0 + alpha, beta], [0.0, -beta, 1.0 + alpha]]
}

/// Amplification matrix of the full splitting step with the spatial
/// dependence reduced to a bottom slope `grad_h = (∂H/∂x1, ∂H/∂x2)`.
/// Independent of θ2.
pub fn build_j_star_star(alpha: f64, beta: f64, tau_tilde: f64, theta1: f64, grad_h: [f64; 2]) -> [[f64; 3]; 3] {
    let [h1, h2] = grad_h;
    let r12 = -tau_tilde * (h1 + h2 * theta1 * alpha - h2 * theta1 * beta);
    let r13 = -tau_tilde * (h2 + h1 * theta1 * beta - h2 * theta1 * alpha);
    [[1.0, r12, r13], [0.0, 1.0 + alpha, beta], [0.0, -beta, 1.0 + alpha]]
}

/// `|(1+α) ± iβ|`.
pub fn velocity_mode_modulus(alpha: f64, beta: f64) -> f64 {
    libm::hypot(1.0 + alpha, beta)
}

/// Coefficients `a = k0⁴ + D²(4 - k0²) + 4D²`, `b = 4D(D² + 2k0 - k0²)`,
/// `c = 8D²`, `d = 8D`.
pub fn cubic_coefficients(k0: f64, drag: f64) -> Cubic {
    let k2 = k0 * k0;
    let d2 = drag * drag;
    Cubic {
        a: k2 * k2 + d2 * (4.0 - k2) + 4.0 * d2,
        b: 4.0 * drag * (d2 + 2.0 * k0 - k2),
        c: 8.0 * d2,
        d: 8.0 * drag,
    }
}

/// Cardano's real root of `aτ³ - bτ² + cτ - d = 0`.
///
/// Falls back to [`tau_c_bisection`] when the discriminant under the square
/// root is negative (three real roots) or the result is not a positive root.
pub fn tau_c_closed_form(cubic: &Cubic) -> Result<f64, CriticalStepError> {
    let Cubic { a, b, c, d } = *cubic;
    if d == 0.0 {
        return Err(CriticalStepError::NeverConvergent);
    }
    if !(a > 0.0) {
        return Err(CriticalStepError::BadLeading(a));
    }
    let p = -b * b + 3.0 * a * c;
    let r = 2.0 * b * b * b - 9.0 * a * b * c + 27.0 * a * a * d;
    let disc = 4.0 * p * p * p + r * r;
    if disc >= 0.0 {
        let q = r + libm::sqrt(disc);
        let q3 = libm::cbrt(q);
        let two3 = libm::cbrt(2.0);
        let tau = b / (3.0 * a) - two3 * p / (3.0 * a * q3) + q3 / (two3 * 3.0 * a);
        if tau.is_finite() && tau > 0.0 && libm::fabs(cubic.eval(tau)) <= 1e-9 * libm::fabs(d) {
            return Ok(tau);
        }
    }
    tau_c_bisection(cubic)
}

/// Positive root of the cubic by bracketing from zero and bisection.
pub fn tau_c_bisection(cubic: &Cubic) -> Result<f64, CriticalStepError> {
    if cubic.d == 0.0 {
        return Err(CriticalStepError::NeverConvergent);
    }
    if !(cubic.a > 0.0) {
        return Err(CriticalStepError::BadLeading(cubic.a));
    }
    // f(0) = -d < 0 and f -> +inf, so some bracket [0, hi] exists
    let f = |t: f64| cubic.eval(t);
    Ok(first_crossing(f, 1.0).expect("cubic with a > 0 changes sign"))
}

/// Bisect the first crossing of `f` from negative to non-negative, scanning
/// outward from `start` by doubling. `None` if `f` stays negative.
fn first_crossing(f: impl Fn(f64) -> f64, start: f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut hi = start;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Cubic-criterion predicate: D ≠ 0 and the cubic is strictly negative at τ.
pub fn is_convergent_paper(tau: f64, k0: f64, drag: f64) -> bool {
    drag != 0.0 && cubic_coefficients(k0, drag).eval(tau) < 0.0
}

/// `2α + α² + β²`; negative exactly when the velocity modulus is below one.
pub fn modulus_excess(tau: f64, k0: f64, drag: f64) -> f64 {
    let (alpha, beta) = alpha_beta(tau, k0, drag);
    2.0 * alpha + alpha * alpha + beta * beta
}

/// Modulus predicate `(1+α)² + β² < 1`.
pub fn is_convergent_modulus(tau: f64, k0: f64, drag: f64) -> bool {
    modulus_excess(tau, k0, drag) < 0.0
}

/// Critical step of the modulus predicate, `None` when no positive step is
/// convergent (D = 0).
pub fn tau_c_modulus(k0: f64, drag: f64) -> Option<f64> {
    if drag <= 0.0 {
        return None;
    }
    // 2α + α² + β² = τ·(-2D + O(τ)); bisect the bracketed factor
    let start = 1e-6 / drag.max(k0);
    first_crossing(|t| modulus_excess(t, k0, drag) / t, start)
}

/// Full report for one parameter set.
pub fn analyze(inputs: &StabilityInputs) -> StabilityReport {
    let StabilityInputs {
        tau,
        speed,
        depth,
        params,
    } = *inputs;
    let drag = drag_d(speed, depth, &params);
    let (alpha, beta) = alpha_beta(tau, params.k0, drag);
    let cubic = cubic_coefficients(params.k0, drag);
    StabilityReport {
        inputs: *inputs,
        drag,
        alpha,
        beta,
        modulus: velocity_mode_modulus(alpha, beta),
        cubic,
        tau_c_paper: tau_c_closed_form(&cubic).ok(),
        tau_c_modulus: tau_c_modulus(params.k0, drag),
        convergent_paper: is_convergent_paper(tau, params.k0, drag),
        convergent_modulus: is_convergent_modulus(tau, params.k0, drag),
    }
}
