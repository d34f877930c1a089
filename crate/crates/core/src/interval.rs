//! Robin Laplacians `B_{L,γ} = -d²/dt²` on `(-L, L)` with `±u'(±L) = γ u(±L)`.
//!
//! The ground state is even, `cosh(m t / L)` with `m tanh m = γL` and
//! `E₁ = -(m/L)²`. The second state is odd: `sinh(kt)` with `k coth(kL) = γ`
//! when `γL > 1`, and `sin(kt)` with `kL cot(kL) = γL` otherwise.
//!
//! Ratios of hyperbolic functions are evaluated in terms of `q = e^{-2m}` so
//! that nothing overflows for large `m`.

use crate::{Error, Result};

/// Residual tolerance for `m tanh m = γL`: absolute below 1, relative above.
pub const ROOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalProblem {
    /// Half-length of the interval.
    pub half_length: f64,
    /// Robin coefficient.
    pub gamma: f64,
}

impl IntervalProblem {
    pub fn new(half_length: f64, gamma: f64) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::domain(format!("half-length must be positive, got {half_length}")));
        }
        if !gamma.is_finite() {
            return Err(Error::domain("Robin coefficient must be finite"));
        }
        Ok(Self { half_length, gamma })
    }

    pub fn ground_state(&self) -> Result<IntervalGroundState> {
        if !(self.gamma > 0.0) {
            return Err(Error::domain("ground-state data needs γ > 0"));
        }
        let m = solve_m(self.gamma * self.half_length)?;
        let l = self.half_length;
        Ok(IntervalGroundState {
            m_value: m,
            energy: -(m / l) * (m / l),
            normalization: (l * (sinh_ratio_plus_one_scaled(m).0)).sqrt().recip()
                * (-sinh_ratio_plus_one_scaled(m).1 / 2.0).exp(),
        })
    }
}

/// Ground-state data of `B_{L,γ}` for `γ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalGroundState {
    /// `m(γL)`, the positive root of `m tanh m = γL`.
    pub m_value: f64,
    /// `E₁(L, γ) = -(m/L)²`.
    pub energy: f64,
    /// `C_L(γ) = L^{-1/2} (sinh(2m)/(2m) + 1)^{-1/2}`.
    pub normalization: f64,
}

/// `(sinh(2m)/(2m) + 1)` written as `value · e^{exponent}` with the
/// exponent `2m` pulled out for large `m`.
fn sinh_ratio_plus_one_scaled(m: f64) -> (f64, f64) {
    if m < 1.0 {
        (sinhc(2.0 * m) + 1.0, 0.0)
    } else {
        let q = (-2.0 * m).exp();
        (-(-4.0 * m).exp_m1() / (4.0 * m) + q, 2.0 * m)
    }
}

/// `sinh(x)/x`, accurate near zero.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 + x2 / 6.0 * (1.0 + x2 / 20.0)
    } else {
        x.sinh() / x
    }
}

fn check_root_residual(m: f64, target: f64) -> bool {
    // Absolute, except where rounding of m·tanh m itself exceeds it.
    (m * m.tanh() - target).abs() <= ROOT_TOLERANCE.max(4.0 * f64::EPSILON * target)
}

/// Bracketed Newton iteration for an increasing function `f` on `[lo, hi]`.
fn bracketed_newton<F>(f: F, mut lo: f64, mut hi: f64, start: f64, done: impl Fn(f64) -> bool) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = start.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if done(x) {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        x = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            x = 0.5 * (lo + hi);
            if done(x) {
                return Ok(x);
            }
            let (flo, _) = f(lo);
            let (fhi, _) = f(hi);
            return Ok(if flo.abs() < fhi.abs() { lo } else { hi });
        }
    }
    Err(Error::NonConvergence {
        iterations: 200,
        detail: format!("bracketed Newton stalled in [{lo}, {hi}]"),
    })
}

/// The unique positive root `m` of `m tanh m = γL`.
pub fn solve_m(gamma_l: f64) -> Result<f64> {
    if !(gamma_l > 0.0) || !gamma_l.is_finite() {
        return Err(Error::domain(format!("m(γL) needs γL > 0, got {gamma_l}")));
    }
    // min(m², m) ≥ m tanh m ≥ m²/(1+m) brackets the root.
    let lo = gamma_l.sqrt().max(gamma_l);
    let hi = 0.5 * (gamma_l + (gamma_l * gamma_l + 4.0 * gamma_l).sqrt());
    if check_root_residual(lo, gamma_l) {
        return Ok(lo);
    }
    let f = |m: f64| {
        let t = m.tanh();
        (m * t - gamma_l, t + m * (1.0 - t * t))
    };
    let m = bracketed_newton(f, lo, hi, lo, |m| check_root_residual(m, gamma_l))?;
    Ok(m)
}

/// `E₁(L, γ)`; equals `E₁(1, γL)/L²` by construction.
pub fn e1_interval(p: IntervalProblem) -> Result<f64> {
    let l = p.half_length;
    if p.gamma > 0.0 {
        let m = solve_m(p.gamma * l)?;
        Ok(-(m / l) * (m / l))
    } else if p.gamma == 0.0 {
        Ok(0.0)
    } else {
        // Oscillatory even branch: x tan x = -γL, x ∈ (0, π/2).
        let g = -p.gamma * l;
        let f = |x: f64| {
            let t = x.tan();
            (x * t - g, t + x * (1.0 + t * t))
        };
        let x = bracketed_newton(f, 0.0, std::f64::consts::FRAC_PI_2 * (1.0 - 1e-15), g.sqrt().min(1.0), |x| {
            (x * x.tan() - g).abs() <= ROOT_TOLERANCE * g.max(1.0)
        })?;
        Ok((x / l) * (x / l))
    }
}

/// `E₂(L, γ)`, the odd ground state. Negative exactly when `γL > 1`.
pub fn e2_interval(p: IntervalProblem) -> Result<f64> {
    let l = p.half_length;
    let g = p.gamma * l;
    if g > 1.0 {
        // k coth(kL) = γ: with x = kL, x coth x = g, x ∈ (0, g].
        let f = |x: f64| {
            let c = 1.0 / x.tanh();
            (x * c - g, c - x * (c * c - 1.0))
        };
        let lo = 0.0_f64.max((3.0 * (g - 1.0)).sqrt().min(g - 1.0));
        let start = if g < 1.5 { (3.0 * (g - 1.0)).sqrt() } else { g };
        let x = bracketed_newton(
            |x| if x == 0.0 { (1.0 - g, 0.0) } else { f(x) },
            lo,
            g,
            start,
            |x| x > 0.0 && (x / x.tanh() - g).abs() <= ROOT_TOLERANCE * g,
        )?;
        Ok(-(x / l) * (x / l))
    } else if g == 1.0 {
        Ok(0.0)
    } else {
        // k cot(kL)·L = g: x cot x = g with x ∈ (0, π), x cot x decreasing.
        let cot_term = |x: f64| if x == 0.0 { 1.0 } else { x / x.tan() };
        let f = |x: f64| {
            let s = x.sin();
            let val = cot_term(x) - g;
            let der = if x == 0.0 { 0.0 } else { (x.cos() * s - x) / (s * s) };
            // negate to make the function increasing
            (-val, -der)
        };
        let start = if g > 0.9 {
            (3.0 * (1.0 - g)).sqrt()
        } else {
            std::f64::consts::FRAC_PI_2
        };
        let x = bracketed_newton(f, 0.0, std::f64::consts::PI, start, |x| {
            x > 0.0 && (cot_term(x) - g).abs() <= ROOT_TOLERANCE * g.abs().max(1.0)
        })?;
        Ok((x / l) * (x / l))
    }
}

/// `∂E₁/∂γ (L, γ) = -2cosh²(m) / (L (sinh(2m)/(2m) + 1))`, `m = m(γL)`.
pub fn d_e1_d_gamma(p: IntervalProblem) -> Result<f64> {
    if !(p.gamma > 0.0) {
        return Err(Error::domain("dE₁/dγ needs γ > 0"));
    }
    let m = solve_m(p.gamma * p.half_length)?;
    Ok(-2.0 * cosh2_over_sinh_ratio_plus_one(m) / p.half_length)
}

/// `cosh²(m) / (sinh(2m)/(2m) + 1)`, bounded by a multiple of `m`.
fn cosh2_over_sinh_ratio_plus_one(m: f64) -> f64 {
    let q = (-2.0 * m).exp();
    let num = (1.0 + q) * (1.0 + q) / 4.0;
    let den = -(-4.0 * m).exp_m1() / (4.0 * m) + q;
    num / den
}

/// `φ(γ) = (E₁(1, γ) + γ)/γ²`.
///
/// At the root, `γ - m² = m (tanh m - m)`, which avoids the cancellation in
/// `E₁ + γ` for small γ.
pub fn phi_of_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain("φ(γ) needs γ > 0"));
    }
    let m = solve_m(gamma)?;
    let tanh_minus_id = if m < 0.05 {
        // tanh m - m = -m³/3 + 2m⁵/15 - 17m⁷/315 + 62m⁹/2835
        let m2 = m * m;
        m * m2 * (-1.0 / 3.0 + m2 * (2.0 / 15.0 + m2 * (-17.0 / 315.0 + m2 * 62.0 / 2835.0)))
    } else {
        m.tanh() - m
    };
    Ok(m * tanh_minus_id / (gamma * gamma))
}

/// Ground state `Φ_L(γ, t) = cosh(m t/L)`, optionally times `C_L(γ)`.
pub fn eigfun_interval(p: IntervalProblem, t: f64, normalized: bool) -> Result<f64> {
    if t.abs() > p.half_length {
        return Err(Error::domain(format!("|t| = {} exceeds L = {}", t.abs(), p.half_length)));
    }
    if !(p.gamma > 0.0) {
        return Err(Error::domain("ground state needs γ > 0"));
    }
    let l = p.half_length;
    let m = solve_m(p.gamma * l)?;
    let x = (m * t / l).abs();
    if !normalized {
        return Ok(x.cosh());
    }
    // log cosh x - ½ log(L (S + 1)), S = sinh(2m)/(2m)
    let ln_cosh = x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2;
    let (scaled, exponent) = sinh_ratio_plus_one_scaled(m);
    let ln_norm = -0.5 * ((l * scaled).ln() + exponent);
    Ok((ln_cosh + ln_norm).exp())
}

/// Derivative in `t` of the unnormalized ground state.
pub fn eigfun_interval_derivative(p: IntervalProblem, t: f64) -> Result<f64> {
    if t.abs() > p.half_length {
        return Err(Error::domain("t outside the interval"));
    }
    let m = solve_m(p.gamma * p.half_length)?;
    let k = m / p.half_length;
    Ok(k * (k * t).sinh())
}

/// Pieces of the transverse-energy function, `F = G + H`, evaluated at `m = m(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseEnergy {
    pub g: f64,
    pub h: f64,
}

impl TransverseEnergy {
    pub fn total(&self) -> f64 {
        self.g + self.h
    }
}

/// `G(x)` and `H(x)` with
///
/// ```text
/// G = cosh⁴m/m² · (S+1)^{-4} · (cosh(2m)/(2m) - sinh(2m)/(2m)²)²
/// H = cosh⁴m/m² · (S-1)/(S+1)³,        S = sinh(2m)/(2m),  m = m(x).
/// ```
///
/// Their limits are `G → 1/36, H → 1/12` as `x → 0` and `G → 1, H → 1` as
/// `x → ∞`.
pub fn transverse_energy_parts(x: f64) -> Result<TransverseEnergy> {
    if !(x > 0.0) {
        return Err(Error::domain("F(x) needs x > 0"));
    }
    let m = solve_m(x)?;
    let y = 2.0 * m;
    if m < 1.0 {
        // S - 1 = Σ_{k≥1} y^{2k}/(2k+1)!,  B = Σ_{k≥1} 2k·y^{2k-1}/(2k+1)!
        let y2 = y * y;
        let (mut s_minus_one, mut b) = (0.0, 0.0);
        let mut pow = 1.0; // y^{2k-2}
        let mut fact = 1.0; // (2k+1)!
        for k in 1..30 {
            fact *= (2 * k) as f64 * (2 * k + 1) as f64;
            pow *= if k == 1 { 1.0 } else { y2 };
            s_minus_one += pow * y2 / fact;
            b += 2.0 * k as f64 * pow * y / fact;
        }
        let s_plus_one = s_minus_one + 2.0;
        let c4 = m.cosh().powi(4) / (m * m);
        Ok(TransverseEnergy {
            g: c4 * b * b / s_plus_one.powi(4),
            h: c4 * s_minus_one / s_plus_one.powi(3),
        })
    } else {
        // Everything scaled by powers of e^{2m}; the exponents cancel.
        let q = (-y).exp();
        let q2 = q * q;
        let one_minus_q2 = -(-2.0 * y).exp_m1();
        let c4 = (1.0 + q).powi(4) / (16.0 * m * m);
        let s_plus = one_minus_q2 / (2.0 * y) + q;
        let s_minus = one_minus_q2 / (2.0 * y) - q;
        let b = (1.0 + q2) / (2.0 * y) - one_minus_q2 / (2.0 * y * y);
        Ok(TransverseEnergy {
            g: c4 * b * b / s_plus.powi(4),
            h: c4 * s_minus / s_plus.powi(3),
        })
    }
}

/// `F(x) = G(x) + H(x)`.
pub fn transverse_energy_f(x: f64) -> Result<f64> {
    transverse_energy_parts(x).map(|p| p.total())
}

/// The majorant `2α² F(rα)` of the adiabatic correction `K_α(r)`.
pub fn k_alpha_bound(r: f64, alpha: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("r must be positive"));
    }
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain("α must lie in (0, π/2)"));
    }
    Ok(2.0 * alpha * alpha * transverse_energy_f(r * alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn m_at_one_matches_bisection() {
        let oracle = bisect(|m| m * m.tanh() - 1.0, 0.0, 2.0);
        assert!((oracle - 1.199_678_640_257_734).abs() < 1e-14);
        assert!((solve_m(1.0).unwrap() - oracle).abs() < 1e-13);
    }

    #[test]
    fn m_saturates_for_large_argument() {
        let m = solve_m(20.0).unwrap();
        assert!(((m - 20.0) / 20.0).abs() < 1e-15);
    }

    #[test]
    fn m_small_argument_is_sqrt() {
        let g = 1e-8;
        let m = solve_m(g).unwrap();
        assert!((m / g.sqrt() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn m_rejects_nonpositive() {
        assert!(matches!(solve_m(0.0), Err(Error::Domain(_))));
        assert!(matches!(solve_m(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn e1_scaling_identity() {
        let a = e1_interval(IntervalProblem::new(2.0, 0.5).unwrap()).unwrap();
        let b = e1_interval(IntervalProblem::new(1.0, 1.0).unwrap()).unwrap();
        assert!((a - b / 4.0).abs() < 1e-15);
    }

    #[test]
    fn e1_vanishes_with_gamma() {
        let e = e1_interval(IntervalProblem::new(1.0, 1e-10).unwrap()).unwrap();
        assert!(e.abs() < 2e-10 && e < 0.0);
    }

    #[test]
    fn e1_e2_large_length_asymptotics() {
        for l in 3..=8 {
            let l = l as f64;
            let p = IntervalProblem::new(l, 1.0).unwrap();
            let e1 = e1_interval(p).unwrap();
            let e2 = e2_interval(p).unwrap();
            let gap1 = (e1 + 1.0 + 4.0 * (-2.0 * l).exp()) / (l * (-4.0 * l).exp());
            let gap2 = (e2 + 1.0 - 4.0 * (-2.0 * l).exp()) / (l * (-4.0 * l).exp());
            assert!(gap1.abs() < 50.0, "L={l} gap1={gap1}");
            assert!(gap2.abs() < 50.0, "L={l} gap2={gap2}");
        }
    }

    #[test]
    fn e2_neumann_value() {
        let e2 = e2_interval(IntervalProblem::new(1.0, 0.0).unwrap()).unwrap();
        assert!((e2 - PI * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn e2_changes_sign_at_gamma_l_one() {
        let at = e2_interval(IntervalProblem::new(1.0, 1.0).unwrap()).unwrap();
        assert!(at >= 0.0);
        for d in [1e-6, 1e-3, 0.1] {
            let e = e2_interval(IntervalProblem::new(1.0, 1.0 + d).unwrap()).unwrap();
            assert!(e < 0.0, "δ={d}: {e}");
            let e = e2_interval(IntervalProblem::new(1.0, 1.0 - d).unwrap()).unwrap();
            assert!(e > 0.0, "δ=-{d}: {e}");
        }
    }

    #[test]
    fn e2_negative_gamma_branch_is_continuous() {
        let a = e2_interval(IntervalProblem::new(1.0, -1e-9).unwrap()).unwrap();
        assert!((a - PI * PI / 4.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_limits_and_scaling() {
        let d0 = d_e1_d_gamma(IntervalProblem::new(1.0, 1e-9).unwrap()).unwrap();
        assert!((d0 + 1.0).abs() < 1e-8);
        let a = d_e1_d_gamma(IntervalProblem::new(2.0, 0.5).unwrap()).unwrap();
        let b = d_e1_d_gamma(IntervalProblem::new(1.0, 1.0).unwrap()).unwrap();
        assert!((a - b / 2.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-5;
        for g in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
            let e = |g| e1_interval(IntervalProblem::new(1.0, g).unwrap()).unwrap();
            let fd = (e(g + h) - e(g - h)) / (2.0 * h);
            let d = d_e1_d_gamma(IntervalProblem::new(1.0, g).unwrap()).unwrap();
            assert!((fd - d).abs() < 1e-6, "γ={g}: fd={fd} d={d}");
        }
    }

    #[test]
    fn derivative_is_finite_for_huge_gamma() {
        let d = d_e1_d_gamma(IntervalProblem::new(1.0, 900.0).unwrap()).unwrap();
        // ∂E₁/∂γ → -2γ as γ → ∞
        assert!((d / -1800.0 - 1.0).abs() < 1e-2, "{d}");
    }

    #[test]
    fn phi_values() {
        assert!(phi_of_gamma(1e-4).unwrap().abs() <= 2.0);
        assert!((phi_of_gamma(1e-6).unwrap() + 1.0 / 3.0).abs() < 1e-5);
        let m50 = solve_m(50.0).unwrap();
        let oracle = (-m50 * m50 + 50.0) / 2500.0;
        let phi50 = phi_of_gamma(50.0).unwrap();
        assert!((phi50 - oracle).abs() < 1e-12);
        // m(50) = 50 to machine precision, so φ(50) = -1 + 1/50.
        assert!((phi50 + 1.0 - 1.0 / 50.0).abs() < 1e-12);
        for g in [10.0, 100.0, 1e3, 1e4] {
            assert!((phi_of_gamma(g).unwrap() + 1.0).abs() <= 1.0 / g + 1e-12);
        }
        let e = e1_interval(IntervalProblem::new(1.0, 1.0).unwrap()).unwrap();
        assert!((phi_of_gamma(1.0).unwrap() - (e + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn eigenfunction_normalization_and_boundary_identity() {
        for (l, g) in [(1.0, 1.0), (2.5, 0.3), (0.5, 40.0)] {
            let p = IntervalProblem::new(l, g).unwrap();
            assert_eq!(eigfun_interval(p, 0.0, false).unwrap(), 1.0);
            let q = crate::quadrature::integrate(
                |t| eigfun_interval(p, t, true).unwrap().powi(2),
                -l,
                l,
                1e-13,
                0.0,
            );
            assert!((q.value - 1.0).abs() < 1e-10, "L={l} γ={g}: {}", q.value);
            let phi = eigfun_interval(p, l, false).unwrap();
            let dphi = eigfun_interval_derivative(p, l).unwrap();
            assert!((dphi - g * phi).abs() <= 1e-10 * phi.abs().max(1.0));
            let dphi_m = eigfun_interval_derivative(p, -l).unwrap();
            assert!((-dphi_m - g * phi).abs() <= 1e-10 * phi.abs().max(1.0));
        }
        let p = IntervalProblem::new(1.0, 1.0).unwrap();
        assert!(eigfun_interval(p, 1.5, false).is_err());
    }

    #[test]
    fn normalization_matches_ground_state_record() {
        let p = IntervalProblem::new(1.3, 0.7).unwrap();
        let gs = p.ground_state().unwrap();
        let direct = eigfun_interval(p, 0.0, true).unwrap();
        assert!((gs.normalization - direct).abs() < 1e-14);
        assert!((gs.energy + (gs.m_value / 1.3).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn transverse_energy_limits() {
        let small = transverse_energy_parts(1e-6).unwrap();
        assert!((small.g - 1.0 / 36.0).abs() < 1e-6);
        assert!((small.h - 1.0 / 12.0).abs() < 1e-6);
        let large = transverse_energy_parts(1e3).unwrap();
        assert!((large.g - 1.0).abs() < 3e-3);
        assert!((large.h - 1.0).abs() < 1e-6);
        let huge = transverse_energy_parts(1e6).unwrap();
        assert!((huge.total() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn transverse_energy_branches_agree() {
        // m(x) = 1 at x = tanh(1)
        let x0 = 1.0_f64.tanh();
        let a = transverse_energy_f(x0 * (1.0 - 1e-12)).unwrap();
        let b = transverse_energy_f(x0 * (1.0 + 1e-12)).unwrap();
        assert!((a - b).abs() < 1e-10);
        // high-precision reference value at x = 1
        let f1 = transverse_energy_parts(1.0).unwrap();
        assert!((f1.g - 0.120_692_505_388).abs() < 1e-11);
        assert!((f1.h - 0.270_723_505_052).abs() < 1e-11);
    }

    #[test]
    fn k_alpha_bound_limits() {
        let a = 0.1;
        let sup_f = (-4..=4)
            .flat_map(|e| (0..10).map(move |i| 10f64.powf(e as f64 + i as f64 / 10.0)))
            .map(|x| transverse_energy_f(x).unwrap())
            .fold(0.0, f64::max);
        for e in -3..=3 {
            let r = 10f64.powi(e);
            assert!(k_alpha_bound(r, a).unwrap() <= 2.0 * a * a * sup_f * (1.0 + 1e-12));
        }
        let tiny = k_alpha_bound(1e-8, a).unwrap();
        assert!((tiny - 2.0 * a * a / 9.0).abs() < 1e-6);
        let big = k_alpha_bound(1e8, a).unwrap();
        assert!((big - 4.0 * a * a).abs() < 1e-6);
    }
}
