//! Norm-like functionals built from an analytic function and a radial
//! weight: Bergman and Dirichlet norms, the Hardy norm, the tail-weighted
//! Laplacian norm, the image-area norm, the maximum-modulus functional, the
//! mean-with-power functional, and the coefficient sums.
//!
//! All results store the p-th power of the norm (the identities relating
//! these quantities are additive in the p-th power); `NormResult::root`
//! exposes the norm itself.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::AnalyticFunction;
use crate::quadrature::{
    integrate_circle, integrate_disc, integrate_mass_range, integrate_mass_tail, DiscPoint,
    Quadrature, QuadratureConfig, Radius,
};
use crate::weights::RadialWeight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Parseval,
    RadialQuadrature,
    DiscQuadrature,
    Series,
}

/// Provenance of a computed value.
#[derive(Clone, Debug, Serialize)]
pub struct NormInputs {
    pub function: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

/// A norm-like value, stored as the p-th power.
#[derive(Clone, Debug, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub err_est: f64,
    pub method: Method,
    pub inputs: NormInputs,
}

impl NormResult {
    /// The norm itself, `value^(1/p)`.
    pub fn root(&self) -> f64 {
        self.value.powf(1.0 / self.inputs.p)
    }
}

fn inputs(f: &AnalyticFunction, w: Option<&RadialWeight>, p: f64) -> NormInputs {
    NormInputs {
        function: f.label().to_string(),
        weight: w.map(|w| w.label().to_string()),
        p,
        q: None,
        variant: None,
        upper: None,
    }
}

/// Coverage floor for radial integrals of bounded functions against a weight:
/// monomial-like integrands are numerically zero until `u ~ log(p deg)`, so
/// the improper integrator must look at least that deep before trusting decay.
fn min_u_for(f: &AnalyticFunction, p: f64) -> f64 {
    if f.bounded_on_disc() {
        (2.0 + p * f.truncation_degree() as f64).ln() + 40.0
    } else {
        0.0
    }
}

fn radial_weighted<M: Fn(Radius) -> f64>(
    mass: M,
    upper: f64,
    min_u: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    radial_weighted_impl(mass, upper, min_u, false, cfg)
}

/// Angular quadrature cannot see boundary spikes narrower than its panel
/// floor, so radial profiles of unbounded functions that are sampled through
/// it stop being trustworthy past `1 - r ~ 1e-12`. Such integrals are cut
/// there and the last sampled value is charged to the error estimate: decay
/// leaves a small honest error, growth makes the result flag itself.
const ANGULAR_DEPTH: f64 = 27.6;

fn radial_weighted_impl<M: Fn(Radius) -> f64>(
    mass: M,
    upper: f64,
    min_u: f64,
    depth_limited: bool,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    if !(upper > 0.0 && upper <= 1.0) {
        return Err(Error::Invalid("upper limit must lie in (0,1]".into()));
    }
    // each radial node may hide an angular quadrature, so the subdivision
    // budget is far cheaper to exhaust than in the scalar case
    let cfg = QuadratureConfig { max_subdivisions: cfg.max_subdivisions.min(4_000), ..*cfg };
    let hi = if upper == 1.0 { f64::INFINITY } else { Radius::from_r(upper).u };
    if depth_limited && hi > ANGULAR_DEPTH {
        let cap = Radius::from_u(ANGULAR_DEPTH);
        let mut q = integrate_mass_range(&mass, Radius::ZERO, cap, &cfg)?;
        q.err_est += 4.0 * mass(cap).abs();
        return Ok(q);
    }
    if upper == 1.0 {
        integrate_mass_tail(mass, Radius::ZERO, min_u, &cfg)
    } else {
        integrate_mass_range(mass, Radius::ZERO, Radius::from_r(upper), &cfg)
    }
}

/// `\int_0^{2pi} |f(r e^{i t})|^p dt` with the Parseval shortcut at `p = 2`.
fn angular_power(
    f: &AnalyticFunction,
    p: f64,
    radius: Radius,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if p == 2.0 {
        return Ok(TAU * f.mean2_sq(radius)?);
    }
    Ok(integrate_circle(|d| f.eval(d).norm().powf(p), radius, cfg)?.value)
}

/// Weighted Bergman norm `\int_D |f|^p nu dA`, as the p-th power.
pub fn bergman_norm(
    f: &AnalyticFunction,
    p: f64,
    nu: &RadialWeight,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    if !(p > 0.0) {
        return Err(Error::Invalid("bergman norm needs p > 0".into()));
    }
    let inner = QuadratureConfig {
        abs_tol: cfg.abs_tol * 0.1,
        max_subdivisions: cfg.max_subdivisions.min(8_000),
        ..*cfg
    };
    let mass = |rad: Radius| -> f64 {
        match angular_power(f, p, rad, &inner) {
            Ok(a) => a * rad.r * nu.mass(rad),
            Err(_) => f64::NAN,
        }
    };
    let depth_limited = p != 2.0 && !f.bounded_on_disc();
    let q = radial_weighted_impl(mass, 1.0, min_u_for(f, p), depth_limited, cfg)?;
    Ok(NormResult {
        value: q.value,
        err_est: q.err_est,
        method: if p == 2.0 { Method::Parseval } else { Method::DiscQuadrature },
        inputs: inputs(f, Some(nu), p),
    })
}

/// The Bergman norm truncated to `D(0, upper)`; the divergence sweeps
/// compare growth rates of such truncations.
pub fn bergman_norm_partial(
    f: &AnalyticFunction,
    p: f64,
    nu: &RadialWeight,
    upper: f64,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    if !(p > 0.0) {
        return Err(Error::Invalid("bergman norm needs p > 0".into()));
    }
    let inner = QuadratureConfig {
        abs_tol: cfg.abs_tol * 0.1,
        max_subdivisions: cfg.max_subdivisions.min(8_000),
        ..*cfg
    };
    let mass = |rad: Radius| -> f64 {
        match angular_power(f, p, rad, &inner) {
            Ok(a) => a * rad.r * nu.mass(rad),
            Err(_) => f64::NAN,
        }
    };
    let depth_limited = p != 2.0 && !f.bounded_on_disc();
    let q = radial_weighted_impl(mass, upper, min_u_for(f, p), depth_limited, cfg)?;
    Ok(NormResult {
        value: q.value,
        err_est: q.err_est,
        method: if p == 2.0 { Method::Parseval } else { Method::DiscQuadrature },
        inputs: NormInputs { upper: Some(upper), ..inputs(f, Some(nu), p) },
    })
}

/// Weighted Dirichlet norm `\int_D |f'|^p nu dA + |f(0)|^p`, as the p-th power.
pub fn dirichlet_norm(
    f: &AnalyticFunction,
    p: f64,
    nu: &RadialWeight,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    let df = f.derivative();
    let b = bergman_norm(&df, p, nu, cfg)?;
    Ok(NormResult {
        value: b.value + f.value_at_zero().norm().powf(p),
        err_est: b.err_est,
        method: b.method,
        inputs: inputs(f, Some(nu), p),
    })
}

/// Hardy norm `sup_r M_p(r,f)`, as the p-th power. The supremum is chased
/// along `r_j = 1 - 2^{-j}`; the means approach their limit geometrically
/// for every function with one, so the remainder is extrapolated from the
/// observed increment decay and folded into the value.
pub fn hardy_norm(f: &AnalyticFunction, p: f64, cfg: &QuadratureConfig) -> Result<NormResult> {
    if !(p > 0.0) {
        return Err(Error::Invalid("hardy norm needs p > 0".into()));
    }
    let mut prev = f.integral_mean(p, Radius::from_gap(0.5), cfg)?;
    let mut delta_prev = f64::INFINITY;
    // depth capped where the boundary spike of unbounded functions is still
    // resolvable by the angular quadrature
    for j in 2..40 {
        let m = f.integral_mean(p, Radius::from_gap(2f64.powi(-j)), cfg)?;
        let delta = m - prev;
        let scale = m.abs().max(1e-300);
        let rho = delta / delta_prev;
        let remainder = if delta == 0.0 {
            0.0
        } else if delta < 0.0 {
            // means are nondecreasing in r; a negative step means the
            // quadrature lost resolution, so never conclude from it
            f64::INFINITY
        } else if rho > 0.0 && rho < 0.95 {
            delta * rho / (1.0 - rho)
        } else {
            f64::INFINITY
        };
        if remainder <= 1e2 * cfg.rel_tol * scale {
            let sup = m + remainder;
            let value = sup.powf(p);
            return Ok(NormResult {
                value,
                err_est: (remainder / scale + cfg.rel_tol) * value * p,
                method: if p == 2.0 { Method::Parseval } else { Method::RadialQuadrature },
                inputs: inputs(f, None, p),
            });
        }
        prev = m;
        delta_prev = delta;
    }
    Err(Error::NonConvergent {
        value: prev.powf(p),
        err_est: delta_prev * p * prev.powf(p - 1.0),
        detail: format!("{}: circle means still increasing; no Hardy bound", f.label()),
    })
}

/// Tail-weighted Laplacian norm
/// `\int_{D(0,upper)} p^2 |f|^{p-2} |f'|^2 w_hat dA`, as the p-th power.
pub fn h_class_norm(
    f: &AnalyticFunction,
    p: f64,
    w: &RadialWeight,
    upper: f64,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    if !(p > 0.0) {
        return Err(Error::Invalid("laplacian norm needs p > 0".into()));
    }
    let df = f.derivative();
    let inner = QuadratureConfig {
        abs_tol: cfg.abs_tol * 0.1,
        max_subdivisions: cfg.max_subdivisions.min(8_000),
        ..*cfg
    };
    let angular = |rad: Radius| -> Result<f64> {
        Ok(integrate_circle(
            |d| {
                let fd = f.eval(d).norm();
                let dd = df.eval(d).norm();
                if p == 2.0 {
                    4.0 * dd * dd
                } else {
                    p * p * fd.powf(p - 2.0) * dd * dd
                }
            },
            rad,
            &inner,
        )?
        .value)
    };
    let mass = |rad: Radius| -> f64 {
        match (angular(rad), w.tail(rad)) {
            (Ok(a), Ok(t)) => a * t * rad.r * rad.gap,
            _ => f64::NAN,
        }
    };
    let q = radial_weighted_impl(mass, upper, min_u_for(f, p), !f.bounded_on_disc(), cfg)?;
    Ok(NormResult {
        value: q.value,
        err_est: q.err_est,
        method: Method::DiscQuadrature,
        inputs: NormInputs { upper: Some(upper), ..inputs(f, Some(w), p) },
    })
}

/// Image-area norm `\int_0^{upper} Area(f(D(0,r)))^{p/2} w(r) dr`, as the
/// p-th power. The inner area uses the coefficient series, extended by the
/// closed form for the built-ins.
pub fn s_class_norm(
    f: &AnalyticFunction,
    p: f64,
    w: &RadialWeight,
    upper: f64,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    if !(p > 0.0) {
        return Err(Error::Invalid("area norm needs p > 0".into()));
    }
    let mass = |rad: Radius| -> f64 {
        match f.image_area(rad) {
            Ok(a) => a.powf(0.5 * p) * w.mass(rad),
            Err(_) => f64::NAN,
        }
    };
    let q = radial_weighted(mass, upper, min_u_for(f, p), cfg)?;
    Ok(NormResult {
        value: q.value,
        err_est: q.err_est,
        method: Method::Series,
        inputs: NormInputs { upper: Some(upper), ..inputs(f, Some(w), p) },
    })
}

/// Area of the image of `D(0,r)` with multiplicity, from the coefficient
/// series (`pi sum k |f_hat(k)|^2 r^{2k}`).
pub fn area_image(f: &AnalyticFunction, r: Radius) -> Result<f64> {
    f.image_area(r)
}

/// The same area by tensorized quadrature of `|f'|^2` over the disc; the
/// independent route for cross-checking the series.
pub fn area_image_by_quadrature(
    f: &AnalyticFunction,
    r: Radius,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let df = f.derivative();
    Ok(integrate_disc(|d| df.eval(d).norm_sqr(), r.r, cfg)?.value)
}

/// Maximum-modulus functional `\int_0^{upper} M_inf(r,f)^p w(r) dr`.
pub fn j_functional(
    f: &AnalyticFunction,
    p: f64,
    w: &RadialWeight,
    upper: f64,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    if !(p > 0.0) {
        return Err(Error::Invalid("maximum-modulus functional needs p > 0".into()));
    }
    let mass = |rad: Radius| -> f64 {
        match f.max_modulus(rad) {
            Ok(m) => m.powf(p) * w.mass(rad),
            Err(_) => f64::NAN,
        }
    };
    let q = radial_weighted(mass, upper, min_u_for(f, p), cfg)?;
    Ok(NormResult {
        value: q.value,
        err_est: q.err_est,
        method: Method::RadialQuadrature,
        inputs: NormInputs { upper: Some(upper), ..inputs(f, Some(w), p) },
    })
}

/// Mean-with-power functional
/// `\int_0^1 M_q(r,f')^p (1-r)^{p(1-1/q)} w(r) dr`.
pub fn i_functional(
    f: &AnalyticFunction,
    p: f64,
    q: f64,
    w: &RadialWeight,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Invalid("mean functional needs p, q > 0".into()));
    }
    let df = f.derivative();
    let inner = QuadratureConfig {
        abs_tol: cfg.abs_tol * 0.1,
        max_subdivisions: cfg.max_subdivisions.min(8_000),
        ..*cfg
    };
    let decay = p * (1.0 - 1.0 / q);
    let mass = |rad: Radius| -> f64 {
        match df.integral_mean(q, rad, &inner) {
            Ok(m) => m.powf(p) * (-decay * rad.u).exp() * w.mass(rad),
            Err(_) => f64::NAN,
        }
    };
    let depth_limited = q != 2.0 && !f.bounded_on_disc();
    let quad = radial_weighted_impl(mass, 1.0, min_u_for(f, p), depth_limited, cfg)?;
    Ok(NormResult {
        value: quad.value,
        err_est: quad.err_est,
        method: Method::RadialQuadrature,
        inputs: NormInputs { q: Some(q), ..inputs(f, Some(w), p) },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffVariant {
    /// `sum_{k>=0} |f_hat(k)|^p (k+1)^{p-1} w_k`
    OmegaK,
    /// `sum_{k>=1} |f_hat(k)|^p k^{p-1} w_{2k}`
    Omega2K,
    /// `sum_{k>=0} |f_hat(k)|^p (k+1)^{p-2} w_{kp+1}`
    HardyLittlewood,
}

impl CoeffVariant {
    pub fn label(&self) -> &'static str {
        match self {
            CoeffVariant::OmegaK => "omega_k",
            CoeffVariant::Omega2K => "omega_2k",
            CoeffVariant::HardyLittlewood => "hl",
        }
    }
}

/// Weighted coefficient sum over `0 <= k <= N`; the tail truncation estimate
/// is reported through `err_est` when the last summand is still above the
/// absolute tolerance.
pub fn coeff_functional(
    f: &AnalyticFunction,
    p: f64,
    w: &RadialWeight,
    variant: CoeffVariant,
    cfg: &QuadratureConfig,
) -> Result<NormResult> {
    if !(p > 0.0) {
        return Err(Error::Invalid("coefficient functional needs p > 0".into()));
    }
    let mut sum = 0.0;
    let mut last = 0.0;
    for (k, c) in f.coeffs().iter().enumerate() {
        let a = c.norm();
        if a == 0.0 {
            continue;
        }
        let term = match variant {
            CoeffVariant::OmegaK => {
                a.powf(p) * (k as f64 + 1.0).powf(p - 1.0) * w.moment(k as f64)?
            }
            CoeffVariant::Omega2K => {
                if k == 0 {
                    continue;
                }
                a.powf(p) * (k as f64).powf(p - 1.0) * w.moment(2.0 * k as f64)?
            }
            CoeffVariant::HardyLittlewood => {
                a.powf(p) * (k as f64 + 1.0).powf(p - 2.0) * w.moment(k as f64 * p + 1.0)?
            }
        };
        sum += term;
        last = term;
    }
    let err_est = if f.bounded_on_disc() || last <= cfg.abs_tol {
        // finite series carry no truncation; converged tails are spent
        0.0
    } else {
        // crude tail guess: another block of terms the size of the last one;
        // divergent sums flag themselves this way
        last * f.coeffs().len() as f64
    };
    Ok(NormResult {
        value: sum,
        err_est,
        method: Method::Series,
        inputs: NormInputs {
            variant: Some(variant.label().to_string()),
            ..inputs(f, Some(w), p)
        },
    })
}

/// `M_p(r,f)^p` written through the disc Laplacian:
/// `(1/2pi) \int_{D(0,r)} p^2 |f|^{p-2} |f'|^2 log(r/|z|) dA + |f(0)|^p`.
/// The independent route for the circle means, used by the identity checks.
pub fn mean_by_laplacian(
    f: &AnalyticFunction,
    p: f64,
    r: Radius,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let df = f.derivative();
    let q = integrate_disc(
        |d: &DiscPoint| {
            let fd = f.eval(d).norm();
            let dd = df.eval(d).norm();
            let lap = if p == 2.0 { 4.0 * dd * dd } else { p * p * fd.powf(p - 2.0) * dd * dd };
            lap * (r.r / d.radius.r).ln()
        },
        r.r,
        cfg,
    )?;
    Ok(q.value / TAU + f.value_at_zero().norm().powf(p))
}

/// `\int_D p^2 |f|^{p-2}|f'|^2 nu_star dA + nu(D) |f(0)|^p`, the disc-kernel
/// route to the Bergman norm.
pub fn bergman_by_laplacian(
    f: &AnalyticFunction,
    p: f64,
    nu: &RadialWeight,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let df = f.derivative();
    let inner = QuadratureConfig {
        abs_tol: cfg.abs_tol * 0.1,
        max_subdivisions: cfg.max_subdivisions.min(8_000),
        ..*cfg
    };
    let angular = |rad: Radius| -> Result<f64> {
        Ok(integrate_circle(
            |d| {
                let fd = f.eval(d).norm();
                let dd = df.eval(d).norm();
                if p == 2.0 {
                    4.0 * dd * dd
                } else {
                    p * p * fd.powf(p - 2.0) * dd * dd
                }
            },
            rad,
            &inner,
        )?
        .value)
    };
    let mass = |rad: Radius| -> f64 {
        if rad.r == 0.0 {
            return 0.0;
        }
        match (angular(rad), nu.star(rad)) {
            (Ok(a), Ok(s)) => a * s * rad.r * rad.gap,
            _ => f64::NAN,
        }
    };
    let q = integrate_mass_tail(mass, Radius::ZERO, min_u_for(f, p), cfg)?;
    let nu_disc = TAU * nu.moment(1.0)?;
    Ok(q.value + nu_disc * f.value_at_zero().norm().powf(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_function, FunctionSpec};
    use crate::weights::{make_weight, WeightSpec};
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn monomial(n: u32) -> AnalyticFunction {
        make_function(&FunctionSpec::Monomial { n }, None).unwrap()
    }

    fn log_map() -> AnalyticFunction {
        make_function(&FunctionSpec::LogMap, None).unwrap()
    }

    fn koebe() -> AnalyticFunction {
        make_function(&FunctionSpec::Koebe, None).unwrap()
    }

    fn constant() -> RadialWeight {
        make_weight(&WeightSpec::Constant { level: 1.0 }).unwrap()
    }

    fn power(alpha: f64) -> RadialWeight {
        make_weight(&WeightSpec::Power { alpha }).unwrap()
    }

    #[test]
    fn bergman_monomials() {
        // |m_1|^2 against the unit weight: 2 pi \int r^3 dr = pi/2
        let b = bergman_norm(&monomial(1), 2.0, &constant(), &cfg()).unwrap();
        assert!((b.value - PI / 2.0).abs() < 1e-9);
        // general reduction 2 pi nu_{np+1}
        let nu = power(1.0);
        let b = bergman_norm(&monomial(3), 1.5, &nu, &cfg()).unwrap();
        let expect = TAU * nu.moment(3.0 * 1.5 + 1.0).unwrap();
        assert!((b.value - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn bergman_log_map_series_oracle() {
        // 2 pi sum_k (1/k^2) / (2k+2) = pi (pi^2/6 - 1)
        let b = bergman_norm(&log_map(), 2.0, &constant(), &cfg()).unwrap();
        let expect = PI * (PI * PI / 6.0 - 1.0);
        assert!((b.value - expect).abs() < 1e-8 * expect, "{} vs {expect}", b.value);
    }

    #[test]
    fn dirichlet_values() {
        // f = z, p = 2, unit weight: f' = 1, so the norm is pi
        let d = dirichlet_norm(&monomial(1), 2.0, &constant(), &cfg()).unwrap();
        assert!((d.value - PI).abs() < 1e-9);
        // constants only contribute |f(0)|^p
        let one = make_function(&FunctionSpec::Coeffs { coeffs: vec![1.0] }, None).unwrap();
        let d = dirichlet_norm(&one, 1.7, &power(2.0), &cfg()).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        // koebe in a heavy power weight: 2 pi sum k^4 B(2k, 6) by Parseval,
        // with B exact and the quadratic tail added analytically
        let nu = power(5.0);
        let d = dirichlet_norm(&koebe(), 2.0, &nu, &cfg()).unwrap();
        let mut series = 0.0;
        let kmax = 1_000_000u64;
        for k in 1..=kmax {
            let t = 2.0 * k as f64;
            let b = 120.0 / (t * (t + 1.0) * (t + 2.0) * (t + 3.0) * (t + 4.0) * (t + 5.0));
            series += TAU * (k as f64).powi(4) * b;
        }
        series += TAU * 120.0 / 64.0 / kmax as f64;
        assert!((d.value - series).abs() < 1e-6 * series, "{} vs {series}", d.value);
    }

    #[test]
    fn dirichlet_divergence_flagged() {
        // koebe is not in the p=2 space for light power weights
        assert!(dirichlet_norm(&koebe(), 2.0, &power(2.0), &cfg()).is_err());
    }

    #[test]
    fn hardy_values() {
        assert!((hardy_norm(&monomial(5), 1.5, &cfg()).unwrap().value - 1.0).abs() < 1e-9);
        let f1 = make_function(&FunctionSpec::Coeffs { coeffs: vec![1.0, 1.0] }, None).unwrap();
        let h = hardy_norm(&f1, 2.0, &cfg()).unwrap();
        assert!((h.root() - 2f64.sqrt()).abs() < 1e-9);
        // log_map: sum 1/k^2 = pi^2/6
        let h = hardy_norm(&log_map(), 2.0, &cfg()).unwrap();
        assert!((h.root() - PI / 6f64.sqrt()).abs() < 1e-6);
        // koebe has no Hardy bound at p = 1
        assert!(hardy_norm(&koebe(), 1.0, &cfg()).is_err());
    }

    #[test]
    fn h_class_monomial_reduction() {
        // 2 pi n p w_{np}
        for (n, p) in [(1u32, 2.0), (2, 1.0), (4, 0.5)] {
            let w = power(1.0);
            let h = h_class_norm(&monomial(n), p, &w, 1.0, &cfg()).unwrap();
            let expect = TAU * n as f64 * p * w.moment(n as f64 * p).unwrap();
            assert!(
                (h.value - expect).abs() < 1e-7 * expect,
                "n={n} p={p}: {} vs {expect}",
                h.value
            );
        }
        // m_1, p=2, unit weight: 4 pi/3
        let h = h_class_norm(&monomial(1), 2.0, &constant(), 1.0, &cfg()).unwrap();
        assert!((h.value - 4.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn h_class_vs_disc_quadrature_oracle() {
        // 1 + z at p = 3 against a direct tensor quadrature
        let f1 = make_function(&FunctionSpec::Coeffs { coeffs: vec![1.0, 1.0] }, None).unwrap();
        let w = constant();
        let h = h_class_norm(&f1, 3.0, &w, 1.0, &cfg()).unwrap();
        let oracle = integrate_disc(
            |d| {
                let fd = f1.eval(d).norm();
                9.0 * fd * (1.0 - d.radius.r)
            },
            1.0,
            &cfg(),
        )
        .unwrap();
        assert!((h.value - oracle.value).abs() < 1e-4 * oracle.value);
    }

    #[test]
    fn s_class_values() {
        // (pi n)^{p/2} w_{np}
        let w = power(2.0);
        for (n, p) in [(1u32, 2.0), (2, 1.0), (8, 0.5)] {
            let s = s_class_norm(&monomial(n), p, &w, 1.0, &cfg()).unwrap();
            let expect = (PI * n as f64).powf(0.5 * p) * w.moment(n as f64 * p).unwrap();
            assert!(
                (s.value - expect).abs() < 1e-8 * expect,
                "n={n} p={p}: {} vs {expect}",
                s.value
            );
        }
        // m_1, p=2, unit weight: pi/3
        let s = s_class_norm(&monomial(1), 2.0, &constant(), 1.0, &cfg()).unwrap();
        assert!((s.value - PI / 3.0).abs() < 1e-9);
        // log_map, p=2: \int pi (-log(1-r^2)) dr = pi (2 - 2 log 2)
        let s = s_class_norm(&log_map(), 2.0, &constant(), 1.0, &cfg()).unwrap();
        let expect = PI * (2.0 - 2.0 * 2f64.ln());
        assert!((s.value - expect).abs() < 1e-8 * expect);
    }

    #[test]
    fn area_cross_check() {
        for f in [monomial(2), koebe()] {
            let r = Radius::from_r(0.45);
            let series = area_image(&f, r).unwrap();
            let quad = area_image_by_quadrature(&f, r, &cfg()).unwrap();
            assert!(
                (series - quad).abs() < 1e-8 * series,
                "{}: {series} vs {quad}",
                f.label()
            );
        }
    }

    #[test]
    fn j_functional_values() {
        // J(m_n) = w_{np}
        let w = power(1.0);
        let j = j_functional(&monomial(2), 1.0, &w, 1.0, &cfg()).unwrap();
        let expect = w.moment(2.0).unwrap();
        assert!((j.value - expect).abs() < 1e-10);
        // m_2, p=1, unit weight: 1/3
        let j = j_functional(&monomial(2), 1.0, &constant(), 1.0, &cfg()).unwrap();
        assert!((j.value - 1.0 / 3.0).abs() < 1e-10);
        // partial functional for log_map against v_2: closed antiderivative
        // of (L-1)/((1-r)L^2) is log L + 1/L
        let v2 = make_weight(&WeightSpec::LogPower { alpha: 2.0 }).unwrap();
        let upper = 1.0 - 1e-6;
        let j = j_functional(&log_map(), 1.0, &v2, upper, &cfg()).unwrap();
        let l = Radius::from_r(upper).log_scale();
        let expect = l.ln() + 1.0 / l - 1.0;
        assert!((j.value - expect).abs() < 1e-6 * expect, "{} vs {expect}", j.value);
    }

    #[test]
    fn i_functional_values() {
        // m_1: f' = 1, p=q=2: \int (1-r) dr = 1/2
        let i = i_functional(&monomial(1), 2.0, 2.0, &constant(), &cfg()).unwrap();
        assert!((i.value - 0.5).abs() < 1e-9);
        // m_2: f' = 2z: 4 \int r^2 (1-r) dr = 1/3
        let i = i_functional(&monomial(2), 2.0, 2.0, &constant(), &cfg()).unwrap();
        assert!((i.value - 1.0 / 3.0).abs() < 1e-9);
        // koebe against a heavy power weight (the light ones diverge):
        // Parseval path against plain angular quadrature
        let w = power(4.5);
        let a = i_functional(&koebe(), 2.0, 2.0, &w, &cfg()).unwrap();
        let df = koebe().derivative();
        let mass = |rad: Radius| {
            let m2 = integrate_circle(|d| df.eval(d).norm_sqr(), rad, &cfg())
                .map(|q| q.value / TAU)
                .unwrap_or(f64::NAN);
            m2 * (-rad.u).exp() * w.mass(rad)
        };
        let b = integrate_mass_tail(mass, Radius::ZERO, 0.0, &cfg()).unwrap();
        assert!((a.value - b.value).abs() < 1e-5 * a.value, "{} vs {}", a.value, b.value);
        // the mean of koebe' grows like (1-r)^{-5/2}, so light power weights
        // leave nothing integrable
        assert!(i_functional(&koebe(), 2.0, 2.0, &power(1.0), &cfg()).is_err());
    }

    #[test]
    fn coefficient_sums() {
        // log_map, p=1, unit weight: sum (1/k) (1/(k+1)) telescopes to 1
        let c = coeff_functional(&log_map(), 1.0, &constant(), CoeffVariant::OmegaK, &cfg())
            .unwrap();
        assert!((c.value - 1.0).abs() < 3e-4, "value {}", c.value);
        assert!(c.err_est > 0.0, "truncated harmonic-like tail is flagged");
        // monomial: single term (n+1)^{p-1} w_n
        let w = power(1.0);
        let c = coeff_functional(&monomial(3), 2.0, &w, CoeffVariant::OmegaK, &cfg()).unwrap();
        let expect = 4.0 * w.moment(3.0).unwrap();
        assert!((c.value - expect).abs() < 1e-12);
        // omega_2k variant starts at k=1 with weight moments at 2k
        let c = coeff_functional(&monomial(3), 2.0, &w, CoeffVariant::Omega2K, &cfg()).unwrap();
        let expect = 3.0 * w.moment(6.0).unwrap();
        assert!((c.value - expect).abs() < 1e-12);
    }

    #[test]
    fn laplacian_mean_identity_spot() {
        // M_p(r,f)^p = (1/2pi) \int_{D(0,r)} Lap |f|^p log(r/|z|) dA + |f(0)|^p
        let f1 = make_function(&FunctionSpec::Coeffs { coeffs: vec![1.0, 1.0] }, None).unwrap();
        let r = Radius::from_r(0.5);
        let lhs = f1.integral_mean(2.0, r, &cfg()).unwrap().powi(2);
        let rhs = mean_by_laplacian(&f1, 2.0, r, &cfg()).unwrap();
        assert!((lhs - rhs).abs() < 1e-6 * lhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn bergman_laplacian_identity_spot() {
        let f1 = monomial(1);
        let lhs = bergman_norm(&f1, 2.0, &constant(), &cfg()).unwrap().value;
        let rhs = bergman_by_laplacian(&f1, 2.0, &constant(), &cfg()).unwrap();
        assert!((lhs - rhs).abs() < 1e-5 * lhs, "{lhs} vs {rhs}");
    }
}
