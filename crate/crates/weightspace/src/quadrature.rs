//! Adaptive quadrature on `[0,1)` and on centered discs.
//!
//! The central difficulty is that every interesting integrand here blows up
//! (integrably) at the endpoint `r = 1`, often with log-power behavior that
//! defeats naive panel refinement. The cure is the substitution
//! `u = -log(1-r)`, which maps `[0,1)` to `[0,inf)` and turns log-power
//! singularities into plain power decay.
//!
//! Points of `[0,1)` travel as a [`Radius`], which stores the substituted
//! coordinate `u` alongside `r` and `1-r`. Radial integrands are supplied in
//! *mass form* `m(r) = g(r) (1-r)`: the factor `1-r` is exactly the Jacobian
//! of the substitution, and writing the product analytically keeps integrands
//! like `1/((1-r) log^2(e/(1-r)))` evaluable arbitrarily deep, long after
//! `1-r` itself has underflowed.

use crate::error::{Error, Result};

/// A point of `[0,1)` carrying `r`, `gap = 1 - r`, and `u = -log(1-r)`.
///
/// `u` is authoritative near the endpoint: for deep points `r` rounds to
/// `1.0` and `gap` eventually underflows to `0.0`, while `u` keeps exact
/// track of the distance to the boundary on a logarithmic scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radius {
    pub r: f64,
    pub gap: f64,
    pub u: f64,
}

impl Radius {
    pub const ZERO: Radius = Radius { r: 0.0, gap: 1.0, u: 0.0 };

    pub fn from_r(r: f64) -> Radius {
        assert!((0.0..1.0).contains(&r), "radius must lie in [0,1)");
        let gap = 1.0 - r;
        Radius { r, gap, u: -gap.ln() }
    }

    pub fn from_gap(gap: f64) -> Radius {
        assert!(gap > 0.0 && gap <= 1.0, "gap must lie in (0,1]");
        Radius { r: 1.0 - gap, gap, u: -gap.ln() }
    }

    /// Point at `u = -log(1-r)`; `gap` may underflow for very deep `u`.
    pub fn from_u(u: f64) -> Radius {
        debug_assert!(u >= 0.0);
        Radius { r: -(-u).exp_m1(), gap: (-u).exp(), u }
    }

    /// `r^x` computed through the gap, stable for huge exponents and deep
    /// points (`x * gap` underflows to 0 before precision is lost).
    pub fn pow(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 1.0;
        }
        if self.r <= 0.0 {
            return 0.0;
        }
        (x * (-self.gap).ln_1p()).exp()
    }

    /// `log(e/(1-r)) = 1 + u`, the logarithmic scale of the point.
    pub fn log_scale(&self) -> f64 {
        1.0 + self.u
    }

    /// `log r`, without cancellation.
    pub fn ln_r(&self) -> f64 {
        (-self.gap).ln_1p()
    }

    /// The point with gap shrunk by `k`, i.e. `1 - (1-r)/k`.
    pub fn shrink_gap(&self, k: f64) -> Radius {
        Radius { r: 1.0 - self.gap / k, gap: self.gap / k, u: self.u + k.ln() }
    }
}

/// Tolerances and budget for one integration call.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Apply the `u = -log(1-r)` substitution so that nodes cluster at `r=1`.
    pub endpoint_grading: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 1 << 16,
            endpoint_grading: true,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tol(rel: f64) -> Self {
        QuadratureConfig {
            rel_tol: rel,
            abs_tol: rel * 1e-3,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) || self.max_subdivisions == 0 {
            return Err(Error::Invalid(
                "quadrature config requires rel_tol > 0, abs_tol >= 0, max_subdivisions >= 1"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Integral value with an error estimate.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub err_est: f64,
}

// 15-point Kronrod extension of 7-point Gauss, positive half-axis.
const XK: [f64; 8] = [
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];
const WK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];
// Gauss weights sit on the even Kronrod nodes.
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain { at: x })
        }
    };
    let f0 = eval(c)?;
    let mut sum_k = WK[0] * f0;
    let mut sum_g = WG[0] * f0;
    for i in 1..8 {
        let dx = h * XK[i];
        let s = eval(c + dx)? + eval(c - dx)?;
        sum_k += WK[i] * s;
        if i % 2 == 0 {
            sum_g += WG[i / 2] * s;
        }
    }
    Ok((sum_k * h, ((sum_k - sum_g) * h).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

/// Worst-panel-first refinement on a finite interval.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    budget: &mut usize,
) -> Result<(f64, f64)> {
    adaptive_multi(f, &[a, b], rel_tol, abs_tol, budget)
}

/// As [`adaptive`], seeded with panels between consecutive breakpoints so
/// that features narrower than the plain initial node spacing are not
/// invisible to the refinement.
fn adaptive_multi<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    budget: &mut usize,
) -> Result<(f64, f64)> {
    let a = breaks[0];
    let b = breaks[breaks.len() - 1];
    if a >= b {
        return Ok((0.0, 0.0));
    }
    let mut panels: Vec<Panel> = Vec::with_capacity(breaks.len() - 1);
    let mut value = 0.0;
    let mut err = 0.0;
    for win in breaks.windows(2) {
        if win[1] <= win[0] {
            continue;
        }
        let (v, e) = gk15(f, win[0], win[1])?;
        panels.push(Panel { a: win[0], b: win[1], value: v, err: e });
        value += v;
        err += e;
    }
    let mut frozen_err = 0.0;
    let width_floor = 1e-14 * (1.0 + a.abs() + b.abs());
    // noise-floor guard: when the integrand itself carries rounding noise,
    // the error estimate stalls above the requested tolerance and further
    // splitting is pure waste; accept with the honest estimate instead
    let mut best_err = f64::INFINITY;
    let mut stalled = 0usize;
    loop {
        let tol = abs_tol.max(rel_tol * value.abs());
        let current = err + frozen_err;
        if current <= tol || panels.is_empty() {
            return Ok((value, current));
        }
        if current < 0.999 * best_err {
            best_err = current;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 50 {
                return Ok((value, current));
            }
        }
        // worst panel by error estimate
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            if p.err > panels[worst].err {
                worst = i;
            }
        }
        let p = panels.swap_remove(worst);
        value -= p.value;
        err -= p.err;
        if p.b - p.a <= width_floor {
            // roundoff floor; keep its estimate as irreducible
            value += p.value;
            frozen_err += p.err;
            continue;
        }
        if *budget == 0 {
            return Err(Error::NonConvergent {
                value: value + p.value,
                err_est: err + frozen_err + p.err,
                detail: "subdivision budget exhausted".into(),
            });
        }
        *budget -= 1;
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(f, p.a, m)?;
        let (v2, e2) = gk15(f, m, p.b)?;
        value += v1 + v2;
        err += e1 + e2;
        panels.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        panels.push(Panel { a: m, b: p.b, value: v2, err: e2 });
    }
}

/// Improper integral `\int_{from}^\infty f` by segment doubling.
///
/// Segments `[a, a+8], [a+8, a+24], ...` double in width; the loop stops once
/// the geometric remainder estimate drawn from the observed decay ratio drops
/// below tolerance. Segments that stop decaying are reported as divergence.
/// `min_to` forces coverage of `[from, min_to]` before the stopping rule may
/// fire (for integrands known to peak deep).
pub fn integrate_improper<F: Fn(f64) -> f64>(
    f: F,
    from: f64,
    min_to: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    cfg.validate()?;
    let mut budget = cfg.max_subdivisions;
    let run = |abs_tol: f64, budget: &mut usize| -> Result<Quadrature> {
        let mut total = 0.0;
        let mut err = 0.0;
        let mut lo = from;
        let mut width = 8.0_f64;
        let mut prev_seg = f64::INFINITY;
        for k in 0..1000 {
            let hi = lo + width;
            if !hi.is_finite() {
                return Err(Error::NonConvergent {
                    value: total,
                    err_est: err,
                    detail: "axis exhausted without convergence".into(),
                });
            }
            let (v, e) = adaptive(&f, lo, hi, cfg.rel_tol * 0.1, abs_tol * 0.1, budget)?;
            total += v;
            err += e;
            if !total.is_finite() || total.abs() > 1e40 {
                return Err(Error::NonConvergent {
                    value: total,
                    err_est: err,
                    detail: "integral grows without bound".into(),
                });
            }
            let seg = v.abs();
            let ratio = seg / prev_seg;
            let tol = abs_tol.max(cfg.rel_tol * total.abs());
            if hi >= min_to && k >= 1 {
                // geometric remainder bound from the observed decay
                let remainder = if seg == 0.0 {
                    0.0
                } else if ratio < 1.0 {
                    seg * ratio / (1.0 - ratio)
                } else {
                    f64::INFINITY
                };
                if remainder <= tol {
                    return Ok(Quadrature { value: total, err_est: err + remainder });
                }
                if k >= 40 && ratio >= 0.97 && seg > tol {
                    return Err(Error::NonConvergent {
                        value: total,
                        err_est: err + seg,
                        detail: "segments stopped decaying".into(),
                    });
                }
            }
            prev_seg = seg;
            lo = hi;
            width *= 2.0;
        }
        Err(Error::NonConvergent {
            value: total,
            err_est: err,
            detail: "doubling budget exhausted".into(),
        })
    };
    let first = run(cfg.abs_tol, &mut budget)?;
    // tiny integrals: the absolute tolerance can swamp the value entirely;
    // rerun once with the scale now known so accuracy becomes relative
    if first.value != 0.0 && cfg.abs_tol > cfg.rel_tol * first.value.abs() {
        let mut budget2 = cfg.max_subdivisions;
        if let Ok(second) = run(cfg.rel_tol * first.value.abs() * 0.1, &mut budget2) {
            return Ok(second);
        }
    }
    Ok(first)
}

/// Plain adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    cfg.validate()?;
    let mut budget = cfg.max_subdivisions;
    let (value, err_est) = adaptive(&f, a, b, cfg.rel_tol, cfg.abs_tol, &mut budget)?;
    if value != 0.0 && cfg.abs_tol > cfg.rel_tol * value.abs() {
        let mut budget2 = cfg.max_subdivisions;
        if let Ok(pair) =
            adaptive(&f, a, b, cfg.rel_tol, cfg.rel_tol * value.abs() * 0.1, &mut budget2)
        {
            return Ok(Quadrature { value: pair.0, err_est: pair.1 });
        }
    }
    Ok(Quadrature { value, err_est })
}

/// `\int_{from}^1 g(r) dr` where the integrand is supplied in mass form
/// `m(r) = g(r) (1-r)`, stable at any depth. `min_u` forces coverage up to a
/// given `u` before the stopping rule may fire.
pub fn integrate_mass_tail<F: Fn(Radius) -> f64>(
    m: F,
    from: Radius,
    min_u: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    integrate_improper(|u| m(Radius::from_u(u)), from.u, min_u, cfg)
}

/// `\int_{lo}^{hi} g(r) dr` with `hi < 1`, by mass form as above.
pub fn integrate_mass_range<F: Fn(Radius) -> f64>(
    m: F,
    lo: Radius,
    hi: Radius,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    cfg.validate()?;
    let mut budget = cfg.max_subdivisions;
    let f = |u: f64| m(Radius::from_u(u));
    let (value, err_est) = adaptive(&f, lo.u, hi.u, cfg.rel_tol, cfg.abs_tol, &mut budget)?;
    if value != 0.0 && cfg.abs_tol > cfg.rel_tol * value.abs() {
        let mut budget2 = cfg.max_subdivisions;
        if let Ok(pair) = adaptive(&f, lo.u, hi.u, cfg.rel_tol, cfg.rel_tol * value.abs() * 0.1, &mut budget2)
        {
            return Ok(Quadrature { value: pair.0, err_est: pair.1 });
        }
    }
    Ok(Quadrature { value, err_est })
}

/// `\int_0^1 g(r) dr` for a pointwise integrand `g`, integrable on `[0,1)`
/// with its only singularity, if any, at `r = 1`.
///
/// This is the convenience entry point; it forms the mass product
/// `g(r) (1-r)` numerically, so pointwise evaluation must survive wherever
/// the integrand still carries mass. Integrands with log-power endpoint
/// behavior should be supplied in mass form to [`integrate_mass_tail`]
/// directly.
pub fn integrate_radial<F: Fn(Radius) -> f64>(g: F, cfg: &QuadratureConfig) -> Result<Quadrature> {
    if !cfg.endpoint_grading {
        let mut budget = cfg.max_subdivisions;
        let hi: f64 = 1.0 - 1e-12;
        let (value, err_est) = adaptive(
            &|r: f64| g(Radius::from_r(r)),
            0.0,
            hi,
            cfg.rel_tol,
            cfg.abs_tol,
            &mut budget,
        )?;
        return Ok(Quadrature { value, err_est });
    }
    integrate_mass_tail(|p| g(p) * p.gap, Radius::ZERO, 0.0, cfg)
}

/// `\int_{lo}^{hi} g(r) dr` for a pointwise integrand, `hi < 1`.
pub fn integrate_radial_range<F: Fn(Radius) -> f64>(
    g: F,
    lo: Radius,
    hi: Radius,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    if !cfg.endpoint_grading {
        let mut budget = cfg.max_subdivisions;
        let (value, err_est) = adaptive(
            &|r: f64| g(Radius::from_r(r)),
            lo.r,
            hi.r,
            cfg.rel_tol,
            cfg.abs_tol,
            &mut budget,
        )?;
        return Ok(Quadrature { value, err_est });
    }
    integrate_mass_range(|p| g(p) * p.gap, lo, hi, cfg)
}

/// A point of the disc in polar form.
#[derive(Clone, Copy, Debug)]
pub struct DiscPoint {
    pub radius: Radius,
    pub theta: f64,
}

impl DiscPoint {
    pub fn new(radius: Radius, theta: f64) -> Self {
        DiscPoint { radius, theta }
    }

    pub fn z(&self) -> num_complex::Complex<f64> {
        num_complex::Complex::from_polar(self.radius.r, self.theta)
    }

    /// `1 - z` without cancellation when `r` is close to 1.
    pub fn one_minus_z(&self) -> num_complex::Complex<f64> {
        let r = self.radius.r;
        let half = 0.5 * self.theta;
        let re = self.radius.gap + 2.0 * r * half.sin() * half.sin();
        let im = -r * self.theta.sin();
        num_complex::Complex::new(re, im)
    }
}

/// `\int_0^{2pi} h(r e^{i theta}) d theta` at a fixed radius.
///
/// The initial panels grade dyadically toward `theta = 0`: integrands built
/// from boundary-singular functions spike there with width `~ 1-r`, far
/// below what nodes on `[0, 2pi]` would ever sample.
pub fn integrate_circle<F: Fn(&DiscPoint) -> f64>(
    h: F,
    radius: Radius,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    let mut budget = cfg.max_subdivisions;
    let mut breaks = vec![0.0];
    // spikes narrower than the refinement floor cannot be resolved anyway,
    // so the seed width is clamped below as well as above
    let mut w = radius.gap.max(1e-13).min(std::f64::consts::FRAC_PI_4);
    while *breaks.last().unwrap() + w < std::f64::consts::PI {
        breaks.push(*breaks.last().unwrap() + w);
        w *= 2.0;
    }
    breaks.push(std::f64::consts::PI);
    let mut upper: Vec<f64> =
        breaks.iter().rev().map(|t| std::f64::consts::TAU - t).collect();
    breaks.append(&mut upper);
    breaks.dedup_by(|a, b| *a <= *b);
    let (value, err_est) = adaptive_multi(
        &|theta: f64| h(&DiscPoint::new(radius, theta)),
        &breaks,
        cfg.rel_tol,
        cfg.abs_tol,
        &mut budget,
    )?;
    Ok(Quadrature { value, err_est })
}

/// `\int_{D(0,radius)} h dA` with `dA = d theta r dr`, by tensorized
/// angular x radial quadrature. `radius = 1` integrates up to the boundary.
pub fn integrate_disc<F: Fn(&DiscPoint) -> f64>(
    h: F,
    radius: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::Invalid("disc radius must lie in (0,1]".into()));
    }
    let inner = QuadratureConfig {
        rel_tol: cfg.rel_tol * 0.1,
        abs_tol: cfg.abs_tol * 0.1,
        ..*cfg
    };
    let ring_mass = |p: Radius| -> f64 {
        match integrate_circle(&h, p, &inner) {
            Ok(q) => q.value * p.r * p.gap,
            Err(_) => f64::NAN,
        }
    };
    if radius == 1.0 {
        integrate_mass_tail(ring_mass, Radius::ZERO, 0.0, cfg)
    } else {
        integrate_mass_range(ring_mass, Radius::ZERO, Radius::from_r(radius), cfg)
    }
}

/// Bisection for the unique point with `f(point) = target`, where `f` is
/// strictly decreasing in `r`. The search runs over `u = -log(1-r)`, so deep
/// roots keep full precision.
pub fn bisect_decreasing<F: Fn(Radius) -> f64>(
    f: F,
    target: f64,
    u_hi_start: f64,
) -> Result<Radius> {
    let mut lo = 0.0_f64;
    let f_lo = f(Radius::from_u(lo));
    if !(f_lo >= target) {
        return Err(Error::Bisection(format!(
            "target {target:e} exceeds value {f_lo:e} at the left endpoint"
        )));
    }
    let mut hi = u_hi_start.max(1.0);
    let mut f_hi = f(Radius::from_u(hi));
    let mut expand = 0;
    while f_hi > target {
        hi *= 2.0;
        expand += 1;
        if expand > 60 {
            return Err(Error::Bisection(format!(
                "no bracket found for target {target:e}"
            )));
        }
        f_hi = f(Radius::from_u(hi));
    }
    // bisect until the interval exhausts f64 resolution
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(Radius::from_u(mid));
        if !fm.is_finite() {
            return Err(Error::Bisection(format!("non-finite value at u={mid}")));
        }
        if fm >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Radius::from_u(0.5 * (lo + hi)))
}
