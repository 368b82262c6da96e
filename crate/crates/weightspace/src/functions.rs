//! Analytic test functions on the unit disc: truncated Maclaurin series with
//! closed-form evaluation for the built-in fixtures, circle means, maximum
//! modulus, and the coefficient majorant.
//!
//! Built-ins: monomials `z^n`, the slit-plane logarithm `-log(1-z)`, and the
//! Koebe function `z/(1-z)^2`. The latter two carry closed forms for their
//! values, second-power means, and image areas, so radii far beyond the
//! truncation-valid range stay usable.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_circle, DiscPoint, QuadratureConfig, Radius};

/// Description of an analytic function, serializable and cheap to clone.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSpec {
    /// `z^n`
    Monomial { n: u32 },
    /// `-log(1-z)`
    LogMap,
    /// `z/(1-z)^2`
    Koebe,
    /// explicit real coefficients `f(z) = sum c_k z^k`
    Coeffs { coeffs: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
struct FunctionSpecJson {
    family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation_degree: Option<usize>,
}

impl FunctionSpec {
    pub fn parse(text: &str) -> Result<FunctionSpec> {
        let text = text.trim();
        if text.starts_with('{') {
            let j: FunctionSpecJson = serde_json::from_str(text)
                .map_err(|e| Error::InvalidFunction(format!("bad function JSON: {e}")))?;
            return FunctionSpec::from_json(&j);
        }
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        Ok(match name {
            "monomial" | "m" => {
                let n = arg
                    .ok_or_else(|| Error::InvalidFunction("monomial needs a degree".into()))?
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidFunction(format!("bad degree in `{text}`")))?;
                FunctionSpec::Monomial { n }
            }
            "log_map" | "log" => FunctionSpec::LogMap,
            "koebe" => FunctionSpec::Koebe,
            "coeffs" => {
                let list = arg
                    .ok_or_else(|| Error::InvalidFunction("coeffs needs a list".into()))?
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::InvalidFunction(format!("bad coefficient in `{text}`")))?;
                FunctionSpec::Coeffs { coeffs: list }
            }
            other => {
                return Err(Error::InvalidFunction(format!(
                    "unknown function `{other}` (expected monomial:n, log_map, koebe, coeffs:...)"
                )))
            }
        })
    }

    fn from_json(j: &FunctionSpecJson) -> Result<FunctionSpec> {
        Ok(match j.family.as_str() {
            "monomial" => FunctionSpec::Monomial {
                n: *j.params.first().ok_or_else(|| {
                    Error::InvalidFunction("monomial needs a degree".into())
                })? as u32,
            },
            "log_map" => FunctionSpec::LogMap,
            "koebe" => FunctionSpec::Koebe,
            "coeffs" => FunctionSpec::Coeffs { coeffs: j.params.clone() },
            other => {
                return Err(Error::InvalidFunction(format!("unknown function family `{other}`")))
            }
        })
    }

    fn to_json(&self, truncation_degree: usize) -> FunctionSpecJson {
        let (family, params) = match self {
            FunctionSpec::Monomial { n } => ("monomial", vec![*n as f64]),
            FunctionSpec::LogMap => ("log_map", vec![]),
            FunctionSpec::Koebe => ("koebe", vec![]),
            FunctionSpec::Coeffs { coeffs } => ("coeffs", coeffs.clone()),
        };
        FunctionSpecJson {
            family: family.into(),
            params,
            truncation_degree: Some(truncation_degree),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FunctionSpec::Monomial { n } => format!("m_{n}"),
            FunctionSpec::LogMap => "log_map".into(),
            FunctionSpec::Koebe => "koebe".into(),
            FunctionSpec::Coeffs { coeffs } => format!("coeffs[{}]", coeffs.len()),
        }
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut j = self.to_json(0);
        j.truncation_degree = None;
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FunctionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FunctionSpecJson::deserialize(d)?;
        FunctionSpec::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Structural declarations attached to a function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FunctionFlags {
    pub nonneg_coeffs: bool,
    pub univalent: bool,
    pub class_s: bool,
    pub close_to_convex: bool,
}

/// Closed-form evaluation kind, tracked through one derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Closed {
    None,
    LogMap,
    LogMapPrime,
    Koebe,
    KoebePrime,
    /// `scale * z^n`
    Monomial { n: u32, scale: f64 },
}

/// A truncated Maclaurin series with optional closed-form evaluation.
#[derive(Clone)]
pub struct AnalyticFunction {
    spec: FunctionSpec,
    label: String,
    coeffs: Arc<Vec<Complex64>>,
    closed: Closed,
    /// finite polynomial: the series is the function, not a truncation
    exact_series: bool,
    flags: FunctionFlags,
    truncation_degree: usize,
}

impl std::fmt::Debug for AnalyticFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticFunction").field("label", &self.label).finish()
    }
}

pub const DEFAULT_TRUNCATION: usize = 4096;

/// Build a function from its description with the given truncation degree
/// (`None` picks the family default).
pub fn make_function(spec: &FunctionSpec, truncation: Option<usize>) -> Result<AnalyticFunction> {
    let n_deg = truncation.unwrap_or(DEFAULT_TRUNCATION);
    if n_deg < 1 {
        return Err(Error::InvalidFunction("truncation degree must be >= 1".into()));
    }
    let f = match spec {
        FunctionSpec::Monomial { n } => {
            let n = *n as usize;
            let mut coeffs = vec![Complex64::ZERO; n + 1];
            coeffs[n] = Complex64::ONE;
            AnalyticFunction {
                spec: spec.clone(),
                label: spec.label(),
                coeffs: Arc::new(coeffs),
                closed: Closed::Monomial { n: n as u32, scale: 1.0 },
                exact_series: true,
                flags: FunctionFlags {
                    nonneg_coeffs: true,
                    univalent: n == 1,
                    class_s: n == 1,
                    close_to_convex: n == 1,
                },
                truncation_degree: n,
            }
        }
        FunctionSpec::LogMap => {
            let mut coeffs = vec![Complex64::ZERO; n_deg + 1];
            for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
                *c = Complex64::new(1.0 / k as f64, 0.0);
            }
            AnalyticFunction {
                spec: spec.clone(),
                label: spec.label(),
                coeffs: Arc::new(coeffs),
                closed: Closed::LogMap,
                exact_series: false,
                flags: FunctionFlags {
                    nonneg_coeffs: true,
                    univalent: true,
                    class_s: true,
                    close_to_convex: true,
                },
                truncation_degree: n_deg,
            }
        }
        FunctionSpec::Koebe => {
            let mut coeffs = vec![Complex64::ZERO; n_deg + 1];
            for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
                *c = Complex64::new(k as f64, 0.0);
            }
            AnalyticFunction {
                spec: spec.clone(),
                label: spec.label(),
                coeffs: Arc::new(coeffs),
                closed: Closed::Koebe,
                exact_series: false,
                flags: FunctionFlags {
                    nonneg_coeffs: true,
                    univalent: true,
                    class_s: true,
                    close_to_convex: true,
                },
                truncation_degree: n_deg,
            }
        }
        FunctionSpec::Coeffs { coeffs } => {
            if coeffs.is_empty() {
                return Err(Error::InvalidFunction("coefficient list must be nonempty".into()));
            }
            let nonneg = coeffs.iter().all(|&c| c >= 0.0);
            AnalyticFunction {
                spec: spec.clone(),
                label: spec.label(),
                coeffs: Arc::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect()),
                closed: Closed::None,
                exact_series: true,
                flags: FunctionFlags {
                    nonneg_coeffs: nonneg,
                    univalent: false,
                    class_s: false,
                    close_to_convex: false,
                },
                truncation_degree: coeffs.len() - 1,
            }
        }
    };
    f.check_consistency()?;
    Ok(f)
}

fn complex_pow(z: Complex64, n: u32) -> Complex64 {
    let mut acc = Complex64::ONE;
    let mut base = z;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Dilogarithm on `[0,1]`; `omx = 1-x` supplied separately so the reflection
/// stays exact when `x` is within one ulp of 1.
fn li2(x: f64, omx: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    if x <= 0.5 {
        let mut term = x;
        let mut sum = 0.0;
        for k in 1..200u32 {
            sum += term / ((k * k) as f64);
            term *= x;
            if term < 1e-18 {
                break;
            }
        }
        sum
    } else if omx <= 0.0 {
        PI * PI / 6.0
    } else {
        let log_x = (-omx).ln_1p();
        PI * PI / 6.0 - log_x * omx.ln() - li2(omx, x)
    }
}

impl AnalyticFunction {
    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn flags(&self) -> FunctionFlags {
        self.flags
    }

    pub fn truncation_degree(&self) -> usize {
        self.truncation_degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `f_hat(k)`, zero beyond the truncation.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn value_at_zero(&self) -> Complex64 {
        self.coeff(0)
    }

    pub fn to_json_string(&self) -> String {
        crate::report::to_json_string(&self.spec.to_json(self.truncation_degree))
    }

    /// Whether `sup_D |f|` is finite (true exactly for the polynomials here).
    pub fn bounded_on_disc(&self) -> bool {
        self.exact_series
    }

    fn series_at(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    fn series_at_real(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * r + c.re;
        }
        acc
    }

    /// Evaluate through the closed form when present, else the series.
    pub fn eval(&self, p: &DiscPoint) -> Complex64 {
        match self.closed {
            Closed::LogMap => -p.one_minus_z().ln(),
            Closed::LogMapPrime => p.one_minus_z().inv(),
            Closed::Koebe => {
                let omz = p.one_minus_z();
                p.z() / (omz * omz)
            }
            Closed::KoebePrime => {
                let omz = p.one_minus_z();
                (Complex64::ONE + p.z()) / (omz * omz * omz)
            }
            Closed::Monomial { n, scale } => scale * complex_pow(p.z(), n),
            Closed::None => self.series_at(p.z()),
        }
    }

    /// Value at the positive real point `r`, exact arbitrarily deep for the
    /// closed-form built-ins. For nonnegative coefficients this is `M_inf`.
    pub fn eval_radial(&self, p: Radius) -> f64 {
        match self.closed {
            Closed::LogMap => p.u,
            Closed::LogMapPrime => 1.0 / p.gap,
            Closed::Koebe => p.r / (p.gap * p.gap),
            Closed::KoebePrime => (1.0 + p.r) / (p.gap * p.gap * p.gap),
            Closed::Monomial { n, scale } => scale * p.pow(n as f64),
            Closed::None => self.series_at_real(p.r),
        }
    }

    /// Coefficient-shift derivative; closed forms follow one level.
    pub fn derivative(&self) -> AnalyticFunction {
        let coeffs: Vec<Complex64> = if self.coeffs.len() <= 1 {
            vec![Complex64::ZERO]
        } else {
            (1..self.coeffs.len()).map(|k| self.coeffs[k] * k as f64).collect()
        };
        let closed = match self.closed {
            Closed::LogMap => Closed::LogMapPrime,
            Closed::Koebe => Closed::KoebePrime,
            Closed::Monomial { n: 0, .. } => Closed::Monomial { n: 0, scale: 0.0 },
            Closed::Monomial { n, scale } => {
                Closed::Monomial { n: n - 1, scale: scale * n as f64 }
            }
            _ => Closed::None,
        };
        AnalyticFunction {
            spec: self.spec.clone(),
            label: format!("{}'", self.label),
            coeffs: Arc::new(coeffs),
            closed,
            exact_series: self.exact_series,
            flags: FunctionFlags {
                nonneg_coeffs: self.flags.nonneg_coeffs,
                ..FunctionFlags::default()
            },
            truncation_degree: self.truncation_degree.saturating_sub(1).max(1),
        }
    }

    /// Largest radius where the truncated series still represents the
    /// function to ~1e-10 relative; closed-form evaluation has no such limit.
    pub fn max_valid_radius(&self) -> f64 {
        if self.exact_series {
            return 1.0;
        }
        let n = self.coeffs.len() - 1;
        let cn = self.coeffs[n].norm().max(1e-300);
        // |f_hat(k)| <= cn (k/n)^2 holds for every family here; bound the
        // tail by cn r^{n+1} ((n+1)/n)^2 / (1-r)^3 and solve against 1e-10
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        for _ in 0..80 {
            let r: f64 = 0.5 * (lo + hi);
            let tail = cn * ((n as f64 + 1.0) / n as f64).powi(2)
                * (r.ln() * (n as f64 + 1.0)).exp()
                / (1.0 - r).powi(3);
            let scale = self.series_at_real(r).abs().max(cn);
            if tail <= 1e-10 * scale {
                lo = r;
            } else {
                hi = r;
            }
        }
        lo
    }

    fn require_series_valid(&self, p: Radius) -> Result<()> {
        if self.exact_series {
            return Ok(());
        }
        let max = self.max_valid_radius();
        if p.r > max {
            return Err(Error::TruncationInvalid { r: p.r, max });
        }
        Ok(())
    }

    /// Whether the function is representable at this radius through either
    /// the closed form or the truncated series.
    pub fn usable_at(&self, p: Radius) -> bool {
        self.closed != Closed::None || self.require_series_valid(p).is_ok()
    }

    fn require_usable(&self, p: Radius) -> Result<()> {
        if self.closed != Closed::None {
            return Ok(());
        }
        self.require_series_valid(p)
    }

    /// Squared second-power mean `M_2(r,f)^2 = sum |f_hat(k)|^2 r^{2k}`,
    /// through the closed Parseval sums for the built-ins.
    pub fn mean2_sq(&self, p: Radius) -> Result<f64> {
        let x = p.r * p.r;
        let omx = p.gap * (1.0 + p.r);
        match self.closed {
            Closed::LogMap => Ok(li2(x, omx)),
            Closed::LogMapPrime => Ok(1.0 / omx),
            // sum k^2 x^k = x(1+x)/(1-x)^3
            Closed::Koebe => Ok(x * (1.0 + x) / (omx * omx * omx)),
            // sum_{k>=1} k^4 x^{k-1} = (1+11x+11x^2+x^3)/(1-x)^5
            Closed::KoebePrime => {
                Ok((1.0 + 11.0 * x + 11.0 * x * x + x * x * x) / omx.powi(5))
            }
            Closed::Monomial { n, scale } => Ok(scale * scale * p.pow(2.0 * n as f64)),
            Closed::None => {
                self.require_series_valid(p)?;
                let mut sum = 0.0;
                for c in self.coeffs.iter().rev() {
                    sum = sum * x + c.norm_sqr();
                }
                Ok(sum)
            }
        }
    }

    /// Circle mean `M_p(r,f)` for `0 < p < inf`; Parseval for `p = 2`,
    /// adaptive angular quadrature otherwise.
    pub fn integral_mean(&self, pexp: f64, p: Radius, cfg: &QuadratureConfig) -> Result<f64> {
        if !(pexp > 0.0) {
            return Err(Error::Invalid("integral mean needs p > 0".into()));
        }
        if pexp == 2.0 {
            return Ok(self.mean2_sq(p)?.sqrt());
        }
        self.require_usable(p)?;
        let q = integrate_circle(|d| self.eval(d).norm().powf(pexp), p, cfg)?;
        Ok((q.value / TAU).powf(1.0 / pexp))
    }

    /// Maximum modulus `M_inf(r,f)`. Exact (value on the positive axis) for
    /// nonnegative coefficients; dense angular sampling with local
    /// refinement otherwise.
    pub fn max_modulus(&self, p: Radius) -> Result<f64> {
        self.require_usable(p)?;
        if self.flags.nonneg_coeffs {
            return Ok(self.eval_radial(p).abs());
        }
        let n = self.coeffs.len().max(2);
        let samples = 4 * n;
        let mut best_theta = 0.0;
        let mut best = 0.0;
        for i in 0..samples {
            let theta = TAU * i as f64 / samples as f64;
            let v = self.eval(&DiscPoint::new(p, theta)).norm();
            if v > best {
                best = v;
                best_theta = theta;
            }
        }
        // golden-section refinement around the best sample
        let golden = 0.5 * (3.0 - 5f64.sqrt());
        let mut a = best_theta - TAU / samples as f64;
        let mut b = best_theta + TAU / samples as f64;
        let value = |t: f64| self.eval(&DiscPoint::new(p, t)).norm();
        let mut x1 = a + golden * (b - a);
        let mut x2 = b - golden * (b - a);
        let mut f1 = value(x1);
        let mut f2 = value(x2);
        for _ in 0..70 {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = a + golden * (b - a);
                f1 = value(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = b - golden * (b - a);
                f2 = value(x2);
            }
        }
        Ok(best.max(f1).max(f2))
    }

    /// Coefficient majorant `P(r,f) = sum_{k>=1} |f_hat(k)| r^k`.
    pub fn taylor_majorant(&self, p: Radius) -> Result<f64> {
        if self.flags.nonneg_coeffs && self.closed != Closed::None {
            let head = self.coeff(0).re;
            return Ok(self.eval_radial(p) - head);
        }
        self.require_series_valid(p)?;
        let mut sum = 0.0;
        for k in (1..self.coeffs.len()).rev() {
            sum = sum * p.r + self.coeffs[k].norm();
        }
        Ok(sum * p.r)
    }

    /// Area of the image of `D(0,r)`, with multiplicity:
    /// `pi sum k |f_hat(k)|^2 r^{2k}`, closed for the built-ins.
    pub fn image_area(&self, p: Radius) -> Result<f64> {
        let x = p.r * p.r;
        let omx = p.gap * (1.0 + p.r);
        match self.closed {
            // sum x^k / k = -log(1-x), computed through 1-x
            Closed::LogMap => Ok(PI * -omx.ln()),
            // sum k^3 x^k = x(1+4x+x^2)/(1-x)^4
            Closed::Koebe => {
                Ok(PI * x * (1.0 + 4.0 * x + x * x) / (omx * omx * omx * omx))
            }
            Closed::Monomial { n, scale } => {
                Ok(PI * (n as f64) * scale * scale * p.pow(2.0 * n as f64))
            }
            _ => {
                self.require_series_valid(p)?;
                let mut sum = 0.0;
                for k in (1..self.coeffs.len()).rev() {
                    sum = sum * x + k as f64 * self.coeffs[k].norm_sqr();
                }
                Ok(PI * sum * x)
            }
        }
    }

    /// Construction-time check that the truncated series matches the closed
    /// form in the region where both are trustworthy.
    fn check_consistency(&self) -> Result<()> {
        if self.closed == Closed::None || matches!(self.closed, Closed::Monomial { .. }) {
            return Ok(());
        }
        for &(r, theta) in &[(0.5, 0.0), (0.5, 2.0), (0.3, 4.0)] {
            let d = DiscPoint::new(Radius::from_r(r), theta);
            let closed = self.eval(&d);
            let series = self.series_at(d.z());
            if (closed - series).norm() > 1e-8 * (1.0 + closed.norm()) {
                return Err(Error::InvalidFunction(format!(
                    "{}: truncated series disagrees with the closed form at r={r}",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(spec: FunctionSpec) -> AnalyticFunction {
        make_function(&spec, None).unwrap()
    }

    fn log_map() -> AnalyticFunction {
        f(FunctionSpec::LogMap)
    }

    fn koebe() -> AnalyticFunction {
        f(FunctionSpec::Koebe)
    }

    fn monomial(n: u32) -> AnalyticFunction {
        f(FunctionSpec::Monomial { n })
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn builtin_coefficients_and_flags() {
        let m3 = monomial(3);
        assert_eq!(m3.coeff(3), Complex64::ONE);
        assert!(m3.flags().nonneg_coeffs && !m3.flags().univalent);

        let lm = log_map();
        assert!((lm.coeff(5).re - 0.2).abs() < 1e-15);
        assert!(lm.flags().class_s && lm.flags().close_to_convex);

        let k = koebe();
        assert!((k.coeff(7).re - 7.0).abs() < 1e-15);
        assert!(k.flags().univalent);
    }

    #[test]
    fn derivative_shifts_coefficients() {
        let d = monomial(3).derivative();
        assert_eq!(d.coeff(2), Complex64::new(3.0, 0.0));

        let d = log_map().derivative();
        for k in [0usize, 3, 17] {
            assert!((d.coeff(k).re - 1.0).abs() < 1e-15, "geometric series");
        }

        let d = koebe().derivative();
        for k in [1usize, 2, 9] {
            // coefficient k^2 lands at position k-1
            assert!((d.coeff(k - 1).re - (k * k) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn integral_means() {
        let p = Radius::from_r(0.37);
        assert!(
            (monomial(4).integral_mean(1.3, p, &cfg()).unwrap() - 0.37f64.powi(4)).abs() < 1e-10
        );

        // 1 + z at p = 2: sqrt(1 + r^2)
        let f1 = f(FunctionSpec::Coeffs { coeffs: vec![1.0, 1.0] });
        let r = Radius::from_r(0.6);
        assert!(
            (f1.integral_mean(2.0, r, &cfg()).unwrap() - (1.0 + 0.36f64).sqrt()).abs() < 1e-12
        );

        // log_map at p = 1, r = 0.5 against a blunt Riemann oracle
        let lm = log_map();
        let r = Radius::from_r(0.5);
        let quad = lm.integral_mean(1.0, r, &cfg()).unwrap();
        let n = 20000;
        let mut s = 0.0;
        for i in 0..n {
            let theta = TAU * (i as f64 + 0.5) / n as f64;
            s += lm.eval(&DiscPoint::new(r, theta)).norm();
        }
        let oracle = s / n as f64;
        assert!((quad - oracle).abs() < 1e-8, "quad {quad} oracle {oracle}");
    }

    #[test]
    fn mean2_closed_forms_match_series() {
        let p = Radius::from_r(0.8);
        for func in [log_map(), koebe(), log_map().derivative(), koebe().derivative()] {
            let closed = func.mean2_sq(p).unwrap();
            let mut series = 0.0;
            for (k, c) in func.coeffs().iter().enumerate() {
                series += c.norm_sqr() * p.r.powi(2 * k as i32);
            }
            assert!(
                (closed - series).abs() < 1e-6 * closed,
                "{}: closed {closed} series {series}",
                func.label()
            );
        }
    }

    #[test]
    fn max_modulus_paths() {
        // nonneg coefficients: value on the positive axis
        let lm = log_map();
        let p = Radius::from_gap(1.0 / std::f64::consts::E);
        assert!((lm.max_modulus(p).unwrap() - 1.0).abs() < 1e-12);

        let k = koebe();
        assert!((k.max_modulus(Radius::from_r(0.5)).unwrap() - 2.0).abs() < 1e-12);

        // sign changes force the sampling path: f = z - z^2 at r = 1/2 peaks
        // at theta = pi with value 3/4
        let g = f(FunctionSpec::Coeffs { coeffs: vec![0.0, 1.0, -1.0] });
        assert!((g.max_modulus(Radius::from_r(0.5)).unwrap() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn taylor_majorant_values() {
        let p = Radius::from_r(0.5);
        assert!((monomial(3).taylor_majorant(p).unwrap() - 0.125).abs() < 1e-14);
        assert!((log_map().taylor_majorant(p).unwrap() - 2f64.ln()).abs() < 1e-12);
        let g = f(FunctionSpec::Coeffs { coeffs: vec![0.0, 1.0, -1.0] });
        assert!((g.taylor_majorant(p).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn majorant_dominates_max_modulus() {
        for func in [monomial(2), log_map(), koebe()] {
            for r in [0.1, 0.5, 0.9, 0.99] {
                let p = Radius::from_r(r);
                let m = func.max_modulus(p).unwrap();
                let maj = func.taylor_majorant(p).unwrap();
                assert!(m <= maj * (1.0 + 1e-12), "{} at {r}", func.label());
            }
        }
        let g = f(FunctionSpec::Coeffs { coeffs: vec![0.3, 1.0, -1.0, 0.5] });
        for r in [0.3, 0.8] {
            let p = Radius::from_r(r);
            let head = g.coeff(0).norm();
            assert!(
                g.max_modulus(p).unwrap() <= head + g.taylor_majorant(p).unwrap() + 1e-12
            );
        }
    }

    #[test]
    fn image_areas() {
        // m_1: pi r^2; m_2 at 1/2: pi 2 (1/2)^4 = pi/8
        let p = Radius::from_r(0.5);
        assert!((monomial(1).image_area(p).unwrap() - PI * 0.25).abs() < 1e-14);
        assert!((monomial(2).image_area(p).unwrap() - PI / 8.0).abs() < 1e-14);
        // log_map: -pi log(1 - r^2)
        let a = log_map().image_area(p).unwrap();
        assert!((a - PI * -(1.0f64 - 0.25).ln()).abs() < 1e-12);
        // koebe closed vs series at a moderate radius
        let p = Radius::from_r(0.3);
        let closed = koebe().image_area(p).unwrap();
        let mut series = 0.0;
        for k in 1..200 {
            series += (k as f64).powi(3) * 0.09f64.powi(k);
        }
        assert!((closed - PI * series).abs() < 1e-10 * closed);
    }

    #[test]
    fn mean_monotone_in_radius_and_exponent() {
        let lm = log_map();
        let mut prev = 0.0;
        for r in [0.2, 0.5, 0.8] {
            let m = lm.integral_mean(1.0, Radius::from_r(r), &cfg()).unwrap();
            assert!(m > prev);
            prev = m;
        }
        let p = Radius::from_r(0.7);
        let m_half = lm.integral_mean(0.5, p, &cfg()).unwrap();
        let m1 = lm.integral_mean(1.0, p, &cfg()).unwrap();
        let m2 = lm.integral_mean(2.0, p, &cfg()).unwrap();
        let m3 = lm.integral_mean(3.0, p, &cfg()).unwrap();
        let minf = lm.max_modulus(p).unwrap();
        assert!(m_half <= m1 && m1 <= m2 && m2 <= m3 && m3 <= minf + 1e-12);
    }

    #[test]
    fn truncation_validity() {
        let lm = log_map();
        let max = lm.max_valid_radius();
        assert!(max > 0.9 && max < 1.0, "max {max}");
        // closed-form evaluation still works beyond the series range
        let deep = Radius::from_gap(1e-8);
        assert!(lm.max_modulus(deep).is_ok());
        assert!(f(FunctionSpec::Coeffs { coeffs: vec![0.0, 1.0, -1.0] })
            .max_modulus(deep)
            .is_ok());
    }

    #[test]
    fn dilogarithm_values() {
        assert!((li2(0.0, 1.0) - 0.0).abs() < 1e-15);
        assert!((li2(1.0, 0.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!(
            (li2(0.5, 0.5) - (PI * PI / 12.0 - 0.5 * 2f64.ln() * 2f64.ln())).abs() < 1e-14
        );
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(FunctionSpec::parse("monomial:2").unwrap(), FunctionSpec::Monomial { n: 2 });
        assert_eq!(FunctionSpec::parse("log_map").unwrap(), FunctionSpec::LogMap);
        assert_eq!(
            FunctionSpec::parse("coeffs:0,1,-1").unwrap(),
            FunctionSpec::Coeffs { coeffs: vec![0.0, 1.0, -1.0] }
        );
        assert!(FunctionSpec::parse("nope").is_err());
    }
}
