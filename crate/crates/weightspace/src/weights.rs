//! Radial weights `w(r) >= 0` on `[0,1)` with finite mass, their tail
//! integrals, moments, and the derived weights used throughout: the modified
//! weight `w(r)(1-r)^x`, the tail quotient `w_hat(r)/(1-r)`, the tail itself
//! as a weight, and the log-kernel transform `nu*`.
//!
//! Families with closed-form tails and moments keep those attached; every
//! derived object falls back to cached quadrature. Each weight also carries
//! its *mass form* `w(r)(1-r)` written analytically, which is what the
//! endpoint-graded integrator consumes; for log-power densities the mass form
//! stays evaluable arbitrarily deep where the density itself overflows.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_mass_tail, QuadratureConfig, Radius};

/// Description of a weight, serializable and cheap to clone.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    /// `w(r) = level`
    Constant { level: f64 },
    /// `w(r) = (1-r)^alpha`, `alpha > -1`
    Power { alpha: f64 },
    /// `w(r) = 1/((1-r) (log(e/(1-r)))^alpha)`, `alpha > 1`
    LogPower { alpha: f64 },
    /// `w(r) = exp(-c/(1-r))`, `c > 0`
    Exponential { c: f64 },
    /// positive samples `(r_i, w_i)`, interpolated log-linearly in `1-r`
    Tabulated { samples: Vec<(f64, f64)> },
    /// a transform applied to a base weight
    Derived { base: Box<WeightSpec>, transform: Transform },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    /// `c * w`
    Scale(f64),
    /// `w(r) (1-r)^x`
    Modify(f64),
    /// `w_hat(r)/(1-r)`
    Tilde,
    /// the tail `w_hat` itself, as a weight
    Hat,
}

/// Wire form pinned by the harness schema: `{family, params}` with an
/// optional `base` for derived weights.
#[derive(Serialize, Deserialize)]
struct SpecJson {
    family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<Box<SpecJson>>,
}

impl WeightSpec {
    fn to_json(&self) -> SpecJson {
        match self {
            WeightSpec::Constant { level } => SpecJson {
                family: "constant".into(),
                params: if *level == 1.0 { vec![] } else { vec![*level] },
                base: None,
            },
            WeightSpec::Power { alpha } => SpecJson {
                family: "power".into(),
                params: vec![*alpha],
                base: None,
            },
            WeightSpec::LogPower { alpha } => SpecJson {
                family: "log_power".into(),
                params: vec![*alpha],
                base: None,
            },
            WeightSpec::Exponential { c } => SpecJson {
                family: "exponential".into(),
                params: vec![*c],
                base: None,
            },
            WeightSpec::Tabulated { samples } => SpecJson {
                family: "tabulated".into(),
                params: samples.iter().flat_map(|&(r, w)| [r, w]).collect(),
                base: None,
            },
            WeightSpec::Derived { base, transform } => {
                let (family, params) = match transform {
                    Transform::Scale(c) => ("scaled", vec![*c]),
                    Transform::Modify(x) => ("modified", vec![*x]),
                    Transform::Tilde => ("tilde", vec![]),
                    Transform::Hat => ("hat", vec![]),
                };
                SpecJson {
                    family: family.into(),
                    params,
                    base: Some(Box::new(base.to_json())),
                }
            }
        }
    }

    fn from_json(j: &SpecJson) -> Result<WeightSpec> {
        let one_param = |name: &str| -> Result<f64> {
            j.params
                .first()
                .copied()
                .ok_or_else(|| Error::InvalidWeight(format!("{name} needs one parameter")))
        };
        let base = |name: &str| -> Result<Box<WeightSpec>> {
            match &j.base {
                Some(b) => Ok(Box::new(WeightSpec::from_json(b)?)),
                None => Err(Error::InvalidWeight(format!("{name} needs a base weight"))),
            }
        };
        Ok(match j.family.as_str() {
            "constant" => WeightSpec::Constant {
                level: j.params.first().copied().unwrap_or(1.0),
            },
            "power" => WeightSpec::Power { alpha: one_param("power")? },
            "log_power" | "v_alpha" => WeightSpec::LogPower { alpha: one_param("log_power")? },
            "exponential" | "exp" => WeightSpec::Exponential { c: one_param("exponential")? },
            "tabulated" => {
                if j.params.len() < 4 || j.params.len() % 2 != 0 {
                    return Err(Error::InvalidWeight(
                        "tabulated needs an even number (>= 4) of params: r0,w0,r1,w1,...".into(),
                    ));
                }
                let samples = j.params.chunks(2).map(|c| (c[0], c[1])).collect();
                WeightSpec::Tabulated { samples }
            }
            "scaled" => WeightSpec::Derived {
                base: base("scaled")?,
                transform: Transform::Scale(one_param("scaled")?),
            },
            "modified" => WeightSpec::Derived {
                base: base("modified")?,
                transform: Transform::Modify(one_param("modified")?),
            },
            "tilde" => WeightSpec::Derived { base: base("tilde")?, transform: Transform::Tilde },
            "hat" => WeightSpec::Derived { base: base("hat")?, transform: Transform::Hat },
            other => {
                return Err(Error::InvalidWeight(format!("unknown weight family `{other}`")))
            }
        })
    }

    /// Compact text form: `constant`, `power:1`, `v_alpha:2`, `exp:1`, or a
    /// JSON object for the full schema.
    pub fn parse(text: &str) -> Result<WeightSpec> {
        let text = text.trim();
        if text.starts_with('{') {
            let j: SpecJson = serde_json::from_str(text)
                .map_err(|e| Error::InvalidWeight(format!("bad weight JSON: {e}")))?;
            return WeightSpec::from_json(&j);
        }
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::InvalidWeight(format!("`{name}` needs a parameter")))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidWeight(format!("bad parameter in `{text}`")))
        };
        Ok(match name {
            "constant" | "const" | "1" => WeightSpec::Constant {
                level: match arg {
                    Some(a) => a
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidWeight(format!("bad parameter in `{text}`")))?,
                    None => 1.0,
                },
            },
            "power" => WeightSpec::Power { alpha: num(arg)? },
            "v_alpha" | "log_power" => WeightSpec::LogPower { alpha: num(arg)? },
            "exp" | "exponential" => WeightSpec::Exponential { c: num(arg)? },
            other => {
                return Err(Error::InvalidWeight(format!(
                    "unknown weight `{other}` (expected constant, power:a, v_alpha:a, exp:c, or JSON)"
                )))
            }
        })
    }

    pub fn to_json_string(&self) -> String {
        crate::report::to_json_string(&self.to_json())
    }

    pub fn label(&self) -> String {
        match self {
            WeightSpec::Constant { level } if *level == 1.0 => "constant".into(),
            WeightSpec::Constant { level } => format!("constant({level})"),
            WeightSpec::Power { alpha } => format!("power({alpha})"),
            WeightSpec::LogPower { alpha } => format!("v_alpha({alpha})"),
            WeightSpec::Exponential { c } => format!("exp({c})"),
            WeightSpec::Tabulated { samples } => format!("tabulated[{}]", samples.len()),
            WeightSpec::Derived { base, transform } => {
                let mut s = String::new();
                match transform {
                    Transform::Scale(c) => write!(s, "scale({c}, {})", base.label()),
                    Transform::Modify(x) => write!(s, "modify({}, {x})", base.label()),
                    Transform::Tilde => write!(s, "tilde({})", base.label()),
                    Transform::Hat => write!(s, "hat({})", base.label()),
                }
                .ok();
                s
            }
        }
    }
}

impl Serialize for WeightSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SpecJson::deserialize(d)?;
        WeightSpec::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Closed-form structure the constructors track through transforms.
#[derive(Clone, Copy, Debug)]
enum Kind {
    /// `c (1-r)^alpha`
    SPower { c: f64, alpha: f64 },
    /// `c v_alpha(r) = c / ((1-r) L^alpha)`, `L = log(e/(1-r))`
    SLogPower { c: f64, alpha: f64 },
    /// `c L^{-beta}` (tails of log-power weights)
    SLogTail { c: f64, beta: f64 },
    /// `c exp(-k/(1-r))`
    Exponential { c: f64, k: f64 },
    Opaque,
}

type DensityFn = Arc<dyn Fn(Radius) -> f64 + Send + Sync>;

/// A radial weight with pointwise evaluation and optional closed forms for
/// the tail and the moments. Construction goes through [`make_weight`].
pub struct RadialWeight {
    spec: WeightSpec,
    label: String,
    kind: Kind,
    density: DensityFn,
    /// `w(r)(1-r)`, written to survive arbitrarily deep points
    mass_form: DensityFn,
    closed_tail: Option<DensityFn>,
    closed_moment: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    cfg: QuadratureConfig,
    tail_cache: Mutex<HashMap<u64, f64>>,
    moment_cache: Mutex<HashMap<u64, f64>>,
}

impl std::fmt::Debug for RadialWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialWeight").field("label", &self.label).finish()
    }
}

/// log Beta; the large-argument branch avoids the catastrophic cancellation
/// of subtracting two huge `ln_gamma` values.
fn ln_beta(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if a >= 1e5 && b * b < 0.01 * a {
        // Gamma(a+b)/Gamma(a) = a^b (1 + b(b-1)/(2a)
        //                              + b(b-1)(b-2)(3b-1)/(24a^2) + O(a^-3))
        let c1 = b * (b - 1.0) / (2.0 * a);
        let c2 = b * (b - 1.0) * (b - 2.0) * (3.0 * b - 1.0) / (24.0 * a * a);
        ln_gamma(b) - b * a.ln() - (c1 + c2).ln_1p()
    } else if b >= 1e5 && a * a < 0.01 * b {
        ln_beta(b, a)
    } else {
        ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
    }
}

/// Build a weight from its description, attaching closed forms where the
/// family admits them and rejecting specs outside the admissible ranges.
pub fn make_weight(spec: &WeightSpec) -> Result<RadialWeight> {
    make_weight_cfg(spec, QuadratureConfig::default())
}

pub fn make_weight_cfg(spec: &WeightSpec, cfg: QuadratureConfig) -> Result<RadialWeight> {
    let w = build(spec, cfg)?;
    // standing assumptions: finite mass, positive tail
    let mass = w.tail(Radius::ZERO)?;
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::InvalidWeight(format!(
            "{}: total mass must be positive and finite (got {mass:e})",
            w.label
        )));
    }
    Ok(w)
}

fn from_kind(spec: WeightSpec, kind: Kind, cfg: QuadratureConfig) -> RadialWeight {
    let label = spec.label();
    let density: DensityFn = match kind {
        Kind::SPower { c, alpha } => Arc::new(move |p: Radius| c * p.gap.powf(alpha)),
        Kind::SLogPower { c, alpha } => {
            Arc::new(move |p: Radius| c / (p.gap * p.log_scale().powf(alpha)))
        }
        Kind::SLogTail { c, beta } => Arc::new(move |p: Radius| c * p.log_scale().powf(-beta)),
        Kind::Exponential { c, k } => Arc::new(move |p: Radius| c * (-k / p.gap).exp()),
        Kind::Opaque => unreachable!("opaque weights carry explicit densities"),
    };
    let mass_form: DensityFn = match kind {
        Kind::SPower { c, alpha } => Arc::new(move |p: Radius| c * p.gap.powf(alpha + 1.0)),
        Kind::SLogPower { c, alpha } => Arc::new(move |p: Radius| c * p.log_scale().powf(-alpha)),
        Kind::SLogTail { c, beta } => {
            Arc::new(move |p: Radius| c * p.log_scale().powf(-beta) * p.gap)
        }
        Kind::Exponential { c, k } => Arc::new(move |p: Radius| c * (-k / p.gap).exp() * p.gap),
        Kind::Opaque => unreachable!(),
    };
    let closed_tail: Option<DensityFn> = match kind {
        Kind::SPower { c, alpha } => {
            Some(Arc::new(move |p: Radius| c * p.gap.powf(alpha + 1.0) / (alpha + 1.0)))
        }
        Kind::SLogPower { c, alpha } => {
            Some(Arc::new(move |p: Radius| c * p.log_scale().powf(1.0 - alpha) / (alpha - 1.0)))
        }
        _ => None,
    };
    let closed_moment = match kind {
        Kind::SPower { c, alpha } => {
            let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
                Arc::new(move |x: f64| c * ln_beta(x + 1.0, alpha + 1.0).exp());
            Some(f)
        }
        _ => None,
    };
    RadialWeight {
        spec,
        label,
        kind,
        density,
        mass_form,
        closed_tail,
        closed_moment,
        cfg,
        tail_cache: Mutex::new(HashMap::new()),
        moment_cache: Mutex::new(HashMap::new()),
    }
}

fn opaque(
    spec: WeightSpec,
    density: DensityFn,
    mass_form: DensityFn,
    cfg: QuadratureConfig,
) -> RadialWeight {
    RadialWeight {
        label: spec.label(),
        spec,
        kind: Kind::Opaque,
        density,
        mass_form,
        closed_tail: None,
        closed_moment: None,
        cfg,
        tail_cache: Mutex::new(HashMap::new()),
        moment_cache: Mutex::new(HashMap::new()),
    }
}

fn build(spec: &WeightSpec, cfg: QuadratureConfig) -> Result<RadialWeight> {
    match spec {
        WeightSpec::Constant { level } => {
            if !(*level > 0.0) {
                return Err(Error::InvalidWeight("constant level must be positive".into()));
            }
            Ok(from_kind(spec.clone(), Kind::SPower { c: *level, alpha: 0.0 }, cfg))
        }
        WeightSpec::Power { alpha } => {
            if !(*alpha > -1.0) {
                return Err(Error::InvalidWeight(format!(
                    "power weight needs alpha > -1 (got {alpha})"
                )));
            }
            Ok(from_kind(spec.clone(), Kind::SPower { c: 1.0, alpha: *alpha }, cfg))
        }
        WeightSpec::LogPower { alpha } => {
            if !(*alpha > 1.0) {
                return Err(Error::InvalidWeight(format!(
                    "log-power weight needs alpha > 1 (got {alpha})"
                )));
            }
            Ok(from_kind(spec.clone(), Kind::SLogPower { c: 1.0, alpha: *alpha }, cfg))
        }
        WeightSpec::Exponential { c } => {
            if !(*c > 0.0) {
                return Err(Error::InvalidWeight("exponential weight needs c > 0".into()));
            }
            Ok(from_kind(spec.clone(), Kind::Exponential { c: 1.0, k: *c }, cfg))
        }
        WeightSpec::Tabulated { samples } => build_tabulated(spec, samples, cfg),
        WeightSpec::Derived { base, transform } => {
            let b = build(base, cfg)?;
            apply_transform(spec.clone(), b, *transform, cfg)
        }
    }
}

fn build_tabulated(
    spec: &WeightSpec,
    samples: &[(f64, f64)],
    cfg: QuadratureConfig,
) -> Result<RadialWeight> {
    if samples.len() < 2 {
        return Err(Error::InvalidWeight("tabulated weight needs at least 2 samples".into()));
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for &(r, w) in samples {
        if !(0.0..1.0).contains(&r) || !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidWeight(
                "tabulated samples need r in [0,1) and w > 0".into(),
            ));
        }
        // store as (ln gap, ln w), sorted by decreasing gap
        pts.push(((1.0 - r).ln(), w.ln()));
    }
    pts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for win in pts.windows(2) {
        if win[0].0 <= win[1].0 {
            return Err(Error::InvalidWeight("tabulated samples need distinct radii".into()));
        }
    }
    // integrability near 1: density ~ gap^slope with the edge slope
    let n = pts.len();
    let slope = (pts[n - 1].1 - pts[n - 2].1) / (pts[n - 1].0 - pts[n - 2].0);
    if slope <= -1.0 + 1e-9 {
        return Err(Error::NonIntegrable(format!(
            "tabulated weight has edge exponent {slope:.3} <= -1 near r = 1"
        )));
    }
    let pts = Arc::new(pts);
    // log of density, linear in log(1-r); extrapolated past the edges
    let log_density = move |pts: &[(f64, f64)], p: Radius| -> f64 {
        let x = -p.u;
        let mut i = 0;
        while i + 2 < pts.len() && pts[i + 1].0 > x {
            i += 1;
        }
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[i + 1];
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    };
    let pts2 = pts.clone();
    let density: DensityFn = Arc::new(move |p: Radius| log_density(&pts, p).exp());
    let mass_form: DensityFn = Arc::new(move |p: Radius| (log_density(&pts2, p) - p.u).exp());
    Ok(opaque(spec.clone(), density, mass_form, cfg))
}

fn apply_transform(
    spec: WeightSpec,
    base: RadialWeight,
    t: Transform,
    cfg: QuadratureConfig,
) -> Result<RadialWeight> {
    match t {
        Transform::Scale(c) => {
            if !(c > 0.0) {
                return Err(Error::InvalidWeight("scale factor must be positive".into()));
            }
            match base.kind {
                Kind::SPower { c: c0, alpha } => {
                    Ok(from_kind(spec, Kind::SPower { c: c * c0, alpha }, cfg))
                }
                Kind::SLogPower { c: c0, alpha } => {
                    Ok(from_kind(spec, Kind::SLogPower { c: c * c0, alpha }, cfg))
                }
                Kind::SLogTail { c: c0, beta } => {
                    Ok(from_kind(spec, Kind::SLogTail { c: c * c0, beta }, cfg))
                }
                Kind::Exponential { c: c0, k } => {
                    Ok(from_kind(spec, Kind::Exponential { c: c * c0, k }, cfg))
                }
                Kind::Opaque => {
                    let d = base.density.clone();
                    let m = base.mass_form.clone();
                    Ok(opaque(
                        spec,
                        Arc::new(move |p| c * d(p)),
                        Arc::new(move |p| c * m(p)),
                        cfg,
                    ))
                }
            }
        }
        Transform::Modify(x) => {
            match base.kind {
                Kind::SPower { c, alpha } => {
                    if alpha + x <= -1.0 {
                        return Err(Error::NonIntegrable(format!(
                            "{}: exponent {} not integrable",
                            spec.label(),
                            alpha + x
                        )));
                    }
                    Ok(from_kind(spec, Kind::SPower { c, alpha: alpha + x }, cfg))
                }
                Kind::SLogPower { c, alpha } if x == 0.0 => {
                    Ok(from_kind(spec, Kind::SLogPower { c, alpha }, cfg))
                }
                Kind::SLogPower { .. } if x < 0.0 => Err(Error::NonIntegrable(format!(
                    "{}: log-power density times (1-r)^x with x < 0 is not integrable",
                    spec.label()
                ))),
                Kind::SLogTail { .. } if x <= -1.0 => Err(Error::NonIntegrable(format!(
                    "{}: exponent {x} <= -1 against a bounded density",
                    spec.label()
                ))),
                _ => {
                    let d = base.density.clone();
                    let m = base.mass_form.clone();
                    let density: DensityFn = Arc::new(move |p| d(p) * p.gap.powf(x));
                    // (1-r)^x through exp(-x u) stays finite at deep points
                    let mass_form: DensityFn = Arc::new(move |p| m(p) * (-x * p.u).exp());
                    let w = opaque(spec, density, mass_form, cfg);
                    probe_integrable(w)
                }
            }
        }
        Transform::Hat => match base.kind {
            Kind::SPower { c, alpha } => {
                Ok(from_kind(spec, Kind::SPower { c: c / (alpha + 1.0), alpha: alpha + 1.0 }, cfg))
            }
            Kind::SLogPower { c, alpha } => Ok(from_kind(
                spec,
                Kind::SLogTail { c: c / (alpha - 1.0), beta: alpha - 1.0 },
                cfg,
            )),
            _ => {
                let b = Arc::new(base);
                let b2 = b.clone();
                let density: DensityFn = Arc::new(move |p| b.tail(p).unwrap_or(f64::NAN));
                let mass_form: DensityFn =
                    Arc::new(move |p| b2.tail(p).unwrap_or(f64::NAN) * p.gap);
                let w = opaque(spec, density, mass_form, cfg);
                probe_integrable(w)
            }
        },
        Transform::Tilde => match base.kind {
            Kind::SPower { c, alpha } => {
                Ok(from_kind(spec, Kind::SPower { c: c / (alpha + 1.0), alpha }, cfg))
            }
            Kind::SLogPower { c, alpha } => {
                if alpha - 1.0 <= 1.0 {
                    return Err(Error::NonIntegrable(format!(
                        "{}: tail quotient of v_{alpha} is v_{} which is not integrable",
                        spec.label(),
                        alpha - 1.0
                    )));
                }
                Ok(from_kind(
                    spec,
                    Kind::SLogPower { c: c / (alpha - 1.0), alpha: alpha - 1.0 },
                    cfg,
                ))
            }
            _ => {
                let b = Arc::new(base);
                let b2 = b.clone();
                let density: DensityFn =
                    Arc::new(move |p| b.tail(p).unwrap_or(f64::NAN) / p.gap);
                // the Jacobian gap cancels exactly against the quotient
                let mass_form: DensityFn = Arc::new(move |p| b2.tail(p).unwrap_or(f64::NAN));
                let w = opaque(spec, density, mass_form, cfg);
                probe_integrable(w)
            }
        },
    }
}

/// Checks `tail(0) < inf` by quadrature for weights without a closed form.
fn probe_integrable(w: RadialWeight) -> Result<RadialWeight> {
    match w.tail(Radius::ZERO) {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(w),
        Ok(v) => Err(Error::NonIntegrable(format!("{}: mass {v:e}", w.label))),
        Err(Error::NonConvergent { .. }) | Err(Error::Domain { .. }) => Err(
            Error::NonIntegrable(format!("{}: tail integral diverges", w.label)),
        ),
        Err(e) => Err(e),
    }
}

impl RadialWeight {
    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn quadrature_config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    /// Pointwise density `w(r)`.
    pub fn eval(&self, p: Radius) -> f64 {
        (self.density)(p)
    }

    /// `w(r)(1-r)`, the form consumed by the graded integrator; unlike the
    /// density it stays evaluable at points deeper than `1-r` can represent.
    pub fn mass(&self, p: Radius) -> f64 {
        (self.mass_form)(p)
    }

    pub fn has_closed_tail(&self) -> bool {
        self.closed_tail.is_some()
    }

    pub fn has_closed_moment(&self) -> bool {
        self.closed_moment.is_some()
    }

    /// Tail integral `w_hat(r) = \int_r^1 w(t) dt`.
    pub fn tail(&self, p: Radius) -> Result<f64> {
        if let Some(ct) = &self.closed_tail {
            return Ok(ct(p));
        }
        let key = p.u.to_bits();
        if let Some(&v) = self.tail_cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let m = &self.mass_form;
        let q = integrate_mass_tail(|s| m(s), p, 0.0, &self.cfg)?;
        self.tail_cache.lock().unwrap().insert(key, q.value);
        Ok(q.value)
    }

    /// Moment `w_x = \int_0^1 r^x w(r) dr` for `x >= 0`.
    pub fn moment(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Invalid(format!("moment index must be >= 0 (got {x})")));
        }
        if let Some(cm) = &self.closed_moment {
            return Ok(cm(x));
        }
        let key = x.to_bits();
        if let Some(&v) = self.moment_cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let m = &self.mass_form;
        let min_u = if x > 1.0 { x.ln() + 40.0 } else { 0.0 };
        let q = integrate_mass_tail(|s| s.pow(x) * m(s), Radius::ZERO, min_u, &self.cfg)?;
        self.moment_cache.lock().unwrap().insert(key, q.value);
        Ok(q.value)
    }

    /// The modified weight `w(r)(1-r)^x`.
    pub fn modify(&self, x: f64) -> Result<RadialWeight> {
        make_weight_cfg(
            &WeightSpec::Derived {
                base: Box::new(self.spec.clone()),
                transform: Transform::Modify(x),
            },
            self.cfg,
        )
    }

    /// The tail quotient `w_hat(r)/(1-r)`.
    pub fn tilde(&self) -> Result<RadialWeight> {
        make_weight_cfg(
            &WeightSpec::Derived { base: Box::new(self.spec.clone()), transform: Transform::Tilde },
            self.cfg,
        )
    }

    /// The tail `w_hat` as a weight in its own right.
    pub fn hat_weight(&self) -> Result<RadialWeight> {
        make_weight_cfg(
            &WeightSpec::Derived { base: Box::new(self.spec.clone()), transform: Transform::Hat },
            self.cfg,
        )
    }

    pub fn scaled(&self, c: f64) -> Result<RadialWeight> {
        make_weight_cfg(
            &WeightSpec::Derived {
                base: Box::new(self.spec.clone()),
                transform: Transform::Scale(c),
            },
            self.cfg,
        )
    }

    /// Log-kernel transform `nu*(r) = \int_r^1 log(s/r) nu(s) s ds`.
    pub fn star(&self, p: Radius) -> Result<f64> {
        if !(p.r > 0.0) {
            return Err(Error::Invalid("star transform needs r in (0,1)".into()));
        }
        let m = &self.mass_form;
        let ln_r = p.ln_r();
        let q = integrate_mass_tail(
            move |s| (s.ln_r() - ln_r) * m(s) * s.r,
            p,
            0.0,
            &self.cfg,
        )?;
        Ok(q.value)
    }

    /// Same weight with closed forms stripped, so tails and moments go
    /// through quadrature. Used as an independent oracle in tests.
    #[doc(hidden)]
    pub fn quadrature_only(&self) -> RadialWeight {
        RadialWeight {
            spec: self.spec.clone(),
            label: format!("{}[quadrature]", self.label),
            kind: Kind::Opaque,
            density: self.density.clone(),
            mass_form: self.mass_form.clone(),
            closed_tail: None,
            closed_moment: None,
            cfg: self.cfg,
            tail_cache: Mutex::new(HashMap::new()),
            moment_cache: Mutex::new(HashMap::new()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(spec: WeightSpec) -> RadialWeight {
        make_weight(&spec).unwrap()
    }

    fn constant() -> RadialWeight {
        w(WeightSpec::Constant { level: 1.0 })
    }

    fn power(alpha: f64) -> RadialWeight {
        w(WeightSpec::Power { alpha })
    }

    fn v(alpha: f64) -> RadialWeight {
        w(WeightSpec::LogPower { alpha })
    }

    #[test]
    fn constant_tail() {
        assert!((constant().tail(Radius::from_r(0.3)).unwrap() - 0.7).abs() < 1e-14);
        // power alpha=1 tail (1-r)^2/2
        assert!((power(1.0).tail(Radius::from_r(0.5)).unwrap() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn log_power_tail_closed_and_quadrature() {
        // v_2 tail is 1/log(e/(1-r)); at r = 1 - 1/e that is 1/2
        let v2 = v(2.0);
        let p = Radius::from_gap(1.0 / std::f64::consts::E);
        assert!((v2.tail(p).unwrap() - 0.5).abs() < 1e-12);
        let q = v2.quadrature_only();
        assert!((q.tail(p).unwrap() - 0.5).abs() < 1e-8);
        // v_3 tail: L^{-2}/2
        let v3 = v(3.0);
        let t = v3.tail(Radius::from_r(0.9)).unwrap();
        let l = Radius::from_r(0.9).log_scale();
        assert!((t - 0.5 / (l * l)).abs() < 1e-12);
        assert!((v3.quadrature_only().tail(Radius::from_r(0.9)).unwrap() - t).abs() < 1e-8);
    }

    #[test]
    fn moments() {
        assert!((constant().moment(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        // power alpha=1, x=1: B(2,2) = 1/6
        assert!((power(1.0).moment(1.0).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        // v_3 moment at x=10 comparable to tail at 1 - 1/10
        let v3 = v(3.0);
        let m = v3.moment(10.0).unwrap();
        let t = v3.tail(Radius::from_r(0.9)).unwrap();
        assert!(m > t / 4.0 && m < 4.0 * t, "moment {m} tail {t}");
    }

    #[test]
    fn moment_closed_vs_quadrature() {
        for alpha in [0.0, 1.0, 2.0] {
            let pw = power(alpha);
            let q = pw.quadrature_only();
            for x in [0.0, 1.0, 7.5, 100.0, 1e4, 1e8] {
                let a = pw.moment(x).unwrap();
                let b = q.moment(x).unwrap();
                assert!(
                    (a - b).abs() <= 1e-7 * a.abs(),
                    "alpha {alpha} x {x}: {a:e} vs {b:e}"
                );
            }
        }
    }

    #[test]
    fn tail_decreasing_and_consistent() {
        for wt in [constant(), power(2.0), v(3.0)] {
            let mass = wt.tail(Radius::ZERO).unwrap();
            assert!((mass - wt.moment(0.0).unwrap()).abs() < 1e-9 * mass);
            let mut prev = f64::INFINITY;
            for j in 1..20 {
                let t = wt.tail(Radius::from_gap(2f64.powi(-j))).unwrap();
                assert!(t < prev && t > 0.0);
                prev = t;
            }
            // moments decrease in x
            assert!(wt.moment(1.0).unwrap() > wt.moment(2.0).unwrap());
            assert!(wt.moment(2.0).unwrap() <= mass);
        }
    }

    #[test]
    fn modify_composes() {
        // constant modified by 1 is the power weight alpha=1
        let m = constant().modify(1.0).unwrap();
        assert!((m.moment(1.0).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        // power alpha=1 modified by 2: moment(0) = B(1,4) = 1/4
        let m = power(1.0).modify(2.0).unwrap();
        assert!((m.moment(0.0).unwrap() - 0.25).abs() < 1e-14);
        // v_2 modified by -1 is not even a weight
        assert!(matches!(v(2.0).modify(-1.0), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn tilde_composes() {
        // constant: tilde is the constant itself
        let t = constant().tilde().unwrap();
        for r in [0.0, 0.5, 0.9] {
            assert!((t.eval(Radius::from_r(r)) - 1.0).abs() < 1e-14);
        }
        // power alpha=1: tilde(r) = (1-r)/2
        let t = power(1.0).tilde().unwrap();
        assert!((t.eval(Radius::from_r(0.5)) - 0.25).abs() < 1e-14);
        // v_2: tail quotient not integrable
        assert!(matches!(v(2.0).tilde(), Err(Error::NonIntegrable(_))));
        // v_3: tilde is v_2 / 2
        let t = v(3.0).tilde().unwrap();
        let p = Radius::from_r(0.7);
        assert!((t.eval(p) - 0.5 * v(2.0).eval(p)).abs() < 1e-12);
    }

    #[test]
    fn hat_weight_kinds() {
        // hat of constant is 1-r
        let h = constant().hat_weight().unwrap();
        assert!((h.eval(Radius::from_r(0.25)) - 0.75).abs() < 1e-14);
        // hat of v_2 is 1/L, bounded; tail by quadrature
        let h = v(2.0).hat_weight().unwrap();
        assert!((h.eval(Radius::ZERO) - 1.0).abs() < 1e-14);
        let t = h.tail(Radius::from_r(0.5)).unwrap();
        assert!(t > 0.0 && t < 0.5);
    }

    #[test]
    fn star_transform() {
        let c = constant();
        // closed form for the unit weight: (r^2-1)/4 - log(r)/2
        let p = Radius::from_r(0.5);
        let expect = (0.25 - 1.0) / 4.0 - 0.5f64.ln() / 2.0;
        assert!((c.star(p).unwrap() - expect).abs() < 1e-10);
        let deep = c.star(Radius::from_r(0.9)).unwrap();
        assert!(deep > 0.0 && deep < c.star(p).unwrap());
        assert!(c.star(Radius::from_gap(1e-9)).unwrap() < 1e-8);
    }

    #[test]
    fn exponential_weight() {
        let e = w(WeightSpec::Exponential { c: 1.0 });
        let mass = e.tail(Radius::ZERO).unwrap();
        assert!(mass > 0.0 && mass < 1.0);
        // deep tails underflow to zero rather than erroring
        assert_eq!(e.eval(Radius::from_gap(1e-4)), 0.0);
        // moments decay like exp(-2 sqrt(x))
        let m100 = e.moment(100.0).unwrap();
        assert!(m100 > 0.0 && m100 < (-15.0f64).exp());
    }

    #[test]
    fn tabulated_weight() {
        // samples of the power weight alpha=1; log-linear in 1-r is exact
        let samples: Vec<(f64, f64)> =
            (0..20).map(|j| {
                let r = 1.0 - 2f64.powi(-j);
                (r, 2f64.powi(-j))
            }).collect();
        let t = w(WeightSpec::Tabulated { samples });
        assert!((t.eval(Radius::from_r(0.75)) - 0.25).abs() < 1e-12);
        let m = t.tail(Radius::ZERO).unwrap();
        assert!((m - 0.5).abs() < 1e-6, "mass {m}");
        // non-integrable tabulation rejected
        let bad: Vec<(f64, f64)> =
            (0..20).map(|j| {
                let gap = 2f64.powi(-j);
                (1.0 - gap, 1.0 / (gap * gap))
            }).collect();
        assert!(make_weight(&WeightSpec::Tabulated { samples: bad }).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_weight(&WeightSpec::Power { alpha: -1.0 }).is_err());
        assert!(make_weight(&WeightSpec::LogPower { alpha: 1.0 }).is_err());
        assert!(make_weight(&WeightSpec::Exponential { c: 0.0 }).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = WeightSpec::Derived {
            base: Box::new(WeightSpec::Power { alpha: 1.5 }),
            transform: Transform::Modify(-0.5),
        };
        let s = spec.to_json_string();
        let back: WeightSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(spec, back);
        assert_eq!(
            WeightSpec::parse("v_alpha:2").unwrap(),
            WeightSpec::LogPower { alpha: 2.0 }
        );
        assert_eq!(
            WeightSpec::parse(r#"{"family":"power","params":[1.0]}"#).unwrap(),
            WeightSpec::Power { alpha: 1.0 }
        );
    }

    #[test]
    fn integration_by_parts_identity_spot() {
        // (w_[q-1])_{x+1} = (x+1)(hat w_[q-1])_x - (q-1)(hat w_[q-2])_{x+1}
        let base = power(1.0);
        let (q, x) = (2.5, 3.0);
        let lhs = base.modify(q - 1.0).unwrap().moment(x + 1.0).unwrap();
        let hat = base.hat_weight().unwrap();
        let rhs = (x + 1.0) * hat.modify(q - 1.0).unwrap().moment(x).unwrap()
            - (q - 1.0) * hat.modify(q - 2.0).unwrap().moment(x + 1.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs());
    }

    #[test]
    fn deep_log_power_moments_hold_relative_accuracy() {
        // v_3 moment by quadrature keeps the mass that lives beyond
        // representable gaps: w_x ~ 1/(2 (1+log x)^2) for large x
        let v3 = v(3.0);
        let x = 1e6;
        let m = v3.moment(x).unwrap();
        let approx = 0.5 / (1.0 + x.ln()).powi(2);
        assert!(m > 0.8 * approx && m < 1.3 * approx, "moment {m:e} vs {approx:e}");
    }
}
