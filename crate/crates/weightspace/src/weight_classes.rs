//! Grid estimators for the weight classes defined through tail doubling,
//! reverse tail doubling, and moment decay, together with their integral,
//! moment, and level-sequence characterizations.
//!
//! Membership in any of these classes quantifies over `r -> 1` or
//! `x -> infinity`, so no finite computation decides it. Each condition is
//! therefore reported as the extremal ratio over a grid, with the trend at
//! the deep end exposing drift toward failure, and the verdicts are
//! explicitly "on-grid".

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{
    bisect_decreasing, integrate_finite, integrate_improper, integrate_mass_range,
    integrate_mass_tail, QuadratureConfig, Radius,
};
use crate::weights::RadialWeight;

/// One inequality between two weight-derived quantities; parameters select
/// the member of the family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum ConditionId {
    /// `w_hat(r) <= C w_hat((1+r)/2)`
    DhatDef,
    /// `w_hat(r)/(1-r)^b <= C w_hat(t)/(1-t)^b` for `r <= t`
    DhatRatio { beta: f64 },
    /// `x^b (w_[b])_x <= C w_x`
    DhatMoment { beta: f64 },
    /// `w_x <= C w_{2x}`
    DhatDouble,
    /// `w_hat(r) >= C w_hat(1-(1-r)/K)`, `C > 1`
    DcheckDef { k: f64 },
    /// `w_hat(t)/(1-t)^b <= C w_hat(r)/(1-r)^b` for `r <= t`
    DcheckRatio { beta: f64 },
    /// `\int_0^r dt/(w_hat(t)^g (1-t)) <= C / w_hat(r)^g`
    DcheckInt { gamma: f64 },
    /// `1 - rho_n <= C (1 - rho_{n+1})` along the tail level sequence
    DcheckRho { k: f64 },
    /// `w_hat(r) <= C (w_[b])-tail(r) / (1-r)^b`
    DcheckBetaTail { beta: f64 },
    /// `\int_r^1 w_hat(t) b (1-t)^{b-1} dt / (1-r)^b <= C w_hat(r)`, `C < 1`
    DcheckBetaAvg { beta: f64 },
    /// `\int_r^1 w_hat(s)^g/(1-s) ds <= C w_hat(r)^g`
    DcheckGammaLog { gamma: f64 },
    /// `w_x >= C w_{Kx}`, `C > 1`
    MDef { k: f64 },
    /// `w_hat(t) <= C \int_0^t s^{1/(K(1-t))} w(s) ds` on `[1-1/K, 1)`
    MKernel { k: f64 },
    /// `w_x <= C x^b (w_[b])_x`
    MMoment { beta: f64 },
    /// `\int_x^inf w_y^g dy/y <= C w_x^g`
    MTailSum { gamma: f64 },
    /// `\int_x^inf w_y dy/y^{b+1} <= C w_x/x^b`
    MTailMoment { beta: f64 },
    /// `\int_{1-1/x}^1 (w-hat)_[b-1](t) dt <= C w_x/x^b`
    MTailInt { beta: f64 },
    /// `(hat w_[q-2])_x <= C (w_[q-1])_x`
    Thm3Moment { q: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// condition asserts `lhs <= C rhs`: report `sup lhs/rhs`, finite and
    /// stable means membership plausible
    Sup,
    /// condition asserts `lhs >= C rhs` with `C > 1`: report `inf lhs/rhs`,
    /// bounded away from 1 means membership plausible
    Inf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridDomain {
    Radial,
    Moment,
}

impl ConditionId {
    pub fn orientation(&self) -> Orientation {
        match self {
            ConditionId::DcheckDef { .. } | ConditionId::MDef { .. } => Orientation::Inf,
            _ => Orientation::Sup,
        }
    }

    pub fn domain(&self) -> GridDomain {
        match self {
            ConditionId::DhatMoment { .. }
            | ConditionId::DhatDouble
            | ConditionId::MDef { .. }
            | ConditionId::MMoment { .. }
            | ConditionId::MTailSum { .. }
            | ConditionId::MTailMoment { .. }
            | ConditionId::MTailInt { .. }
            | ConditionId::Thm3Moment { .. } => GridDomain::Moment,
            _ => GridDomain::Radial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ConditionId::DhatRatio { beta }
            | ConditionId::DhatMoment { beta }
            | ConditionId::DcheckRatio { beta }
            | ConditionId::DcheckBetaTail { beta }
            | ConditionId::DcheckBetaAvg { beta }
            | ConditionId::MMoment { beta } => beta > 0.0,
            | ConditionId::MTailMoment { beta } | ConditionId::MTailInt { beta } => beta >= 0.0,
            ConditionId::DcheckInt { gamma }
            | ConditionId::DcheckGammaLog { gamma }
            | ConditionId::MTailSum { gamma } => gamma > 0.0,
            ConditionId::DcheckDef { k } | ConditionId::DcheckRho { k }
            | ConditionId::MDef { k } | ConditionId::MKernel { k } => k > 1.0,
            ConditionId::Thm3Moment { q } => q >= 1.0,
            ConditionId::DhatDef | ConditionId::DhatDouble => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("parameter out of range in {self:?}")))
        }
    }

    pub fn label(&self) -> String {
        match self {
            ConditionId::DhatDef => "Dhat-def".into(),
            ConditionId::DhatRatio { beta } => format!("Dhat-ratio({beta})"),
            ConditionId::DhatMoment { beta } => format!("Dhat-moment({beta})"),
            ConditionId::DhatDouble => "Dhat-double".into(),
            ConditionId::DcheckDef { k } => format!("Dcheck-def({k})"),
            ConditionId::DcheckRatio { beta } => format!("Dcheck-ratio({beta})"),
            ConditionId::DcheckInt { gamma } => format!("Dcheck-int({gamma})"),
            ConditionId::DcheckRho { k } => format!("Dcheck-rho({k})"),
            ConditionId::DcheckBetaTail { beta } => format!("Dcheck-beta-tail({beta})"),
            ConditionId::DcheckBetaAvg { beta } => format!("Dcheck-beta-avg({beta})"),
            ConditionId::DcheckGammaLog { gamma } => format!("Dcheck-gamma-log({gamma})"),
            ConditionId::MDef { k } => format!("M-def({k})"),
            ConditionId::MKernel { k } => format!("M-kernel({k})"),
            ConditionId::MMoment { beta } => format!("M-moment({beta})"),
            ConditionId::MTailSum { gamma } => format!("M-tailsum({gamma})"),
            ConditionId::MTailMoment { beta } => format!("M-tailmoment({beta})"),
            ConditionId::MTailInt { beta } => format!("M-tailint({beta})"),
            ConditionId::Thm3Moment { q } => format!("Thm3-moment({q})"),
        }
    }
}

/// Evaluation grids: radial points and moment indices.
#[derive(Clone, Debug)]
pub struct Grids {
    pub radial: Vec<Radius>,
    pub moment: Vec<f64>,
}

impl Grids {
    /// Quarter-octave radial grid `1 - 2^{-j/4}` and a log-spaced moment
    /// grid. The radial grid runs far past `1 - 1e-8` (to gaps ~ 1e-32):
    /// points are carried through `u = -log(1-r)`, so closed-form tails stay
    /// exact there and slow log-scale trends become visible on-grid.
    pub fn default_grids() -> Grids {
        let radial = (0..=426).map(|j| Radius::from_u(j as f64 / 4.0 * std::f64::consts::LN_2)).collect();
        let count = 200;
        let moment = (0..count)
            .map(|i| 10f64.powf(8.0 * i as f64 / (count - 1) as f64))
            .collect();
        Grids { radial, moment }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnGrid,
    FailsOnGrid,
    Inconclusive,
}

/// Descriptor of the grid slice a condition ran on.
#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub kind: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

/// Extremal ratio of one condition over a grid, with trend diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct ClassConditionReport {
    pub condition: ConditionId,
    pub orientation: Orientation,
    pub grid: GridSummary,
    /// sup or inf of the ratio over the valid grid points
    pub best_constant: f64,
    /// grid point attaining it (`r` or `x`; block index for level ratios)
    pub witness: f64,
    /// ratios at the three deepest valid grid points
    pub trend: Vec<f64>,
    pub valid_points: usize,
    pub skipped_points: usize,
    /// points where the ratio overflowed (denominator underflow)
    pub blowups: usize,
    pub verdict: Verdict,
}

/// Ratio samples: `(coordinate, ratio)` per usable grid point.
struct Samples {
    kind: &'static str,
    points: Vec<(f64, f64)>,
    skipped: usize,
    blowups: usize,
    lo: f64,
    hi: f64,
}

fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

#[derive(Default)]
struct Collector {
    points: Vec<(f64, f64)>,
    skipped: usize,
    blowups: usize,
}

impl Collector {
    fn ratio(&mut self, coord: f64, lhs: f64, rhs: f64) {
        if finite_pos(lhs) && finite_pos(rhs) {
            self.points.push((coord, lhs / rhs));
        } else if finite_pos(lhs) && rhs == 0.0 {
            self.blowups += 1;
        } else {
            self.skipped += 1;
        }
    }

    fn point(&mut self, coord: f64, v: f64) {
        self.points.push((coord, v));
    }

    fn skip(&mut self, n: usize) {
        self.skipped += n;
    }

    fn blowup(&mut self, n: usize) {
        self.blowups += n;
    }
}

/// Evaluate one condition for a weight over the grids.
///
/// The weight is normalized by its total mass first, making every report
/// exactly invariant under scaling.
pub fn evaluate_condition(
    w: &RadialWeight,
    cond: ConditionId,
    grids: &Grids,
) -> Result<ClassConditionReport> {
    cond.validate()?;
    let mass = w.tail(Radius::ZERO)?;
    let w = w.scaled(1.0 / mass)?;
    let samples = collect_samples(&w, cond, grids)?;
    summarize(cond, samples)
}

fn collect_samples(w: &RadialWeight, cond: ConditionId, grids: &Grids) -> Result<Samples> {
    let cfg = *w.quadrature_config();
    let radial = &grids.radial;
    let moment = &grids.moment;
    if radial.is_empty() || moment.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let rlo = radial.first().unwrap().r;
    let rhi = radial.last().unwrap().r;
    let xlo = *moment.first().unwrap();
    let xhi = *moment.last().unwrap();
    let mut col = Collector::default();
    let tail_at = |p: Radius| w.tail(p).unwrap_or(f64::NAN);
    let moment_at = |x: f64| w.moment(x).unwrap_or(f64::NAN);
    let kind;
    match cond {
        ConditionId::DhatDef => {
            kind = "radial";
            for &p in radial {
                col.ratio(p.u, tail_at(p), tail_at(p.shrink_gap(2.0)));
            }
        }
        ConditionId::DcheckDef { k } => {
            kind = "radial";
            for &p in radial {
                col.ratio(p.u, tail_at(p), tail_at(p.shrink_gap(k)));
            }
        }
        ConditionId::DhatRatio { beta } | ConditionId::DcheckRatio { beta } => {
            kind = "radial-pairs";
            let tails: Vec<f64> = radial.iter().map(|&p| tail_at(p)).collect();
            let dcheck = matches!(cond, ConditionId::DcheckRatio { .. });
            // normalized quantity w_hat(r)/(1-r)^beta in log space
            let logq: Vec<f64> =
                radial.iter().zip(&tails).map(|(p, t)| t.ln() + beta * p.u).collect();
            for i in 0..radial.len() {
                if !finite_pos(tails[i]) {
                    col.skip(1);
                    continue;
                }
                // extreme over the deeper points j > i suffices for the sup
                let mut extreme = f64::NEG_INFINITY;
                let mut ok = false;
                for j in (i + 1)..radial.len() {
                    if !finite_pos(tails[j]) {
                        continue;
                    }
                    ok = true;
                    let d = if dcheck { logq[j] - logq[i] } else { logq[i] - logq[j] };
                    if d > extreme {
                        extreme = d;
                    }
                }
                if ok {
                    col.point(radial[i].u, extreme.exp());
                } else {
                    col.skip(1);
                }
            }
        }
        ConditionId::DhatMoment { beta } => {
            kind = "moment";
            let wb = w.modify(beta)?;
            for &x in moment {
                col.ratio(x, x.powf(beta) * wb.moment(x).unwrap_or(f64::NAN), moment_at(x));
            }
        }
        ConditionId::DhatDouble => {
            kind = "moment";
            for &x in moment {
                col.ratio(x, moment_at(x), moment_at(2.0 * x));
            }
        }
        ConditionId::MDef { k } => {
            kind = "moment";
            for &x in moment {
                col.ratio(x, moment_at(x), moment_at(k * x));
            }
        }
        ConditionId::MMoment { beta } => {
            kind = "moment";
            let wb = w.modify(beta)?;
            for &x in moment {
                col.ratio(x, moment_at(x), x.powf(beta) * wb.moment(x).unwrap_or(f64::NAN));
            }
        }
        ConditionId::DcheckInt { gamma } => {
            kind = "radial";
            // running integral \int_0^r dt/(w_hat^gamma (1-t)); mass form
            // cancels the 1/(1-t)
            let mut acc = 0.0;
            for i in 1..radial.len() {
                let seg = integrate_mass_range(
                    |p| tail_at(p).powf(-gamma),
                    radial[i - 1],
                    radial[i],
                    &cfg,
                );
                match seg {
                    Ok(q) => acc += q.value,
                    Err(_) => {
                        col.skip(1);
                        continue;
                    }
                }
                let t = tail_at(radial[i]);
                col.ratio(radial[i].u, acc * t.powf(gamma), 1.0);
            }
        }
        ConditionId::DcheckGammaLog { gamma } => {
            kind = "radial";
            // T(r) = \int_r^1 w_hat^gamma/(1-s) ds, accumulated inward from
            // the deepest grid point plus its improper tail
            let deepest = *radial.last().unwrap();
            let tail_piece =
                integrate_mass_tail(|p| tail_at(p).powf(gamma), deepest, 0.0, &cfg);
            match tail_piece {
                Ok(q) => {
                    let mut acc = vec![f64::NAN; radial.len()];
                    acc[radial.len() - 1] = q.value;
                    let mut ok = true;
                    for i in (0..radial.len() - 1).rev() {
                        match integrate_mass_range(
                            |p| tail_at(p).powf(gamma),
                            radial[i],
                            radial[i + 1],
                            &cfg,
                        ) {
                            Ok(seg) => acc[i] = acc[i + 1] + seg.value,
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        for (i, &p) in radial.iter().enumerate() {
                            col.ratio(p.u, acc[i], tail_at(p).powf(gamma));
                        }
                    } else {
                        col.skip(radial.len());
                    }
                }
                Err(_) => {
                    // the tail integral itself diverges: every ratio blows up
                    col.blowup(radial.len());
                }
            }
        }
        ConditionId::DcheckRho { k } => {
            kind = "level";
            let seq = rho_sequence(w, k, 40)?;
            for n in 0..seq.len() - 1 {
                col.ratio(n as f64, seq[n].gap, seq[n + 1].gap);
            }
        }
        ConditionId::DcheckBetaTail { beta } => {
            kind = "radial";
            let wb = w.modify(beta)?;
            for &p in radial {
                let mt = wb.tail(p).unwrap_or(f64::NAN);
                col.ratio(p.u, tail_at(p) * (-beta * p.u).exp(), mt);
            }
        }
        ConditionId::DcheckBetaAvg { beta } => {
            kind = "radial";
            // \int_r^1 w_hat(t) beta (1-t)^{b-1} dt, accumulated inward; the
            // integrand decays exponentially in u so the improper piece from
            // the deepest point is cheap
            let deepest = *radial.last().unwrap();
            let elem = |p: Radius| beta * tail_at(p) * (-(beta - 1.0) * p.u).exp();
            let tail_piece = integrate_mass_tail(elem, deepest, 0.0, &cfg);
            if let Ok(q) = tail_piece {
                let mut acc = vec![f64::NAN; radial.len()];
                acc[radial.len() - 1] = q.value;
                for i in (0..radial.len() - 1).rev() {
                    match integrate_mass_range(elem, radial[i], radial[i + 1], &cfg) {
                        Ok(seg) => acc[i] = acc[i + 1] + seg.value,
                        Err(_) => break,
                    }
                }
                for (i, &p) in radial.iter().enumerate() {
                    if acc[i].is_nan() {
                        col.skip(1);
                        continue;
                    }
                    col.ratio(p.u, acc[i] * (beta * p.u).exp(), tail_at(p));
                }
            } else {
                col.skip(radial.len());
            }
        }
        ConditionId::MKernel { k } => {
            kind = "radial";
            for &p in radial {
                if p.gap > 1.0 / k {
                    continue; // outside the condition's domain
                }
                let y = 1.0 / (k * p.gap);
                if !y.is_finite() {
                    col.skip(1);
                    continue;
                }
                let kernel = integrate_mass_range(
                    |s| s.pow(y) * w.mass(s),
                    Radius::ZERO,
                    p,
                    &cfg,
                );
                match kernel {
                    Ok(q) => col.ratio(p.u, tail_at(p), q.value),
                    Err(_) => col.skip(1),
                }
            }
        }
        ConditionId::MTailSum { gamma } => {
            kind = "moment";
            // \int_x^inf w_y^gamma dy/y = \int_{log x}^inf w_{e^t}^gamma dt
            let phi = |t: f64| moment_at(t.exp()).powf(gamma);
            let rhs = |x: f64| moment_at(x).powf(gamma);
            moment_tail_ratios(&phi, &rhs, moment, &cfg, &mut col);
        }
        ConditionId::MTailMoment { beta } => {
            kind = "moment";
            let phi = |t: f64| moment_at(t.exp()) * (-beta * t).exp();
            let rhs = |x: f64| moment_at(x) / x.powf(beta);
            moment_tail_ratios(&phi, &rhs, moment, &cfg, &mut col);
        }
        ConditionId::MTailInt { beta } => {
            kind = "moment";
            let hat = w.hat_weight()?;
            let hat_mod = hat.modify(beta - 1.0)?;
            for &x in moment {
                let from = Radius::from_gap((1.0 / x).min(1.0));
                let lhs = hat_mod.tail(from).unwrap_or(f64::NAN);
                col.ratio(x, lhs, moment_at(x) / x.powf(beta));
            }
        }
        ConditionId::Thm3Moment { q } => {
            kind = "moment";
            let hat_mod = w.hat_weight()?.modify(q - 2.0)?;
            let w_mod = w.modify(q - 1.0)?;
            for &x in moment {
                col.ratio(
                    x,
                    hat_mod.moment(x).unwrap_or(f64::NAN),
                    w_mod.moment(x).unwrap_or(f64::NAN),
                );
            }
        }
    }
    let (lo, hi) = match cond.domain() {
        GridDomain::Radial => (rlo, rhi),
        GridDomain::Moment => (xlo, xhi),
    };
    Ok(Samples { kind, points: col.points, skipped: col.skipped, blowups: col.blowups, lo, hi })
}

/// Accumulate `(x, \int_x^inf phi(log y) d log y / rhs(x))` over the moment
/// grid: one improper integral from the deepest point, then finite segments
/// marching outward.
fn moment_tail_ratios(
    phi: &impl Fn(f64) -> f64,
    rhs: &impl Fn(f64) -> f64,
    moment: &[f64],
    cfg: &QuadratureConfig,
    col: &mut Collector,
) {
    let deepest = moment[moment.len() - 1].ln();
    let tail_piece = match integrate_improper(phi, deepest, 0.0, cfg) {
        Ok(q) => q.value,
        Err(_) => {
            col.blowup(moment.len());
            return;
        }
    };
    let mut acc = vec![f64::NAN; moment.len()];
    acc[moment.len() - 1] = tail_piece;
    for i in (0..moment.len() - 1).rev() {
        match integrate_finite(phi, moment[i].ln(), moment[i + 1].ln(), cfg) {
            Ok(seg) => acc[i] = acc[i + 1] + seg.value,
            Err(_) => {
                col.skip(moment.len());
                return;
            }
        }
    }
    for (i, &x) in moment.iter().enumerate() {
        col.ratio(x, acc[i], rhs(x));
    }
}

fn summarize(cond: ConditionId, s: Samples) -> Result<ClassConditionReport> {
    let orientation = cond.orientation();
    let n = s.points.len();
    let grid = GridSummary { kind: s.kind.to_string(), lo: s.lo, hi: s.hi, points: n };
    if n == 0 {
        let verdict = if s.blowups > 0 { Verdict::FailsOnGrid } else { Verdict::Inconclusive };
        return Ok(ClassConditionReport {
            condition: cond,
            orientation,
            grid,
            best_constant: f64::NAN,
            witness: f64::NAN,
            trend: vec![],
            valid_points: 0,
            skipped_points: s.skipped,
            blowups: s.blowups,
            verdict,
        });
    }
    // extremum with ties toward the smaller coordinate
    let mut best_idx = 0;
    for i in 1..n {
        let better = match orientation {
            Orientation::Sup => s.points[i].1 > s.points[best_idx].1,
            Orientation::Inf => s.points[i].1 < s.points[best_idx].1,
        };
        if better {
            best_idx = i;
        }
    }
    let (witness, best_constant) = s.points[best_idx];
    let trend: Vec<f64> = s.points[n.saturating_sub(3)..].iter().map(|&(_, v)| v).collect();
    // thirds of the grid, extremal ratio within each, for drift detection
    let third = (n / 3).max(1);
    let chunk_extreme = |range: std::ops::Range<usize>| -> f64 {
        let it = s.points[range].iter().map(|&(_, v)| v);
        match orientation {
            Orientation::Sup => it.fold(f64::NEG_INFINITY, f64::max),
            Orientation::Inf => it.fold(f64::INFINITY, f64::min),
        }
    };
    let s1 = chunk_extreme(0..third);
    let s2 = chunk_extreme(third..(2 * third).min(n));
    let s3 = chunk_extreme((2 * third).min(n)..n);
    let enough = n >= 9;
    let verdict = match orientation {
        Orientation::Sup => {
            let growing = s3 > 1.1 * s2 && s2 > 1.1 * s1;
            let near_one_cap = matches!(cond, ConditionId::DcheckBetaAvg { .. });
            if s.blowups > 0 || growing || (near_one_cap && s3 > 0.98) {
                Verdict::FailsOnGrid
            } else if !enough {
                Verdict::Inconclusive
            } else if s3 <= 1.02 * s1.max(s2) || (near_one_cap && s3 < 0.98) {
                Verdict::HoldsOnGrid
            } else {
                Verdict::Inconclusive
            }
        }
        Orientation::Inf => {
            let decreasing_to_one = trend.len() >= 2
                && trend.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
                && *trend.last().unwrap() <= 1.05;
            if best_constant <= 1.01 || decreasing_to_one {
                Verdict::FailsOnGrid
            } else if !enough {
                Verdict::Inconclusive
            } else if best_constant > 1.05 {
                Verdict::HoldsOnGrid
            } else {
                Verdict::Inconclusive
            }
        }
    };
    Ok(ClassConditionReport {
        condition: cond,
        orientation,
        grid,
        best_constant,
        witness,
        trend,
        valid_points: n,
        skipped_points: s.skipped,
        blowups: s.blowups,
        verdict,
    })
}

/// Radii `rho_n` solving `w_hat(rho_n) = w_hat(0) K^{-n}`, `rho_0 = 0`.
pub fn rho_sequence(w: &RadialWeight, k: f64, count: usize) -> Result<Vec<Radius>> {
    if !(k > 1.0) {
        return Err(Error::Invalid("level ratio K must exceed 1".into()));
    }
    if count < 1 {
        return Err(Error::Invalid("level count must be at least 1".into()));
    }
    let mass = w.tail(Radius::ZERO)?;
    let mut seq = vec![Radius::ZERO];
    for n in 1..=count {
        let target = mass * k.powi(-(n as i32));
        if target < 1e-280 {
            break;
        }
        let prev = seq[n - 1].u;
        let root = bisect_decreasing(
            |p| w.tail(p).unwrap_or(f64::NAN),
            target,
            (2.0 * prev).max(4.0),
        )?;
        if root.u < prev - 1e-12 {
            return Err(Error::Bisection(
                "tail levels not monotone; the weight looks corrupted".into(),
            ));
        }
        seq.push(root);
    }
    Ok(seq)
}

/// Per-class verdicts with the underlying condition reports.
#[derive(Clone, Debug, Serialize)]
pub struct ClassVerdict {
    pub class: String,
    pub verdict: Verdict,
    pub reports: Vec<ClassConditionReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub weight: String,
    pub doubling_tail: ClassVerdict,
    pub reverse_tail: ClassVerdict,
    pub moment_decay: ClassVerdict,
    pub intersection: ClassVerdict,
    pub consistency: Vec<String>,
}

/// Run the defining condition of each class plus two characterizations and
/// combine into per-class on-grid verdicts. The intersection verdict is the
/// conjunction of the tail verdicts, cross-checked against moment decay.
pub fn classify(w: &RadialWeight, grids: &Grids) -> Result<Classification> {
    let run = |cond: ConditionId| evaluate_condition(w, cond, grids);

    let dhat_reports = vec![
        run(ConditionId::DhatDef)?,
        run(ConditionId::DhatDouble)?,
        run(ConditionId::DhatMoment { beta: 1.0 })?,
    ];
    let dcheck_reports = vec![
        run(ConditionId::DcheckDef { k: 2.0 })?,
        run(ConditionId::DcheckRho { k: 2.0 })?,
        run(ConditionId::DcheckBetaAvg { beta: 1.0 })?,
    ];
    let m_reports = vec![
        run(ConditionId::MDef { k: 2.0 })?,
        run(ConditionId::MMoment { beta: 1.0 })?,
        run(ConditionId::MTailSum { gamma: 1.0 })?,
    ];

    let dhat = class_verdict("doubling-tail", dhat_reports);
    let dcheck = class_verdict("reverse-tail", dcheck_reports);
    let m = class_verdict("moment-decay", m_reports);

    let inter_verdict = match (dhat.verdict, dcheck.verdict) {
        (Verdict::HoldsOnGrid, Verdict::HoldsOnGrid) => Verdict::HoldsOnGrid,
        (Verdict::FailsOnGrid, _) | (_, Verdict::FailsOnGrid) => Verdict::FailsOnGrid,
        _ => Verdict::Inconclusive,
    };
    let mut consistency = Vec::new();
    if dhat.verdict == Verdict::HoldsOnGrid
        && dcheck.verdict != Verdict::Inconclusive
        && m.verdict != Verdict::Inconclusive
        && dcheck.verdict != m.verdict
    {
        consistency.push(format!(
            "doubling tail holds but reverse-tail ({:?}) and moment-decay ({:?}) disagree; \
             on-grid artifact, deepen the grids",
            dcheck.verdict, m.verdict
        ));
    }
    Ok(Classification {
        weight: w.label().to_string(),
        doubling_tail: dhat,
        reverse_tail: dcheck,
        moment_decay: m,
        intersection: ClassVerdict {
            class: "intersection".into(),
            verdict: inter_verdict,
            reports: vec![],
        },
        consistency,
    })
}

/// The defining condition decides; characterizations can only demote a hold
/// to inconclusive when they disagree loudly.
fn class_verdict(class: &str, reports: Vec<ClassConditionReport>) -> ClassVerdict {
    let defining = reports[0].verdict;
    let dissent = reports[1..]
        .iter()
        .filter(|r| r.verdict != Verdict::Inconclusive && r.verdict != defining)
        .count();
    let verdict = match defining {
        Verdict::HoldsOnGrid if dissent >= 2 => Verdict::Inconclusive,
        v => v,
    };
    ClassVerdict { class: class.to_string(), verdict, reports }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{make_weight, WeightSpec};

    fn grids() -> Grids {
        Grids::default_grids()
    }

    fn constant() -> RadialWeight {
        make_weight(&WeightSpec::Constant { level: 1.0 }).unwrap()
    }

    fn power(alpha: f64) -> RadialWeight {
        make_weight(&WeightSpec::Power { alpha }).unwrap()
    }

    fn v(alpha: f64) -> RadialWeight {
        make_weight(&WeightSpec::LogPower { alpha }).unwrap()
    }

    fn exponential() -> RadialWeight {
        make_weight(&WeightSpec::Exponential { c: 1.0 }).unwrap()
    }

    #[test]
    fn doubling_constant_for_simple_weights() {
        let r = evaluate_condition(&constant(), ConditionId::DhatDef, &grids()).unwrap();
        assert!((r.best_constant - 2.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::HoldsOnGrid);

        let r = evaluate_condition(&power(1.0), ConditionId::DhatDef, &grids()).unwrap();
        assert!((r.best_constant - 4.0).abs() < 1e-12);
    }

    #[test]
    fn moment_ratio_saturates_for_unit_weight() {
        // sup x (w_[1])_x / w_x = sup x/(x+2) -> 1, attained in the limit
        let r =
            evaluate_condition(&constant(), ConditionId::DhatMoment { beta: 1.0 }, &grids())
                .unwrap();
        assert!(r.best_constant < 1.0 && r.best_constant > 0.999);
        assert_eq!(r.verdict, Verdict::HoldsOnGrid);
    }

    #[test]
    fn reverse_tail_ratio_of_v2_drifts_to_one() {
        // ratio (L + log 2)/L with L = log(e/(1-r))
        let r = evaluate_condition(&v(2.0), ConditionId::DcheckDef { k: 2.0 }, &grids()).unwrap();
        let deepest = grids().radial.last().unwrap().log_scale();
        let expect = 1.0 + 2f64.ln() / deepest;
        assert!(
            (r.best_constant - expect).abs() < 1e-9,
            "inf {} expect {expect}",
            r.best_constant
        );
        assert_eq!(r.verdict, Verdict::FailsOnGrid);
        // trend decreasing toward 1
        assert!(r.trend.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn unit_weight_moment_decay_witness() {
        // inf w_x / w_{2x} = (2x+1)/(x+1) at x = 1, increasing
        let r = evaluate_condition(&constant(), ConditionId::MDef { k: 2.0 }, &grids()).unwrap();
        assert!((r.best_constant - 1.5).abs() < 1e-9);
        assert!((r.witness - 1.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::HoldsOnGrid);
    }

    #[test]
    fn level_sequences() {
        // unit weight, K=2: 1 - rho_n = 2^{-n}
        let seq = rho_sequence(&constant(), 2.0, 3).unwrap();
        let gaps: Vec<f64> = seq.iter().map(|p| p.gap).collect();
        for (n, g) in gaps.iter().enumerate() {
            assert!((g - 2f64.powi(-(n as i32))).abs() < 1e-12);
        }
        // power alpha=1, K=4: same radii
        let seq = rho_sequence(&power(1.0), 4.0, 2).unwrap();
        assert!((seq[1].r - 0.5).abs() < 1e-12);
        assert!((seq[2].r - 0.75).abs() < 1e-12);
        // v_2, K=e: log(e/(1-rho_n)) = e^n
        let seq = rho_sequence(&v(2.0), std::f64::consts::E, 2).unwrap();
        assert!((seq[1].gap - (1.0 - std::f64::consts::E).exp()).abs() < 1e-9);
        assert!(
            (seq[2].gap - (1.0 - std::f64::consts::E.powi(2)).exp()).abs() < 1e-9
        );
    }

    #[test]
    fn level_ratios_constant_for_power_weights() {
        // unit weight: gap ratio exactly K; power alpha=1 at K: K^{1/2}
        let r = evaluate_condition(&constant(), ConditionId::DcheckRho { k: 2.0 }, &grids())
            .unwrap();
        assert!((r.best_constant - 2.0).abs() < 1e-9);
        let r = evaluate_condition(&power(1.0), ConditionId::DcheckRho { k: 2.0 }, &grids())
            .unwrap();
        assert!((r.best_constant - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn classify_standard_weights() {
        let c = classify(&constant(), &grids()).unwrap();
        assert_eq!(c.doubling_tail.verdict, Verdict::HoldsOnGrid);
        assert_eq!(c.reverse_tail.verdict, Verdict::HoldsOnGrid);
        assert_eq!(c.moment_decay.verdict, Verdict::HoldsOnGrid);
        assert_eq!(c.intersection.verdict, Verdict::HoldsOnGrid);

        let c = classify(&v(2.0), &grids()).unwrap();
        assert_eq!(c.doubling_tail.verdict, Verdict::HoldsOnGrid);
        assert_eq!(c.reverse_tail.verdict, Verdict::FailsOnGrid);
        assert_eq!(c.intersection.verdict, Verdict::FailsOnGrid);

        let c = classify(&exponential(), &grids()).unwrap();
        assert_eq!(c.doubling_tail.verdict, Verdict::FailsOnGrid);
        assert_eq!(c.moment_decay.verdict, Verdict::HoldsOnGrid);
    }

    #[test]
    fn scale_invariance_of_reports() {
        let w = v(3.0);
        let scaled = w.scaled(3.7e5).unwrap();
        for cond in [
            ConditionId::DhatDef,
            ConditionId::DcheckDef { k: 2.0 },
            ConditionId::MDef { k: 2.0 },
        ] {
            let a = evaluate_condition(&w, cond, &grids()).unwrap();
            let b = evaluate_condition(&scaled, cond, &grids()).unwrap();
            assert!(
                (a.best_constant - b.best_constant).abs() <= 1e-12 * a.best_constant,
                "{cond:?}: {} vs {}",
                a.best_constant,
                b.best_constant
            );
        }
    }

    #[test]
    fn doubling_and_ratio_agree_for_v3() {
        // both characterizations finite and stable together
        let a = evaluate_condition(&v(3.0), ConditionId::DhatDef, &grids()).unwrap();
        let b =
            evaluate_condition(&v(3.0), ConditionId::DhatRatio { beta: 1.0 }, &grids()).unwrap();
        assert_eq!(a.verdict, Verdict::HoldsOnGrid);
        assert_eq!(b.verdict, Verdict::HoldsOnGrid);
        assert!(a.best_constant >= 1.0 && b.best_constant >= 1.0);
    }

    #[test]
    fn gamma_log_detects_both_sides() {
        // v_2 at gamma=1: \int L^{-1} dL diverges
        let r = evaluate_condition(&v(2.0), ConditionId::DcheckGammaLog { gamma: 1.0 }, &grids())
            .unwrap();
        assert_eq!(r.verdict, Verdict::FailsOnGrid);
        // power weights: exponentially decaying integrand, holds
        let r =
            evaluate_condition(&power(1.0), ConditionId::DcheckGammaLog { gamma: 1.0 }, &grids())
                .unwrap();
        assert_eq!(r.verdict, Verdict::HoldsOnGrid);
    }

    #[test]
    fn thm3_moment_ratio_for_powers_is_flat() {
        // (hat w_[q-2])_x / (w_[q-1])_x = 1/(alpha+1) exactly for powers
        let r = evaluate_condition(&power(2.0), ConditionId::Thm3Moment { q: 2.0 }, &grids())
            .unwrap();
        assert!((r.best_constant - 1.0 / 3.0).abs() < 1e-9, "got {}", r.best_constant);
        assert_eq!(r.verdict, Verdict::HoldsOnGrid);
    }
}
