//! Experiment runner: turns each comparability statement into a measured
//! two-sided bracket over a family of (function, weight, p, q) tuples, and
//! each divergence counterexample into a truncation sweep whose ratio trend
//! is the verdict.
//!
//! Comparability is operationalized as the observed `[min, max]` of the
//! ratio of the two sides; the runner never declares pass or fail, it only
//! measures. Acceptance thresholds live in the test suite.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{
    bergman_norm, bergman_norm_partial, coeff_functional, dirichlet_norm, h_class_norm,
    i_functional, j_functional, s_class_norm, CoeffVariant,
};
use crate::functions::{make_function, AnalyticFunction, FunctionSpec};
use crate::quadrature::QuadratureConfig;
use crate::weight_classes::{evaluate_condition, ConditionId, Grids, Verdict};
use crate::weights::{make_weight_cfg, RadialWeight, WeightSpec};

/// The comparability experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentId {
    T1,
    T2,
    T3,
    T4i,
    T4ii,
    T5,
    T6,
    T7,
    P61,
    L64,
    L65,
    L73,
    P75,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 13] = [
        ExperimentId::T1,
        ExperimentId::T2,
        ExperimentId::T3,
        ExperimentId::T4i,
        ExperimentId::T4ii,
        ExperimentId::T5,
        ExperimentId::T6,
        ExperimentId::T7,
        ExperimentId::P61,
        ExperimentId::L64,
        ExperimentId::L65,
        ExperimentId::L73,
        ExperimentId::P75,
    ];

    pub fn parse(text: &str) -> Result<ExperimentId> {
        Ok(match text.trim() {
            "T1" | "t1" => ExperimentId::T1,
            "T2" | "t2" => ExperimentId::T2,
            "T3" | "t3" => ExperimentId::T3,
            "T4i" | "t4i" => ExperimentId::T4i,
            "T4ii" | "t4ii" => ExperimentId::T4ii,
            "T5" | "t5" => ExperimentId::T5,
            "T6" | "t6" => ExperimentId::T6,
            "T7" | "t7" => ExperimentId::T7,
            "P6.1" | "p6.1" => ExperimentId::P61,
            "L6.4" | "l6.4" => ExperimentId::L64,
            "L6.5" | "l6.5" => ExperimentId::L65,
            "L7.3" | "l7.3" => ExperimentId::L73,
            "P7.5" | "p7.5" => ExperimentId::P75,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown experiment `{other}` (expected one of T1 T2 T3 T4i T4ii T5 T6 T7 \
                     P6.1 L6.4 L6.5 L7.3 P7.5)"
                )))
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ExperimentId::T1 => "T1",
            ExperimentId::T2 => "T2",
            ExperimentId::T3 => "T3",
            ExperimentId::T4i => "T4i",
            ExperimentId::T4ii => "T4ii",
            ExperimentId::T5 => "T5",
            ExperimentId::T6 => "T6",
            ExperimentId::T7 => "T7",
            ExperimentId::P61 => "P6.1",
            ExperimentId::L64 => "L6.4",
            ExperimentId::L65 => "L6.5",
            ExperimentId::L73 => "L7.3",
            ExperimentId::P75 => "P7.5",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentId::T1 => "Bergman norm against the tail-modified weight dominates",
            ExperimentId::T2 => "two-sided Bergman comparison under the class hypotheses",
            ExperimentId::T3 => "p=2 Bergman comparison and the moment condition behind it",
            ExperimentId::T4i => "Laplacian norm below the Dirichlet seminorm (p < 2)",
            ExperimentId::T4ii => "Dirichlet seminorm below the Laplacian norm (p > 2)",
            ExperimentId::T5 => "Laplacian and area norms against the maximum-modulus functional",
            ExperimentId::T6 => "Dirichlet norms and the mean functional against the maximum-modulus functional",
            ExperimentId::T7 => "maximum-modulus functional against the coefficient sum",
            ExperimentId::P61 => "maximum-modulus functional below weighted Dirichlet seminorms",
            ExperimentId::L64 => "area norm against the Laplacian norm, both directions",
            ExperimentId::L65 => "even-moment coefficient sum against the area norm",
            ExperimentId::L73 => "maximum-modulus functional below the coefficient sum",
            ExperimentId::P75 => "coefficient sum against the tail-weighted Dirichlet seminorm",
        }
    }
}

/// Family configuration; `None` fields fall back to the experiment default.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ExperimentConfig {
    pub functions: Vec<FunctionSpec>,
    pub weights: Vec<WeightSpec>,
    pub ps: Vec<f64>,
    pub qs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

fn default_functions() -> Vec<FunctionSpec> {
    vec![
        FunctionSpec::Monomial { n: 1 },
        FunctionSpec::Monomial { n: 2 },
        FunctionSpec::Monomial { n: 4 },
        FunctionSpec::Monomial { n: 8 },
        FunctionSpec::LogMap,
        FunctionSpec::Koebe,
    ]
}

fn univalent_functions() -> Vec<FunctionSpec> {
    vec![FunctionSpec::Monomial { n: 1 }, FunctionSpec::LogMap, FunctionSpec::Koebe]
}

fn default_weights() -> Vec<WeightSpec> {
    vec![
        WeightSpec::Constant { level: 1.0 },
        WeightSpec::Power { alpha: 1.0 },
        WeightSpec::Power { alpha: 2.0 },
        WeightSpec::LogPower { alpha: 3.0 },
    ]
}

fn intersection_weights() -> Vec<WeightSpec> {
    vec![
        WeightSpec::Constant { level: 1.0 },
        WeightSpec::Power { alpha: 1.0 },
        WeightSpec::Power { alpha: 2.0 },
    ]
}

/// Default family per experiment, honoring its hypotheses.
pub fn default_config(id: ExperimentId) -> ExperimentConfig {
    let (functions, weights, ps, qs): (Vec<_>, Vec<_>, Vec<f64>, Vec<f64>) = match id {
        ExperimentId::T1 => (default_functions(), default_weights(), vec![1.0, 2.0], vec![0.5, 2.0, 3.0]),
        ExperimentId::T2 => (default_functions(), default_weights(), vec![1.0, 2.0], vec![0.5, 2.0, 3.0]),
        ExperimentId::T3 => (default_functions(), intersection_weights(), vec![2.0], vec![1.0, 2.0, 3.0]),
        ExperimentId::T4i => (default_functions(), default_weights(), vec![1.0, 1.5], vec![]),
        ExperimentId::T4ii => (default_functions(), default_weights(), vec![3.0, 4.0], vec![]),
        ExperimentId::T5 => (univalent_functions(), intersection_weights(), vec![0.5, 1.0, 2.0, 3.0], vec![]),
        ExperimentId::T6 => (univalent_functions(), intersection_weights(), vec![2.0, 3.0], vec![2.0, 3.0]),
        ExperimentId::T7 => (univalent_functions(), intersection_weights(), vec![1.0, 1.5, 2.0], vec![]),
        ExperimentId::P61 => (univalent_functions(), intersection_weights(), vec![0.5, 1.0, 2.0, 3.0], vec![]),
        ExperimentId::L64 => (default_functions(), intersection_weights(), vec![0.5, 1.0, 3.0, 4.0], vec![]),
        ExperimentId::L65 => (default_functions(), intersection_weights(), vec![1.0, 2.0, 3.0], vec![]),
        ExperimentId::L73 => (default_functions(), intersection_weights(), vec![1.0, 2.0, 3.0], vec![]),
        ExperimentId::P75 => (default_functions(), default_weights(), vec![1.0, 2.0, 3.0], vec![]),
    };
    ExperimentConfig { functions, weights, ps, qs, tol: None }
}

/// One measured tuple.
#[derive(Clone, Debug, Serialize)]
pub struct RatioTuple {
    pub function: String,
    pub weight: String,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub pair: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// A tuple that produced no ratio, with the reason.
#[derive(Clone, Debug, Serialize)]
pub struct SkippedTuple {
    pub function: String,
    pub weight: String,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub pair: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparabilityReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub tuples: Vec<RatioTuple>,
    pub skipped: Vec<SkippedTuple>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub spread: f64,
}

/// On-grid class facts needed by the hypothesis gates.
struct WeightClasses {
    dhat: Verdict,
    dcheck: Verdict,
    moment: Verdict,
}

impl WeightClasses {
    fn intersection(&self) -> Verdict {
        match (self.dhat, self.dcheck) {
            (Verdict::HoldsOnGrid, Verdict::HoldsOnGrid) => Verdict::HoldsOnGrid,
            (Verdict::FailsOnGrid, _) | (_, Verdict::FailsOnGrid) => Verdict::FailsOnGrid,
            _ => Verdict::Inconclusive,
        }
    }
}

fn quick_classes(w: &RadialWeight, grids: &Grids) -> Result<WeightClasses> {
    Ok(WeightClasses {
        dhat: evaluate_condition(w, ConditionId::DhatDef, grids)?.verdict,
        dcheck: evaluate_condition(w, ConditionId::DcheckDef { k: 2.0 }, grids)?.verdict,
        moment: evaluate_condition(w, ConditionId::MDef { k: 2.0 }, grids)?.verdict,
    })
}

/// Whether the tail-modified weight `(hat w)_[x]` exists (is integrable),
/// and if so whether its tail doubles on-grid.
fn hat_modified(
    w: &RadialWeight,
    x: f64,
    grids: &Grids,
) -> Result<Option<(RadialWeight, Verdict)>> {
    let hat = w.hat_weight()?;
    match hat.modify(x) {
        Ok(hm) => {
            let v = evaluate_condition(&hm, ConditionId::DhatDef, grids)?.verdict;
            Ok(Some((hm, v)))
        }
        Err(Error::NonIntegrable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

struct TupleSpec {
    f: AnalyticFunction,
    w: WeightSpec,
    p: f64,
    q: Option<f64>,
    pair: &'static str,
    compute: ComputeKind,
}

#[derive(Clone, Copy, Debug)]
enum ComputeKind {
    BergmanModVsHat,
    BergmanHatVsMod,
    HclassVsDirichletHat,
    DirichletHatVsHclass,
    HclassVsJ,
    SclassVsJ,
    DirichletModVsJ,
    DirichletHatPlusVsJ,
    IFunctionalVsJ,
    JVsCoeffOmegaK,
    JVsDirichletHat,
    JVsDirichletMod,
    SclassVsHclass,
    HclassVsSclass,
    CoeffOmega2KVsSclass,
    SclassVsCoeffOmega2K,
    CoeffOmegaKVsDirichletHat,
    DirichletHatVsCoeffOmegaK,
}

/// Run one comparability experiment. `config = None` uses the experiment's
/// default family with quiet per-tuple filtering; an explicit config is
/// validated strictly and rejected when it violates a hypothesis.
pub fn run_comparability(
    id: ExperimentId,
    config: Option<ExperimentConfig>,
) -> Result<ComparabilityReport> {
    let strict = config.is_some();
    let config = config.unwrap_or_else(|| default_config(id));
    // bracket measurements need ~1e-3 accuracy; the default tolerance is
    // relaxed accordingly (identity-grade runs pass an explicit tol)
    let cfg = QuadratureConfig::with_tol(config.tol.unwrap_or(1e-7));
    let grids = Grids::default_grids();

    let functions: Vec<AnalyticFunction> = config
        .functions
        .iter()
        .map(|s| make_function(s, None))
        .collect::<Result<_>>()?;

    let mut specs: Vec<TupleSpec> = Vec::new();
    let mut skipped: Vec<SkippedTuple> = Vec::new();

    for wspec in &config.weights {
        let w = make_weight_cfg(wspec, cfg)?;
        let classes = quick_classes(&w, &grids)?;
        let gate = |satisfied: bool, what: &str| -> Result<bool> {
            if satisfied {
                return Ok(true);
            }
            if strict {
                return Err(Error::Hypothesis(format!(
                    "{} requires {what}, violated by the configuration (weight {})",
                    id.label(),
                    w.label()
                )));
            }
            Ok(false)
        };
        match id {
            ExperimentId::T1 | ExperimentId::T2 => {
                for &q in &config.qs {
                    let hm = hat_modified(&w, q - 2.0, &grids)?;
                    let (ok, what): (bool, &str) = match id {
                        ExperimentId::T1 => match &hm {
                            None => (false, "an integrable tail-modified weight"),
                            Some((_, v)) => (
                                *v == Verdict::HoldsOnGrid,
                                "a doubling tail-modified weight",
                            ),
                        },
                        _ => {
                            // two-sided version: class condition depends on q
                            if q < 1.0 {
                                (
                                    hm.as_ref().map(|(_, v)| *v == Verdict::HoldsOnGrid)
                                        == Some(true),
                                    "a doubling integrable tail-modified weight (q < 1)",
                                )
                            } else if q == 1.0 {
                                // the relevant class facts are those of the
                                // tail quotient, not the weight itself
                                let ok = match w.tilde() {
                                    Ok(t) => {
                                        let tc = quick_classes(&t, &grids)?;
                                        tc.intersection() == Verdict::HoldsOnGrid
                                    }
                                    Err(_) => false,
                                };
                                (ok, "the tail quotient in the intersection class (q = 1)")
                            } else {
                                (
                                    classes.intersection() == Verdict::HoldsOnGrid,
                                    "a weight in the intersection class (q > 1)",
                                )
                            }
                        }
                    };
                    if !gate(ok, what)? {
                        for f in &functions {
                            skipped.push(SkippedTuple {
                                function: f.label().into(),
                                weight: w.label().into(),
                                p: f64::NAN,
                                q: Some(q),
                                pair: String::new(),
                                reason: format!("hypothesis: needs {what}"),
                            }
                            .normalize());
                        }
                        continue;
                    }
                    for f in &functions {
                        for &p in &config.ps {
                            specs.push(TupleSpec {
                                f: f.clone(),
                                w: wspec.clone(),
                                p,
                                q: Some(q),
                                pair: "A^p(w_[q-1]) / A^p(hat-w_[q-2])",
                                compute: ComputeKind::BergmanModVsHat,
                            });
                        }
                    }
                }
            }
            ExperimentId::T3 => {
                if !gate(
                    classes.moment == Verdict::HoldsOnGrid,
                    "a weight with on-grid moment decay",
                )? {
                    continue;
                }
                for &q in &config.qs {
                    for f in &functions {
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p: 2.0,
                            q: Some(q),
                            pair: "A^2(hat-w_[q-2]) / A^2(w_[q-1])",
                            compute: ComputeKind::BergmanHatVsMod,
                        });
                    }
                }
            }
            ExperimentId::T4i | ExperimentId::T4ii => {
                for &p in &config.ps {
                    let (ok, what): (bool, String) = if id == ExperimentId::T4i {
                        if !(p < 2.0) {
                            (false, "p < 2".into())
                        } else {
                            let hm = hat_modified(&w, p - 2.0, &grids)?;
                            (
                                hm.map(|(_, v)| v == Verdict::HoldsOnGrid) == Some(true),
                                "a doubling integrable tail-modified weight".into(),
                            )
                        }
                    } else if !(p > 2.0) {
                        (false, "p > 2".into())
                    } else {
                        (
                            classes.dhat == Verdict::HoldsOnGrid,
                            "a weight with on-grid tail doubling".into(),
                        )
                    };
                    if !gate(ok, &what)? {
                        continue;
                    }
                    for f in &functions {
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair: if id == ExperimentId::T4i {
                                "H-norm / A^p(f'; hat-w_[p-2])"
                            } else {
                                "A^p(f'; hat-w_[p-2]) / H-norm"
                            },
                            compute: if id == ExperimentId::T4i {
                                ComputeKind::HclassVsDirichletHat
                            } else {
                                ComputeKind::DirichletHatVsHclass
                            },
                        });
                    }
                }
            }
            ExperimentId::T5 => {
                if !gate(
                    classes.intersection() == Verdict::HoldsOnGrid,
                    "a weight in the intersection class",
                )? {
                    continue;
                }
                for f in &functions {
                    if !gate(f.flags().univalent, "univalent functions")? {
                        continue;
                    }
                    for &p in &config.ps {
                        for (pair, compute) in [
                            ("H-norm + |f(0)|^p / J", ComputeKind::HclassVsJ),
                            ("S-norm + |f(0)|^p / J", ComputeKind::SclassVsJ),
                        ] {
                            specs.push(TupleSpec {
                                f: f.clone(),
                                w: wspec.clone(),
                                p,
                                q: None,
                                pair,
                                compute,
                            });
                        }
                    }
                }
            }
            ExperimentId::T6 => {
                if !gate(
                    classes.intersection() == Verdict::HoldsOnGrid,
                    "a weight in the intersection class",
                )? {
                    continue;
                }
                for f in &functions {
                    if !gate(f.flags().univalent, "univalent functions")? {
                        continue;
                    }
                    for &p in &config.ps {
                        if !gate(p >= 2.0, "2 <= p")? {
                            continue;
                        }
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair: "D^p(w_[p-1]) + |f(0)|^p / J",
                            compute: ComputeKind::DirichletModVsJ,
                        });
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair: "D^p(hat-w_[p-2]) + |f(0)|^p / J",
                            compute: ComputeKind::DirichletHatPlusVsJ,
                        });
                        for &q in &config.qs {
                            if !gate(q >= 2.0, "2 <= q")? {
                                continue;
                            }
                            specs.push(TupleSpec {
                                f: f.clone(),
                                w: wspec.clone(),
                                p,
                                q: Some(q),
                                pair: "I(p,q) + |f(0)|^p / J",
                                compute: ComputeKind::IFunctionalVsJ,
                            });
                        }
                    }
                }
            }
            ExperimentId::T7 => {
                if !gate(
                    classes.intersection() == Verdict::HoldsOnGrid,
                    "a weight in the intersection class",
                )? {
                    continue;
                }
                for f in &functions {
                    if !gate(f.flags().close_to_convex, "close-to-convex functions")? {
                        continue;
                    }
                    for &p in &config.ps {
                        if !gate(p >= 1.0, "1 <= p")? {
                            continue;
                        }
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair: "J / sum (k+1)^{p-1} w_k",
                            compute: ComputeKind::JVsCoeffOmegaK,
                        });
                    }
                }
            }
            ExperimentId::P61 => {
                for f in &functions {
                    for &p in &config.ps {
                        if p <= 1.0 {
                            if !gate(f.flags().class_s, "normalized univalent functions (p <= 1)")? {
                                continue;
                            }
                            specs.push(TupleSpec {
                                f: f.clone(),
                                w: wspec.clone(),
                                p,
                                q: None,
                                pair: "J / A^p(f'; hat-w_[p-2])",
                                compute: ComputeKind::JVsDirichletHat,
                            });
                        } else {
                            if !gate(
                                classes.dcheck == Verdict::HoldsOnGrid,
                                "a weight with on-grid reverse tail doubling (p > 1)",
                            )? {
                                continue;
                            }
                            specs.push(TupleSpec {
                                f: f.clone(),
                                w: wspec.clone(),
                                p,
                                q: None,
                                pair: "J / (A^p(f'; w_[p-1]) + |f(0)|^p)",
                                compute: ComputeKind::JVsDirichletMod,
                            });
                        }
                    }
                }
            }
            ExperimentId::L64 => {
                if !gate(
                    classes.intersection() == Verdict::HoldsOnGrid,
                    "a weight in the intersection class",
                )? {
                    continue;
                }
                for f in &functions {
                    for &p in &config.ps {
                        let (pair, compute) = if p <= 2.0 {
                            ("S-norm / H-norm (p <= 2)", ComputeKind::SclassVsHclass)
                        } else {
                            ("H-norm / S-norm (p >= 2)", ComputeKind::HclassVsSclass)
                        };
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair,
                            compute,
                        });
                    }
                }
            }
            ExperimentId::L65 => {
                if !gate(
                    classes.moment == Verdict::HoldsOnGrid,
                    "a weight with on-grid moment decay",
                )? {
                    continue;
                }
                for f in &functions {
                    for &p in &config.ps {
                        let (pair, compute) = if p <= 2.0 {
                            ("sum k^{p-1} w_{2k} / S-norm (p <= 2)", ComputeKind::CoeffOmega2KVsSclass)
                        } else {
                            ("S-norm / sum k^{p-1} w_{2k} (p >= 2)", ComputeKind::SclassVsCoeffOmega2K)
                        };
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair,
                            compute,
                        });
                    }
                }
            }
            ExperimentId::L73 => {
                if !gate(
                    classes.moment == Verdict::HoldsOnGrid,
                    "a weight with on-grid moment decay",
                )? {
                    continue;
                }
                for f in &functions {
                    for &p in &config.ps {
                        if !gate(p >= 1.0, "1 <= p")? {
                            continue;
                        }
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair: "J / sum (k+1)^{p-1} w_k",
                            compute: ComputeKind::JVsCoeffOmegaK,
                        });
                    }
                }
            }
            ExperimentId::P75 => {
                for &p in &config.ps {
                    let hm = hat_modified(&w, p - 2.0, &grids)?;
                    if !gate(
                        hm.map(|(_, v)| v == Verdict::HoldsOnGrid) == Some(true),
                        "a doubling integrable tail-modified weight",
                    )? {
                        continue;
                    }
                    for f in &functions {
                        let (pair, compute) = if p <= 2.0 {
                            (
                                "sum (k+1)^{p-1} w_k / A^p(f'; hat-w_[p-2]) (p <= 2)",
                                ComputeKind::CoeffOmegaKVsDirichletHat,
                            )
                        } else {
                            (
                                "A^p(f'; hat-w_[p-2]) / sum (k+1)^{p-1} w_k (p >= 2)",
                                ComputeKind::DirichletHatVsCoeffOmegaK,
                            )
                        };
                        specs.push(TupleSpec {
                            f: f.clone(),
                            w: wspec.clone(),
                            p,
                            q: None,
                            pair,
                            compute,
                        });
                    }
                }
            }
        }
    }

    // evaluate tuples in parallel; assembly keeps the spec order
    let outcomes: Vec<std::result::Result<RatioTuple, SkippedTuple>> = specs
        .par_iter()
        .map(|s| compute_tuple(s, cfg))
        .collect();
    let mut tuples = Vec::new();
    for o in outcomes {
        match o {
            Ok(t) => tuples.push(t),
            Err(s) => skipped.push(s),
        }
    }
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in &tuples {
        min_ratio = min_ratio.min(t.ratio);
        max_ratio = max_ratio.max(t.ratio);
    }
    let spread = max_ratio / min_ratio;
    Ok(ComparabilityReport {
        experiment: id.label().to_string(),
        config,
        tuples,
        skipped,
        min_ratio,
        max_ratio,
        spread,
    })
}

impl SkippedTuple {
    fn normalize(mut self) -> Self {
        if self.pair.is_empty() {
            self.pair = "(all pairs)".into();
        }
        self
    }
}

fn compute_tuple(
    s: &TupleSpec,
    cfg: QuadratureConfig,
) -> std::result::Result<RatioTuple, SkippedTuple> {
    let skip = |reason: String| SkippedTuple {
        function: s.f.label().into(),
        weight: s.w.label(),
        p: s.p,
        q: s.q,
        pair: s.pair.into(),
        reason,
    };
    // a side whose own error estimate rivals its value is unresolved
    // (divergent series truncations and under-resolved boundary spikes
    // both surface this way) and yields no usable ratio
    let checked = |r: crate::functionals::NormResult| -> Result<f64> {
        if r.err_est > 0.1 * r.value.abs() {
            return Err(Error::NonConvergent {
                value: r.value,
                err_est: r.err_est,
                detail: format!("unresolved side for {}", r.inputs.function),
            });
        }
        Ok(r.value)
    };
    let run = || -> Result<(f64, f64)> {
        let w = make_weight_cfg(&s.w, cfg)?;
        let f = &s.f;
        let p = s.p;
        let f0p = f.value_at_zero().norm().powf(p);
        Ok(match s.compute {
            ComputeKind::BergmanModVsHat => {
                let q = s.q.expect("q required");
                let hat_mod = w.hat_weight()?.modify(q - 2.0)?;
                let w_mod = w.modify(q - 1.0)?;
                (
                    bergman_norm(f, p, &w_mod, &cfg).and_then(&checked)?,
                    bergman_norm(f, p, &hat_mod, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::BergmanHatVsMod => {
                let q = s.q.expect("q required");
                let hat_mod = w.hat_weight()?.modify(q - 2.0)?;
                let w_mod = w.modify(q - 1.0)?;
                (
                    bergman_norm(f, p, &hat_mod, &cfg).and_then(&checked)?,
                    bergman_norm(f, p, &w_mod, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::HclassVsDirichletHat => {
                let hat_mod = w.hat_weight()?.modify(p - 2.0)?;
                (
                    h_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                    bergman_norm(&f.derivative(), p, &hat_mod, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::DirichletHatVsHclass => {
                let hat_mod = w.hat_weight()?.modify(p - 2.0)?;
                (
                    bergman_norm(&f.derivative(), p, &hat_mod, &cfg).and_then(&checked)?,
                    h_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::HclassVsJ => (
                h_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)? + f0p,
                j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
            ),
            ComputeKind::SclassVsJ => (
                s_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)? + f0p,
                j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
            ),
            ComputeKind::DirichletModVsJ => {
                let w_mod = w.modify(p - 1.0)?;
                (
                    dirichlet_norm(f, p, &w_mod, &cfg).and_then(&checked)? + f0p,
                    j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::DirichletHatPlusVsJ => {
                let hat_mod = w.hat_weight()?.modify(p - 2.0)?;
                (
                    dirichlet_norm(f, p, &hat_mod, &cfg).and_then(&checked)? + f0p,
                    j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::IFunctionalVsJ => {
                let q = s.q.expect("q required");
                (
                    i_functional(f, p, q, &w, &cfg).and_then(&checked)? + f0p,
                    j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::JVsCoeffOmegaK => (
                j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                coeff_functional(f, p, &w, CoeffVariant::OmegaK, &cfg).and_then(&checked)?,
            ),
            ComputeKind::JVsDirichletHat => {
                let hat_mod = w.hat_weight()?.modify(p - 2.0)?;
                (
                    j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                    bergman_norm(&f.derivative(), p, &hat_mod, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::JVsDirichletMod => {
                let w_mod = w.modify(p - 1.0)?;
                (
                    j_functional(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                    bergman_norm(&f.derivative(), p, &w_mod, &cfg).and_then(&checked)? + f0p,
                )
            }
            ComputeKind::SclassVsHclass => (
                s_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                h_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
            ),
            ComputeKind::HclassVsSclass => (
                h_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                s_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
            ),
            ComputeKind::CoeffOmega2KVsSclass => (
                coeff_functional(f, p, &w, CoeffVariant::Omega2K, &cfg).and_then(&checked)?,
                s_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
            ),
            ComputeKind::SclassVsCoeffOmega2K => (
                s_class_norm(f, p, &w, 1.0, &cfg).and_then(&checked)?,
                coeff_functional(f, p, &w, CoeffVariant::Omega2K, &cfg).and_then(&checked)?,
            ),
            ComputeKind::CoeffOmegaKVsDirichletHat => {
                let hat_mod = w.hat_weight()?.modify(p - 2.0)?;
                (
                    coeff_functional(f, p, &w, CoeffVariant::OmegaK, &cfg).and_then(&checked)?,
                    bergman_norm(&f.derivative(), p, &hat_mod, &cfg).and_then(&checked)?,
                )
            }
            ComputeKind::DirichletHatVsCoeffOmegaK => {
                let hat_mod = w.hat_weight()?.modify(p - 2.0)?;
                (
                    bergman_norm(&f.derivative(), p, &hat_mod, &cfg).and_then(&checked)?,
                    coeff_functional(f, p, &w, CoeffVariant::OmegaK, &cfg).and_then(&checked)?,
                )
            }
        })
    };
    match run() {
        Ok((lhs, rhs)) if lhs.is_finite() && rhs.is_finite() && rhs > 0.0 && lhs > 0.0 => {
            Ok(RatioTuple {
                function: s.f.label().into(),
                weight: s.w.label(),
                p: s.p,
                q: s.q,
                pair: s.pair.into(),
                lhs,
                rhs,
                ratio: lhs / rhs,
            })
        }
        Ok((lhs, rhs)) => Err(skip(format!(
            "degenerate sides: lhs {lhs:e}, rhs {rhs:e}"
        ))),
        Err(e) => Err(skip(e.to_string())),
    }
}

/// The divergence scenarios: a side that outgrows its partner as the
/// truncation radius approaches the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivergenceScenario {
    /// maximum-modulus functional vs the modified-weight Dirichlet seminorm
    T4iiFail,
    /// maximum-modulus functional vs the area norm
    L63Fail,
    /// Laplacian norm vs the area norm
    L64Fail,
    /// area norm vs the even-moment coefficient sum
    L65Fail,
}

impl DivergenceScenario {
    pub fn parse(text: &str) -> Result<DivergenceScenario> {
        Ok(match text.trim() {
            "T4ii-fail" | "t4ii-fail" => DivergenceScenario::T4iiFail,
            "L6.3-fail" | "l6.3-fail" => DivergenceScenario::L63Fail,
            "L6.4-fail" | "l6.4-fail" => DivergenceScenario::L64Fail,
            "L6.5-fail" | "l6.5-fail" => DivergenceScenario::L65Fail,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown scenario `{other}` (expected T4ii-fail, L6.3-fail, L6.4-fail, L6.5-fail)"
                )))
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            DivergenceScenario::T4iiFail => "T4ii-fail",
            DivergenceScenario::L63Fail => "L6.3-fail",
            DivergenceScenario::L64Fail => "L6.4-fail",
            DivergenceScenario::L65Fail => "L6.5-fail",
        }
    }

    /// Log-power exponent at which the scenario's left side diverges while
    /// the right stays controlled.
    pub fn default_alpha(&self, p: f64) -> f64 {
        match self {
            DivergenceScenario::T4iiFail | DivergenceScenario::L63Fail => p + 1.0,
            // between 2 and 1 + p/2
            DivergenceScenario::L64Fail | DivergenceScenario::L65Fail => 1.5 + 0.25 * p,
        }
    }

    fn validate_p(&self, p: f64) -> Result<()> {
        let ok = match self {
            DivergenceScenario::T4iiFail => p > 1.0,
            DivergenceScenario::L63Fail => p > 0.0,
            DivergenceScenario::L64Fail | DivergenceScenario::L65Fail => p > 2.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!(
                "{} needs {}",
                self.label(),
                match self {
                    DivergenceScenario::T4iiFail => "p > 1",
                    DivergenceScenario::L63Fail => "p > 0",
                    _ => "p > 2",
                }
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceVerdict {
    RatioGrows,
    RatioStable,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub scenario: String,
    pub p: f64,
    pub alpha: f64,
    pub lhs: String,
    pub rhs: String,
    pub epsilons: Vec<f64>,
    pub lhs_partial: Vec<f64>,
    pub rhs_partial: Vec<f64>,
    pub ratio_trend: Vec<f64>,
    pub verdict: DivergenceVerdict,
}

pub fn default_epsilons() -> Vec<f64> {
    (2..=8).map(|k| 10f64.powi(-k)).collect()
}

/// Run a divergence sweep: both sides truncated at `1 - eps` (series sides
/// are summed in full; they converge), the ratio recorded per epsilon.
pub fn run_divergence(
    scenario: DivergenceScenario,
    p: f64,
    alpha: Option<f64>,
    epsilons: Option<Vec<f64>>,
    tol: Option<f64>,
) -> Result<DivergenceReport> {
    scenario.validate_p(p)?;
    let alpha = alpha.unwrap_or_else(|| scenario.default_alpha(p));
    if !(alpha > 1.0) {
        return Err(Error::Invalid("log-power exponent must exceed 1".into()));
    }
    let epsilons = epsilons.unwrap_or_else(default_epsilons);
    if epsilons.is_empty()
        || epsilons.windows(2).any(|w| w[1] >= w[0])
        || epsilons.iter().any(|&e| !(1e-9 < e && e < 1e-1))
    {
        return Err(Error::Invalid(
            "epsilons must be strictly decreasing within (1e-9, 1e-1)".into(),
        ));
    }
    let cfg = tol.map(QuadratureConfig::with_tol).unwrap_or_default();
    let f = make_function(&FunctionSpec::LogMap, None)?;
    let w = make_weight_cfg(&WeightSpec::LogPower { alpha }, cfg)?;

    let (lhs_desc, rhs_desc) = match scenario {
        DivergenceScenario::T4iiFail => ("J (partial)", "A^p(f'; w_[p-1]) + |f(0)|^p (partial)"),
        DivergenceScenario::L63Fail => ("J (partial)", "S-norm (partial)"),
        DivergenceScenario::L64Fail => ("H-norm (partial)", "S-norm (partial)"),
        DivergenceScenario::L65Fail => ("S-norm (partial)", "sum k^{p-1} w_{2k} (full)"),
    };

    let sides: Vec<Result<(f64, f64)>> = epsilons
        .par_iter()
        .map(|&eps| -> Result<(f64, f64)> {
            let upper = 1.0 - eps;
            Ok(match scenario {
                DivergenceScenario::T4iiFail => {
                    let w_mod = w.modify(p - 1.0)?;
                    let lhs = j_functional(&f, p, &w, upper, &cfg)?.value;
                    let rhs = bergman_norm_partial(&f.derivative(), p, &w_mod, upper, &cfg)?
                        .value
                        + f.value_at_zero().norm().powf(p);
                    (lhs, rhs)
                }
                DivergenceScenario::L63Fail => (
                    j_functional(&f, p, &w, upper, &cfg)?.value,
                    s_class_norm(&f, p, &w, upper, &cfg)?.value,
                ),
                DivergenceScenario::L64Fail => (
                    h_class_norm(&f, p, &w, upper, &cfg)?.value,
                    s_class_norm(&f, p, &w, upper, &cfg)?.value,
                ),
                DivergenceScenario::L65Fail => (
                    s_class_norm(&f, p, &w, upper, &cfg)?.value,
                    coeff_functional(&f, p, &w, CoeffVariant::Omega2K, &cfg)?.value,
                ),
            })
        })
        .collect();

    let mut lhs_partial = Vec::new();
    let mut rhs_partial = Vec::new();
    let mut ratio_trend = Vec::new();
    for s in sides {
        let (l, r) = s?;
        lhs_partial.push(l);
        rhs_partial.push(r);
        ratio_trend.push(l / r);
    }
    let first = ratio_trend[0];
    let last = *ratio_trend.last().unwrap();
    let monotone = ratio_trend.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    let verdict = if monotone && last >= 1.3 * first {
        DivergenceVerdict::RatioGrows
    } else {
        DivergenceVerdict::RatioStable
    };
    Ok(DivergenceReport {
        scenario: scenario.label().to_string(),
        p,
        alpha,
        lhs: lhs_desc.to_string(),
        rhs: rhs_desc.to_string(),
        epsilons,
        lhs_partial,
        rhs_partial,
        ratio_trend,
        verdict,
    })
}
