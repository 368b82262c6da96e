//! Block decomposition of coefficient indices driven by the tail of a
//! weight: radii `r_n` with `w_hat(r_n) = K^{-n}` (after normalizing
//! `w_hat(0) = 1`), block boundaries `M_n = floor(1/(1-r_n))`, and the
//! geometric block sum `sum_n K^{-n} (sum_{k in I(n)} a_k)^p` that brackets
//! `\int_0^1 g(r)^p w(r) dr` for nonnegative power series `g`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{bisect_decreasing, Radius};
use crate::weights::RadialWeight;

/// The decomposition for one weight and ratio `K`.
#[derive(Clone, Debug, Serialize)]
pub struct LacunaryDecomposition {
    pub k: f64,
    /// radii solving `w_hat(r_n) = K^{-n}`; `r_0 = 0`
    pub r: Vec<f64>,
    /// `1 - r_n`, kept separately for depth beyond f64 resolution in `r`
    pub gaps: Vec<f64>,
    /// block boundaries `M_n = floor(1/(1-r_n))`; exact integers while they
    /// fit in the 53-bit mantissa
    pub m: Vec<f64>,
    pub depth: usize,
}

/// Index range of block `n`: `[M_n, M_{n+1})`, with `I(0) = [0, M_1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Block {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl LacunaryDecomposition {
    pub fn blocks(&self) -> Vec<Block> {
        (0..self.depth)
            .map(|n| Block {
                n,
                lo: if n == 0 { 0.0 } else { self.m[n] },
                hi: self.m[n + 1],
            })
            .collect()
    }
}

/// Compute the decomposition down to `depth` levels (or until the gap falls
/// below 1e-12, whichever comes first). The weight is normalized by its
/// total mass, so the levels are `K^{-n}` exactly.
pub fn decompose(w: &RadialWeight, k: f64, depth: usize) -> Result<LacunaryDecomposition> {
    if !(k > 1.0) {
        return Err(Error::Invalid("lacunary ratio K must exceed 1".into()));
    }
    if depth < 1 {
        return Err(Error::Invalid("depth must be at least 1".into()));
    }
    let mass = w.tail(Radius::ZERO)?;
    let mut r = vec![0.0];
    let mut gaps = vec![1.0];
    let mut m = vec![1.0];
    let mut points = vec![Radius::ZERO];
    for n in 1..=depth {
        let target = mass * k.powi(-(n as i32));
        let prev_u = points[n - 1].u;
        let root = bisect_decreasing(
            |p| w.tail(p).unwrap_or(f64::NAN),
            target,
            (prev_u * 2.0).max(4.0),
        )?;
        if root.u < prev_u {
            return Err(Error::Bisection(
                "tail levels not decreasing; the weight looks corrupted".into(),
            ));
        }
        r.push(root.r);
        gaps.push(root.gap);
        m.push(boundary(root.gap));
        points.push(root);
        if root.gap < 1e-12 && n < depth {
            // deeper levels would outrun useful coefficient indices
            return Ok(LacunaryDecomposition { k, r, gaps, m, depth: n });
        }
    }
    Ok(LacunaryDecomposition { k, r, gaps, m, depth })
}

/// `floor(1/gap)`, snapping to the nearest integer when the root-finding
/// residue leaves `1/gap` within a hair of one (the floor is knife-edged
/// exactly at the integer boundaries the decomposition lands on).
fn boundary(gap: f64) -> f64 {
    let v = 1.0 / gap;
    let nearest = v.round();
    if (v - nearest).abs() < 1e-9 * nearest {
        nearest
    } else {
        v.floor()
    }
}

/// `sum_{n < depth} K^{-n} (sum_{k in I(n)} a_k)^p` for nonnegative `a`.
///
/// Blocks beyond the end of `a` contribute zero; coefficients beyond the
/// last boundary are an error (the decomposition is too shallow for them).
pub fn block_sum(a: &[f64], p: f64, dec: &LacunaryDecomposition) -> Result<f64> {
    if a.iter().any(|&x| x < 0.0) {
        return Err(Error::Invalid("block sums need nonnegative coefficients".into()));
    }
    if !(p > 0.0) {
        return Err(Error::Invalid("block sums need p > 0".into()));
    }
    let top = dec.m[dec.depth];
    if a.len() as f64 > top {
        return Err(Error::Invalid(format!(
            "coefficient index {} beyond the last block boundary {top}; increase depth",
            a.len() - 1
        )));
    }
    let mut total = 0.0;
    for n in 0..dec.depth {
        let lo = if n == 0 { 0usize } else { dec.m[n] as usize };
        let hi = (dec.m[n + 1] as usize).min(a.len());
        if lo >= hi {
            continue; // empty or exhausted block
        }
        let s: f64 = a[lo..hi].iter().sum();
        total += dec.k.powi(-(n as i32)) * s.powf(p);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{make_weight, WeightSpec};

    fn constant() -> RadialWeight {
        make_weight(&WeightSpec::Constant { level: 1.0 }).unwrap()
    }

    #[test]
    fn unit_weight_dyadic() {
        let dec = decompose(&constant(), 2.0, 3).unwrap();
        assert_eq!(dec.r, vec![0.0, 0.5, 0.75, 0.875]);
        assert_eq!(dec.m, vec![1.0, 2.0, 4.0, 8.0]);
        let blocks = dec.blocks();
        assert_eq!(blocks[0], Block { n: 0, lo: 0.0, hi: 2.0 });
        assert_eq!(blocks[1], Block { n: 1, lo: 2.0, hi: 4.0 });
        assert_eq!(blocks[2], Block { n: 2, lo: 4.0, hi: 8.0 });
    }

    #[test]
    fn power_weight_levels() {
        // (1-r)^2/2 = (1/2) 4^{-n}  =>  1-r = 2^{-n}
        let w = make_weight(&WeightSpec::Power { alpha: 1.0 }).unwrap();
        let dec = decompose(&w, 4.0, 2).unwrap();
        assert!((dec.r[1] - 0.5).abs() < 1e-12);
        assert!((dec.r[2] - 0.75).abs() < 1e-12);
        assert_eq!(dec.m, vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn log_power_levels() {
        // v_2 tails 1/L: levels at log(e/(1-r)) = 2^n
        let w = make_weight(&WeightSpec::LogPower { alpha: 2.0 }).unwrap();
        let dec = decompose(&w, 2.0, 4).unwrap();
        for n in 1..=4usize {
            let expect_u = 2f64.powi(n as i32) - 1.0;
            let u = -dec.gaps[n].ln();
            assert!((u - expect_u).abs() < 1e-9 * (1.0 + expect_u), "level {n}: u {u}");
        }
    }

    #[test]
    fn tail_levels_consistent() {
        for spec in [
            WeightSpec::Constant { level: 1.0 },
            WeightSpec::Power { alpha: 2.0 },
            WeightSpec::LogPower { alpha: 3.0 },
        ] {
            let w = make_weight(&spec).unwrap();
            let mass = w.tail(Radius::ZERO).unwrap();
            let dec = decompose(&w, 2.0, 8).unwrap();
            for n in 0..=dec.depth {
                let t = w.tail(Radius::from_gap(dec.gaps[n])).unwrap();
                let expect = mass * 2f64.powi(-(n as i32));
                assert!(
                    (t - expect).abs() < 1e-10 * expect,
                    "{spec:?} level {n}: {t} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn block_sums() {
        let dec = decompose(&constant(), 2.0, 3).unwrap();
        // a = [1,1,1,1], p = 1: blocks give 2 + (1/2) 2 = 3
        assert!((block_sum(&[1.0; 4], 1.0, &dec).unwrap() - 3.0).abs() < 1e-14);
        // a = e_0: single term
        assert!((block_sum(&[1.0], 2.0, &dec).unwrap() - 1.0).abs() < 1e-14);
        // a = [1]*8, p = 2: 4 + 2 + 4 = 10
        assert!((block_sum(&[1.0; 8], 2.0, &dec).unwrap() - 10.0).abs() < 1e-14);
        // negative coefficients rejected
        assert!(block_sum(&[1.0, -1.0], 1.0, &dec).is_err());
        // coefficients beyond the last boundary rejected
        assert!(block_sum(&[1.0; 9], 1.0, &dec).is_err());
    }

    #[test]
    fn block_growth_bounded_for_power_weights() {
        // the limit ratio is 2^{1/(alpha+1)}; floor granularity distorts the
        // first levels, so test once boundaries clear 32
        for alpha in [0.0, 1.0, 2.0] {
            let w = make_weight(&WeightSpec::Power { alpha }).unwrap();
            let dec = decompose(&w, 2.0, 30).unwrap();
            let mut seen = 0;
            for n in 0..dec.depth {
                if dec.m[n] < 32.0 {
                    continue;
                }
                let ratio = dec.m[n + 1] / dec.m[n];
                assert!(
                    (1.2..32.0).contains(&ratio),
                    "alpha {alpha} block {n}: ratio {ratio}"
                );
                seen += 1;
            }
            assert!(seen >= 5, "alpha {alpha}: only {seen} usable levels");
        }
    }
}
