//! Scaling automorphisms `(x, a) -> (lambda x, a)` that squeeze the
//! x-components of a set into a short symmetric interval.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissociation::greedy_certified;
use crate::error::{Error, Result};
use crate::group::{GElem, GroupSpec};

pub const DEFAULT_SCAN_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectificationResult {
    pub lambda: u64,
    /// `max |lift(lambda x)|` over the set.
    pub achieved_bound: u64,
    pub target_bound: f64,
}

fn max_abs_lift(spec: &GroupSpec, lambda: u64, xs: &[u64], stop_above: u64) -> Option<u64> {
    let p = spec.p() as u128;
    let mut worst = 0u64;
    for &x in xs {
        let y = ((lambda as u128 * x as u128) % p) as u64;
        let a = spec.lift(y).unsigned_abs();
        if a > stop_above {
            return None;
        }
        worst = worst.max(a);
    }
    Some(worst)
}

/// Smallest `lambda` in `[1, p)` with `max |lift(lambda x)| <= target_bound`
/// over `xs`.
pub fn find_scaling(spec: &GroupSpec, xs: &[u64], target_bound: f64) -> Result<RectificationResult> {
    find_scaling_budget(spec, xs, target_bound, DEFAULT_SCAN_BUDGET)
}

pub fn find_scaling_budget(spec: &GroupSpec, xs: &[u64], target_bound: f64, budget: u64) -> Result<RectificationResult> {
    if xs.iter().all(|&x| x % spec.p() == 0) {
        return Err(Error::InvalidElement("find_scaling needs a nonzero residue".into()));
    }
    if spec.p() > budget {
        return Err(Error::ScanBudgetExceeded(spec.p()));
    }
    if target_bound < 0.0 {
        return Err(Error::NoneFound(format!("negative target {target_bound}")));
    }
    let limit = target_bound.floor() as u64;
    (1..spec.p())
        .into_par_iter()
        .find_first(|&l| max_abs_lift(spec, l, xs, limit).is_some())
        .map(|lambda| RectificationResult {
            lambda,
            achieved_bound: max_abs_lift(spec, lambda, xs, u64::MAX).unwrap(),
            target_bound,
        })
        .ok_or_else(|| Error::NoneFound(format!("no lambda puts {} residues within {target_bound}", xs.len())))
}

pub fn apply_scaling(spec: &GroupSpec, lambda: u64, set: &[GElem]) -> Vec<GElem> {
    set.iter().map(|&g| spec.scale(lambda, g)).collect()
}

/// Largest integer strictly below `half_width`.
fn open_bound(half_width: f64) -> f64 {
    let f = half_width.floor();
    if f == half_width {
        f - 1.0
    } else {
        f
    }
}

/// Finds `lambda` moving every x-component of `set` into the open interval
/// `(-p/denominator, p/denominator)`, and returns it with the image.
///
/// First tries the pigeonhole target `p^(1-1/r)` on a dissociated basis of
/// the x-components, then falls back to scanning directly for the interval.
pub fn rectify_set(spec: &GroupSpec, set: &[GElem], denominator: f64) -> Result<(RectificationResult, Vec<GElem>)> {
    let p = spec.p() as f64;
    let half_width = p / denominator;
    let bound = open_bound(half_width);
    let xs: Vec<u64> = set.iter().map(|g| g.x).filter(|&x| x != 0).collect();
    if xs.is_empty() {
        let r = RectificationResult { lambda: 1, achieved_bound: 0, target_bound: half_width };
        return Ok((r, set.to_vec()));
    }
    let fits = |lambda: u64| max_abs_lift(spec, lambda, &xs, u64::MAX).filter(|&m| m as f64 <= bound);

    let basis = greedy_certified(spec, &set.iter().copied().filter(|g| g.x != 0).collect::<Vec<_>>());
    let r = basis.len().max(1);
    if r <= 3 {
        let basis_x: Vec<u64> = basis.iter().map(|g| g.x).collect();
        let target = p.powf(1.0 - 1.0 / r as f64);
        if let Ok(res) = find_scaling(spec, &basis_x, target) {
            if let Some(m) = fits(res.lambda) {
                let out = RectificationResult { lambda: res.lambda, achieved_bound: m, target_bound: half_width };
                return Ok((out, apply_scaling(spec, res.lambda, set)));
            }
        }
    }
    match find_scaling(spec, &xs, bound) {
        Ok(res) => {
            let out = RectificationResult { target_bound: half_width, ..res };
            Ok((out, apply_scaling(spec, res.lambda, set)))
        }
        Err(Error::NoneFound(_)) => Err(Error::RectificationFailure(format!(
            "no lambda moves {} elements into (-{half_width:.3}, {half_width:.3}) mod {}",
            set.len(),
            spec.p()
        ))),
        Err(e) => Err(e),
    }
}

/// `h log h + h log 100 + h log |B| < log p`. Diagnostic only.
pub fn rectifiable_regime(h: usize, set_size: usize, p: u64) -> bool {
    if h == 0 {
        return true;
    }
    let h = h as f64;
    h * h.ln() + h * 100f64.ln() + h * (set_size.max(1) as f64).ln() < (p as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RParams {
    pub c1: f64,
    pub override_r: Option<usize>,
}

impl Default for RParams {
    fn default() -> Self {
        RParams { c1: 0.5, override_r: None }
    }
}

impl RParams {
    /// `c1 max(sqrt(log p), log p / log |A|)`, floored, at least 1.
    pub fn r(&self, p: u64, set_size: usize) -> usize {
        if let Some(r) = self.override_r {
            return r.max(1);
        }
        let lp = (p as f64).ln();
        let second = if set_size <= 1 { f64::INFINITY } else { lp / (set_size as f64).ln() };
        let raw = self.c1 * lp.sqrt().max(second);
        if raw.is_finite() {
            (raw.floor() as usize).max(1)
        } else {
            usize::MAX
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn find_scaling_examples() {
        let spec = GroupSpec::cyclic(13).unwrap();
        let r = find_scaling(&spec, &[5, 10], 13f64.sqrt()).unwrap();
        assert_eq!((r.lambda, r.achieved_bound), (5, 2));

        let r = find_scaling(&spec, &[1], 1.0).unwrap();
        assert_eq!((r.lambda, r.achieved_bound), (1, 1));

        assert!(matches!(find_scaling(&spec, &[1, 2, 3, 4, 5, 6], 1.0), Err(Error::NoneFound(_))));
        assert!(find_scaling(&spec, &[0], 1.0).is_err());
        let big = GroupSpec::cyclic(10_000_019).unwrap();
        assert!(matches!(find_scaling(&big, &[1], 1.0), Err(Error::ScanBudgetExceeded(_))));
    }

    #[test]
    fn rectify_examples() {
        let spec = GroupSpec::cyclic(13).unwrap();
        let set = [GElem::new(5, 0), GElem::new(10, 0)];
        let (r, img) = rectify_set(&spec, &set, 13.0 / 2.5).unwrap();
        assert_eq!(r.lambda, 5);
        let lifts: Vec<i64> = img.iter().map(|g| spec.lift(g.x)).collect();
        assert_eq!(lifts, vec![-1, -2]);

        let d = GroupSpec::dihedral(101).unwrap();
        let zeros = [GElem::new(0, 1)];
        let (r, img) = rectify_set(&d, &zeros, 100.0).unwrap();
        assert_eq!(r.lambda, 1);
        assert_eq!(img, zeros);

        let set = [GElem::new(10, 0), GElem::new(20, 0)];
        let (r, img) = rectify_set(&d, &set, 101.0 / 5.5).unwrap();
        assert!(img.iter().all(|g| d.lift(g.x).abs() <= 5));
        assert!(r.achieved_bound <= 5);
        assert_eq!(r.lambda, 10);
    }

    #[test]
    fn open_interval_is_strict() {
        let spec = GroupSpec::cyclic(13).unwrap();
        // half width exactly 2: only |lift| <= 1 qualifies
        let (r, _) = rectify_set(&spec, &[GElem::new(5, 0)], 6.5).unwrap();
        assert_eq!(r.achieved_bound, 1);
    }

    #[test]
    fn r_params() {
        let p = RParams::default();
        assert_eq!(p.r(1_000_003, 100), 1);
        assert_eq!(p.r(101, 1), usize::MAX);
        assert_eq!(RParams { c1: 0.5, override_r: Some(10) }.r(101, 5), 10);
        assert!(RParams { c1: 10.0, override_r: None }.r(1_000_003, 100) >= 30);
    }

    #[test]
    fn regime() {
        assert!(rectifiable_regime(1, 10, 1_000_003));
        assert!(!rectifiable_regime(10, 100, 101));
    }
}
