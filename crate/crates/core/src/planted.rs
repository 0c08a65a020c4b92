//! Instances in dihedral groups with a known block structure: two halves
//! of a scaled lacunary progression, a third dissociated block, and a small
//! remainder, arranged so the blocks multiply to a short element.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dissociation::{certify_dissociated, greedy_certified};
use crate::error::{Error, Result};
use crate::group::{GElem, GroupSpec};
use crate::pipeline::PipelineConfig;

const ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub spec: GroupSpec,
    pub set: Vec<GElem>,
    pub blocks: Vec<Vec<GElem>>,
    pub remainder: Vec<GElem>,
    pub delta: GElem,
    pub force_r: usize,
    pub force_k: usize,
    pub window: (usize, usize),
}

impl PlantedInstance {
    pub fn config(&self, seed: u64) -> PipelineConfig {
        let mut c = PipelineConfig::new(self.spec.clone(), seed);
        c.force_r = Some(self.force_r);
        c.force_k = Some(self.force_k);
        c.window = self.window;
        c
    }
}

fn magnitude(spec: &GroupSpec, x: u64) -> u64 {
    spec.lift(x).unsigned_abs()
}

fn desc(spec: &GroupSpec, v: &[GElem]) -> Vec<GElem> {
    let mut v = v.to_vec();
    v.sort_by_key(|g| std::cmp::Reverse(magnitude(spec, g.x)));
    v
}

/// Remainder of `len` elements with every |x| below `p / (90 (len + 1))`;
/// `flips` of them are reflections.
fn small_remainder(spec: &GroupSpec, len: usize, flips: usize, rng: &mut impl Rng) -> Result<Vec<GElem>> {
    let bound = spec.p() as f64 / (90.0 * (len as f64 + 1.0));
    let top = (bound.ceil() as i64 - 1).max(0);
    let rot: Vec<i64> = (-top..=top).filter(|&v| v != 0).collect();
    let refl: Vec<i64> = (-top..=top).collect();
    if rot.len() < len - flips || refl.len() < flips {
        return Err(Error::InvalidSpec(format!("p = {} too small for a remainder of {len}", spec.p())));
    }
    let mut out: Vec<GElem> =
        rot.choose_multiple(rng, len - flips).map(|&v| GElem::new(spec.reduce(v), 0)).collect();
    out.extend(refl.choose_multiple(rng, flips).map(|&v| GElem::new(spec.reduce(v), 1)));
    Ok(out)
}

/// Builds an instance in `Dih_p` with three planted blocks of 8 and a
/// remainder of `remainder_len` elements.
pub fn planted_instance(p: u64, remainder_len: usize, with_flips: bool, rng: &mut impl Rng) -> Result<PlantedInstance> {
    let spec = GroupSpec::dihedral(p)?;
    let half = p / 2;
    for _ in 0..ATTEMPTS {
        let flips = if with_flips { rng.gen_range(1..=remainder_len.div_ceil(3).max(1)) } else { 0 };
        let remainder = small_remainder(&spec, remainder_len, flips, rng)?;
        let bound = p as f64 / (90.0 * (remainder_len as f64 + 1.0));

        // Lacunary progression kept clear of the lower band.
        let m = rng.gen_range(1..p);
        let lac: Vec<GElem> = (0..16).map(|i| GElem::new(((m as u128 * (1u128 << i)) % p as u128) as u64, 0)).collect();
        if lac.iter().any(|g| magnitude(&spec, g.x) < p / 8) {
            continue;
        }
        let z0 = rng.gen_range(1..bound.ceil() as u64);
        let lac_sum: i64 = lac.iter().map(|g| spec.lift(g.x)).sum();

        // Middle block in [lower, p/8), summing to the remaining amount.
        let lower = (4.0 * bound).ceil() as u64 + 1000;
        if lower >= p / 8 {
            return Err(Error::InvalidSpec(format!("p = {p} too small for the banded layout")));
        }
        let mut mid: Vec<GElem> = (0..7)
            .map(|_| {
                let v = rng.gen_range(lower..p / 8) as i64;
                GElem::new(spec.reduce(if rng.gen_bool(0.5) { v } else { -v }), 0)
            })
            .collect();
        let partial: i64 = mid.iter().map(|g| spec.lift(g.x)).sum();
        let last = spec.reduce(z0 as i64 - lac_sum - partial);
        if !(lower..p / 8).contains(&magnitude(&spec, last)) {
            continue;
        }
        mid.push(GElem::new(last, 0));

        let delta = GElem::new(z0, 0);
        let mut ends = lac.clone();
        ends.push(delta);
        if !certify_dissociated(&spec, &mid) || !certify_dissociated(&spec, &ends) {
            continue;
        }
        let mut set: Vec<GElem> = lac.iter().chain(&mid).chain(&remainder).copied().collect();
        if set.iter().collect::<BTreeSet<_>>().len() != set.len() || magnitude(&spec, z0) > half {
            continue;
        }
        let lac_desc = desc(&spec, &lac);
        let blocks = vec![lac_desc[..8].to_vec(), lac_desc[8..].to_vec(), mid];

        let dim_e = greedy_certified(&spec, &desc(&spec, &remainder)).len();
        let force_r = dim_e + 1;
        let enough = blocks.iter().all(|b| {
            let mut pool = b.clone();
            pool.extend(&remainder);
            greedy_certified(&spec, &desc(&spec, &pool)).len() >= force_r
        });
        if !enough || 2 * remainder_len < force_r {
            continue;
        }
        set.shuffle(rng);
        return Ok(PlantedInstance { spec, set, blocks, remainder, delta, force_r, force_k: 1, window: (8, 8) });
    }
    Err(Error::RetriesExhausted { what: "planted instance", retries: ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{compute_delta, structure_decompose, Block, Structure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_structure_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let inst = planted_instance(999_983, 48, true, &mut rng).unwrap();
        assert_eq!(inst.set.len(), 72);
        let blocks: Vec<Block> = inst.blocks.iter().map(|b| Block::plus(b.clone())).collect();
        assert_eq!(compute_delta(&inst.spec, &blocks), inst.delta);
        let cfg = inst.config(1);
        let s = structure_decompose(&inst.spec, &inst.set, &cfg.decompose_params(), &mut rng).unwrap();
        let Structure::Decomposed(d) = s else { panic!("expected blocks") };
        assert_eq!(d.s(), 3);
        assert_eq!(d.lambda, 1);
        assert_eq!(d.delta, Some(inst.delta));
        let got: BTreeSet<BTreeSet<GElem>> =
            d.blocks.iter().map(|b| b.elements.iter().copied().collect()).collect();
        let want: BTreeSet<BTreeSet<GElem>> = inst.blocks.iter().map(|b| b.iter().copied().collect()).collect();
        assert_eq!(got, want);
    }
}
