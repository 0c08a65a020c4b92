//! Random quarter partitions of the blocks and orderings of the quarters
//! whose short boundary products avoid the identity.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{binom, Block};
use crate::dissociation::interleave;
use crate::error::{Error, Result};
use crate::group::{GElem, GroupSpec, Sign};
use crate::sequencing::{find_defect, partial_products, SequencingDefect};

/// Largest number of prefix pairs enumerated exactly before falling back to
/// rejection sampling.
pub const PAIR_ENUMERATION_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarter {
    /// 0-based index of the source block.
    pub source: usize,
    /// 1 to 4.
    pub part: u8,
    pub block: Block,
    pub product: GElem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub quarters: Vec<Quarter>,
}

/// Quarters in the order `1st, 2nd` of every block, then `3rd, 4th` of
/// every block. The quarter products multiply to `delta`.
pub fn partition_blocks(spec: &GroupSpec, blocks: &[Block], delta: GElem, rng: &mut impl Rng) -> Result<BlockPlan> {
    let mut parts: Vec<Vec<Block>> = Vec::with_capacity(blocks.len());
    for (i, b) in blocks.iter().enumerate() {
        let quarters = match b.sign {
            Sign::Minus => {
                let (mut o, mut e) = (b.odd.clone(), b.even.clone());
                if o.len() % 4 != 0 || o.len() != e.len() {
                    return Err(Error::LemmaViolation(format!("block {} halves cannot be quartered", i + 1)));
                }
                o.shuffle(rng);
                e.shuffle(rng);
                let q = o.len() / 4;
                (0..4).map(|t| Block::minus(o[t * q..(t + 1) * q].to_vec(), e[t * q..(t + 1) * q].to_vec())).collect()
            }
            Sign::Plus => {
                let mut v = b.elements.clone();
                if v.len() % 4 != 0 {
                    return Err(Error::LemmaViolation(format!("block {} cannot be quartered", i + 1)));
                }
                v.shuffle(rng);
                let q = v.len() / 4;
                (0..4).map(|t| Block::plus(v[t * q..(t + 1) * q].to_vec())).collect()
            }
        };
        parts.push(quarters);
    }
    let mut quarters = Vec::with_capacity(4 * blocks.len());
    for round in [0usize, 2] {
        for (i, p) in parts.iter().enumerate() {
            for t in round..round + 2 {
                let block = p[t].clone();
                quarters.push(Quarter { source: i, part: t as u8 + 1, product: block.product(spec), block });
            }
        }
    }
    let total = quarters.iter().fold(spec.identity(), |acc, q| spec.mul(acc, q.product));
    if total != delta {
        return Err(Error::LemmaViolation("quarter products do not multiply to delta".into()));
    }
    Ok(BlockPlan { quarters })
}

type Trims = std::collections::HashMap<GElem, usize>;

/// Products of at most `k` elements of a quarter, each with the fewest
/// elements producing it.
fn small_products(spec: &GroupSpec, block: &Block, k: usize, cap: u64) -> Result<Trims> {
    let mut out = Trims::new();
    for j in (0..=k.min(block.len())).rev() {
        for g in block.products_of_size(spec, j, cap)? {
            out.insert(g, j);
        }
    }
    Ok(out)
}

/// Union of extensions (cost 0) and inverted trims (cost = elements removed).
fn side(spec: &GroupSpec, extend: &Trims, trim: &Trims) -> Trims {
    let mut out: Trims = trim.iter().map(|(&g, &n)| (spec.inv(g), n)).collect();
    for &g in extend.keys() {
        out.insert(g, 0);
    }
    out
}

/// `l . mid . r = id` for some `l` in `left`, `r` in `right` that together
/// remove fewer than `len` elements from the interval.
fn meets_identity(spec: &GroupSpec, left: &Trims, mid: GElem, right: &Trims, len: usize) -> bool {
    left.iter().any(|(&l, &a)| right.get(&spec.inv(spec.mul(l, mid))).is_some_and(|&b| a + b < len))
}

fn initial_segments(spec: &GroupSpec, seq: &[GElem]) -> BTreeSet<GElem> {
    let mut out: BTreeSet<GElem> = partial_products(spec, seq).into_iter().collect();
    out.insert(spec.identity());
    out
}

/// Checks both families of interval conditions and returns a line for every
/// violation. Trims that would remove every element of the interval are
/// not counted, which only matters for quarters with at most `2k` elements.
pub fn check_interval_conditions(
    spec: &GroupSpec,
    plan: &BlockPlan,
    k: usize,
    before: &[GElem],
    after: &[GElem],
    cap: u64,
) -> Result<Vec<String>> {
    let u = plan.quarters.len();
    let trivial: Trims = [(spec.identity(), 0)].into_iter().collect();
    // index 0 and u+1 stand for the empty quarters
    let mut small = vec![trivial.clone()];
    for q in &plan.quarters {
        small.push(small_products(spec, &q.block, k, cap)?);
    }
    small.push(trivial);
    let tau: Vec<GElem> = std::iter::once(spec.identity()).chain(plan.quarters.iter().map(|q| q.product)).collect();
    let lens: Vec<usize> = std::iter::once(0).chain(plan.quarters.iter().map(|q| q.block.len())).collect();

    let mut bad = Vec::new();
    for i in 1..=u {
        let mut mid = spec.identity();
        let mut len = 0;
        let left = side(spec, &small[i - 1], &small[i]);
        for j in i..=u {
            mid = spec.mul(mid, tau[j]);
            len += lens[j];
            if i == 1 && j == u {
                continue;
            }
            let right = side(spec, &small[j + 1], &small[j]);
            if meets_identity(spec, &left, mid, &right, len) {
                bad.push(format!("interval [{i}, {j}]"));
            }
        }
    }
    let as_trims = |s: BTreeSet<GElem>| -> Trims { s.into_iter().map(|g| (g, 0)).collect() };
    let head = as_trims(initial_segments(spec, before));
    let tail = as_trims(initial_segments(spec, after));
    for j in 2..=u {
        let forward = tau[1..=j].iter().fold(spec.identity(), |a, &t| spec.mul(a, t));
        let len: usize = lens[1..=j].iter().sum();
        if meets_identity(spec, &head, forward, &side(spec, &small[j + 1], &small[j]), len) {
            bad.push(format!("leading run through quarter {j}"));
        }
        let backward = (j..=u).rev().fold(spec.identity(), |a, t| spec.mul(a, tau[t]));
        let len: usize = lens[j..=u].iter().sum();
        if meets_identity(spec, &tail, backward, &side(spec, &small[j - 1], &small[j]), len) {
            bad.push(format!("trailing run through quarter {j}"));
        }
    }
    Ok(bad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovRow {
    pub quarter: usize,
    pub size: usize,
    pub hits: usize,
    pub bound: f64,
}

impl MarkovRow {
    pub fn ok(&self) -> bool {
        self.hits as f64 <= self.bound
    }
}

fn size_ratio(quarter: &Block, block: &Block, j: usize) -> f64 {
    let ways = |b: &Block| -> f64 {
        match b.sign {
            Sign::Minus => binom(b.odd.len(), j.div_ceil(2)) as f64 * binom(b.even.len(), j / 2) as f64,
            Sign::Plus => binom(b.len(), j) as f64,
        }
    };
    let whole = ways(block);
    if whole == 0.0 {
        0.0
    } else {
        ways(quarter) / whole
    }
}

/// `|prod_j(T) ∩ F| <= 4K (ways in T / ways in D) |prod_j(D) ∩ F|` for the
/// first and last quarters, with `F = (initial segments of before)^-1 ∪
/// delta . (initial segments of after)`.
pub fn markov_audit(
    spec: &GroupSpec,
    plan: &BlockPlan,
    blocks: &[Block],
    k: usize,
    delta: GElem,
    before: &[GElem],
    after: &[GElem],
    cap: u64,
) -> Result<Vec<MarkovRow>> {
    let f: HashSet<GElem> = initial_segments(spec, before)
        .iter()
        .map(|&g| spec.inv(g))
        .chain(initial_segments(spec, after).iter().map(|&g| spec.mul(delta, g)))
        .collect();
    let u = plan.quarters.len();
    let mut rows = Vec::new();
    for h in [0, u - 1] {
        let q = &plan.quarters[h];
        let d = &blocks[q.source];
        for j in 1..=k {
            let hits = q.block.products_of_size(spec, j, cap)?.iter().filter(|g| f.contains(g)).count();
            let whole = d.products_of_size(spec, j, cap)?.iter().filter(|g| f.contains(g)).count();
            rows.push(MarkovRow {
                quarter: h + 1,
                size: j,
                hits,
                bound: 4.0 * k as f64 * size_ratio(&q.block, d, j) * whole as f64,
            });
        }
    }
    Ok(rows)
}

/// Which pool each position draws from: alternating odd/even for `-1`
/// quarters (even first when read from the end), a single pool otherwise.
fn pattern(block: &Block, from_end: bool) -> Vec<usize> {
    match block.sign {
        Sign::Plus => vec![0; block.len()],
        Sign::Minus => (0..block.len()).map(|i| (i + from_end as usize) % 2).collect(),
    }
}

fn pools(block: &Block) -> Vec<Vec<GElem>> {
    match block.sign {
        Sign::Plus => vec![block.elements.clone()],
        Sign::Minus => vec![block.odd.clone(), block.even.clone()],
    }
}

/// Completes a prefix uniformly at random along `pattern`.
fn complete(block: &Block, from_end: bool, prefix: &[GElem], rng: &mut impl Rng) -> Vec<GElem> {
    let pat = pattern(block, from_end);
    let mut ps = pools(block);
    for p in ps.iter_mut() {
        p.retain(|g| !prefix.contains(g));
        p.shuffle(rng);
    }
    let mut out = prefix.to_vec();
    for &c in &pat[prefix.len()..] {
        out.push(ps[c].pop().expect("pattern matches pool sizes"));
    }
    out
}

fn random_ordering(block: &Block, rng: &mut impl Rng) -> Vec<GElem> {
    match block.sign {
        Sign::Plus => {
            let mut v = block.elements.clone();
            v.shuffle(rng);
            v
        }
        Sign::Minus => {
            let (mut o, mut e) = (block.odd.clone(), block.even.clone());
            o.shuffle(rng);
            e.shuffle(rng);
            interleave(&o, &e)
        }
    }
}

/// Products of the first `k` elements (or of the last `k`, in sequence
/// order, when `from_end`).
fn boundary_products(spec: &GroupSpec, seq: &[GElem], k: usize, from_end: bool) -> Vec<GElem> {
    let n = seq.len();
    (1..=k.min(n))
        .map(|len| if from_end { spec.product(&seq[n - len..]) } else { spec.product(&seq[..len]) })
        .collect()
}

/// Uniform ordering of an outer quarter whose `k` boundary products avoid
/// `forbidden`; the boundary is the start, or the end when `from_end`.
pub fn sample_edge_ordering(
    spec: &GroupSpec,
    quarter: &Block,
    forbidden: &HashSet<GElem>,
    k: usize,
    from_end: bool,
    rng: &mut impl Rng,
    retries: usize,
) -> Result<Vec<GElem>> {
    for _ in 0..retries.max(1) {
        let t = random_ordering(quarter, rng);
        if boundary_products(spec, &t, k, from_end).iter().all(|g| !forbidden.contains(g)) {
            return Ok(t);
        }
    }
    Err(Error::RetriesExhausted { what: "edge ordering", retries })
}

fn prefixes(block: &Block, from_end: bool, k: usize) -> Vec<Vec<GElem>> {
    let pat = pattern(block, from_end);
    let ps = pools(block);
    let mut out = Vec::new();
    fn rec(pat: &[usize], ps: &[Vec<GElem>], k: usize, cur: &mut Vec<GElem>, out: &mut Vec<Vec<GElem>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for &g in &ps[pat[cur.len()]] {
            if !cur.contains(&g) {
                cur.push(g);
                rec(pat, ps, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(&pat, &ps, k.min(block.len()), &mut Vec::new(), &mut out);
    out
}

fn prefix_count(block: &Block, k: usize) -> u64 {
    let sizes: Vec<u64> = pools(block).iter().map(|p| p.len() as u64).collect();
    let pat = pattern(block, false);
    let mut used = vec![0u64; sizes.len()];
    let mut n = 1u64;
    for &c in pat.iter().take(k) {
        n = n.saturating_mul(sizes[c].saturating_sub(used[c]));
        used[c] += 1;
    }
    n
}

/// `tail` lists the last elements of the left quarter from the end inward.
fn pair_permissible(spec: &GroupSpec, tail: &[GElem], head: &[GElem]) -> bool {
    let mut left = spec.identity();
    for &t in tail {
        left = spec.mul(t, left);
        let mut acc = left;
        for &h in head {
            acc = spec.mul(acc, h);
            if spec.is_identity(acc) {
                return false;
            }
        }
    }
    true
}

/// Orderings of two adjacent quarters such that no run made of the last
/// `i <= k` elements of the left one and the first `s <= k` of the right
/// one multiplies to the identity. Uniform over such pairs.
pub fn sample_permissible_pair(
    spec: &GroupSpec,
    left: &Block,
    right: &Block,
    k: usize,
    rng: &mut impl Rng,
    retries: usize,
) -> Result<(Vec<GElem>, Vec<GElem>)> {
    let reversed = |tail: &[GElem], rng: &mut _| {
        let mut v = complete(left, true, tail, rng);
        v.reverse();
        v
    };
    if prefix_count(left, k).saturating_mul(prefix_count(right, k)) <= PAIR_ENUMERATION_LIMIT {
        let tails = prefixes(left, true, k);
        let heads = prefixes(right, false, k);
        let good: Vec<(&Vec<GElem>, &Vec<GElem>)> = tails
            .iter()
            .flat_map(|t| heads.iter().map(move |h| (t, h)))
            .filter(|(t, h)| pair_permissible(spec, t, h))
            .collect();
        let Some(&(t, h)) = good.choose(rng) else {
            return Err(Error::NoneFound("no permissible pair of quarter orderings".into()));
        };
        let l = reversed(t, rng);
        return Ok((l, complete(right, false, h, rng)));
    }
    for _ in 0..retries.max(1) {
        let l = random_ordering(left, rng);
        let r = random_ordering(right, rng);
        let tail: Vec<GElem> = l.iter().rev().take(k).copied().collect();
        if pair_permissible(spec, &tail, &r[..k.min(r.len())]) {
            return Ok((l, r));
        }
    }
    Err(Error::RetriesExhausted { what: "permissible pair", retries })
}

pub fn assemble(before: &[GElem], orderings: &[Vec<GElem>], after: &[GElem]) -> Vec<GElem> {
    let mut v = before.to_vec();
    for t in orderings {
        v.extend(t);
    }
    v.extend(after);
    v
}

/// The assembled sequence and its first defect, if any.
pub fn assemble_and_verify(
    spec: &GroupSpec,
    before: &[GElem],
    orderings: &[Vec<GElem>],
    after: &[GElem],
) -> (Vec<GElem>, Option<SequencingDefect>) {
    let v = assemble(before, orderings, after);
    let defect = find_defect(spec, &partial_products(spec, &v));
    (v, defect)
}

/// `floor(c2 R^(1/3))`, clamped to `[1, smallest block / 8]`.
pub fn choose_k(c2: f64, r: usize, blocks: &[Block]) -> usize {
    let smallest = blocks.iter().map(Block::len).min().unwrap_or(8);
    let raw = (c2 * (r.min(1 << 30) as f64).cbrt()).floor() as usize;
    raw.clamp(1, (smallest / 8).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRetries {
    pub partitions: usize,
    pub orderings: usize,
    pub samples: usize,
}

impl Default for BlockRetries {
    fn default() -> Self {
        BlockRetries { partitions: 20, orderings: 20, samples: 1000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub partitions_tried: usize,
    pub orderings_tried: usize,
    pub interval_rejections: usize,
    pub markov_rejections: usize,
    pub defects: usize,
    pub last_defect: Option<SequencingDefect>,
}

/// Places the quarters between `before` and `after` and returns a
/// sequencing of the whole, resampling partitions and orderings on failure.
#[allow(clippy::too_many_arguments)]
pub fn order_blocks(
    spec: &GroupSpec,
    blocks: &[Block],
    delta: GElem,
    k: usize,
    before: &[GElem],
    after: &[GElem],
    retries: BlockRetries,
    cap: u64,
    rng: &mut impl Rng,
) -> Result<(Vec<GElem>, BlockPlan, BlockStats)> {
    let mut stats = BlockStats::default();
    let inv_set = |seq: &[GElem]| -> HashSet<GElem> { initial_segments(spec, seq).iter().map(|&g| spec.inv(g)).collect() };
    let shifted = |seq: &[GElem]| -> HashSet<GElem> {
        initial_segments(spec, seq).iter().map(|&g| spec.mul(delta, g)).collect()
    };
    let forbid_first: HashSet<GElem> = inv_set(before).union(&shifted(after)).copied().collect();
    let forbid_last: HashSet<GElem> = inv_set(after).union(&shifted(before)).copied().collect();

    for _ in 0..retries.partitions.max(1) {
        stats.partitions_tried += 1;
        let plan = partition_blocks(spec, blocks, delta, rng)?;
        if !check_interval_conditions(spec, &plan, k, before, after, cap)?.is_empty() {
            stats.interval_rejections += 1;
            continue;
        }
        if !markov_audit(spec, &plan, blocks, k, delta, before, after, cap)?.iter().all(MarkovRow::ok) {
            stats.markov_rejections += 1;
            continue;
        }
        let u = plan.quarters.len();
        for _ in 0..retries.orderings.max(1) {
            stats.orderings_tried += 1;
            let mut ords: Vec<Vec<GElem>> = vec![vec![]; u];
            let attempt: Result<()> = (|| {
                ords[0] = sample_edge_ordering(spec, &plan.quarters[0].block, &forbid_first, k, false, rng, retries.samples)?;
                ords[u - 1] =
                    sample_edge_ordering(spec, &plan.quarters[u - 1].block, &forbid_last, k, true, rng, retries.samples)?;
                for j in 1..u / 2 {
                    let (l, r) = sample_permissible_pair(
                        spec,
                        &plan.quarters[2 * j - 1].block,
                        &plan.quarters[2 * j].block,
                        k,
                        rng,
                        retries.samples,
                    )?;
                    ords[2 * j - 1] = l;
                    ords[2 * j] = r;
                }
                Ok(())
            })();
            match attempt {
                Ok(()) => {}
                Err(Error::RetriesExhausted { .. }) | Err(Error::NoneFound(_)) => break,
                Err(e) => return Err(e),
            }
            let (seq, defect) = assemble_and_verify(spec, before, &ords, after);
            match defect {
                None => return Ok((seq, plan, stats)),
                Some(d) => {
                    stats.defects += 1;
                    stats.last_defect = Some(d);
                }
            }
        }
    }
    Err(Error::RetriesExhausted { what: "block ordering", retries: stats.partitions_tried })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::compute_delta;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(x: u64, a: u32) -> GElem {
        GElem::new(x, a)
    }

    fn lacunary(spec: &GroupSpec, m: u64, count: u32, a: u32) -> Vec<GElem> {
        (0..count).map(|i| g(spec.reduce((m << i) as i64), a)).collect()
    }

    #[test]
    fn partition_product_is_delta() {
        let spec = GroupSpec::dihedral(1_000_003).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs = lacunary(&spec, 777, 16, 1);
        let b1 = Block::minus(xs[..4].to_vec(), xs[4..8].to_vec());
        let b2 = Block::plus(lacunary(&spec, 31, 8, 0));
        let blocks = vec![b1, b2];
        let delta = compute_delta(&spec, &blocks);
        let plan = partition_blocks(&spec, &blocks, delta, &mut rng).unwrap();
        let order: Vec<(usize, u8)> = plan.quarters.iter().map(|q| (q.source, q.part)).collect();
        assert_eq!(order, vec![(0, 1), (0, 2), (1, 1), (1, 2), (0, 3), (0, 4), (1, 3), (1, 4)]);
        assert!(plan.quarters.iter().all(|q| q.block.len() == 2));
        assert!(plan.quarters.iter().filter(|q| q.source == 0).all(|q| q.block.odd.len() == 1));
    }

    #[test]
    fn interval_check_flags_identity() {
        let spec = GroupSpec::cyclic(101).unwrap();
        let q = |xs: &[u64], part: u8| {
            let b = Block::plus(xs.iter().map(|&x| g(x, 0)).collect());
            Quarter { source: 0, part, product: b.product(&spec), block: b }
        };
        // quarters 2 and 3 multiply to the identity
        let plan = BlockPlan { quarters: vec![q(&[1], 1), q(&[5], 2), q(&[96], 3), q(&[7], 4)] };
        let bad = check_interval_conditions(&spec, &plan, 1, &[], &[], 100).unwrap();
        assert!(bad.iter().any(|l| l == "interval [2, 3]"));
    }

    #[test]
    fn permissible_pair_enumeration() {
        let spec = GroupSpec::cyclic(101).unwrap();
        let left = Block::plus(vec![g(1, 0), g(2, 0)]);
        let right = Block::plus(vec![g(100, 0), g(50, 0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (l, r) = sample_permissible_pair(&spec, &left, &right, 1, &mut rng, 10).unwrap();
            assert!(!(l[1] == g(1, 0) && r[0] == g(100, 0)));
        }
        let only = Block::plus(vec![g(1, 0)]);
        let inv = Block::plus(vec![g(100, 0)]);
        assert!(matches!(sample_permissible_pair(&spec, &only, &inv, 1, &mut rng, 10), Err(Error::NoneFound(_))));
    }

    #[test]
    fn pair_check_uses_the_actual_run() {
        let spec = GroupSpec::dihedral(101).unwrap();
        let (a, b, c) = (g(3, 1), g(10, 1), g(5, 0));
        // run: a b | c  ->  a.b.c
        let run = spec.product(&[a, b, c]);
        assert_eq!(pair_permissible(&spec, &[b, a], &[c]), !spec.is_identity(run) && !spec.is_identity(spec.mul(b, c)));
        let cinv = spec.inv(spec.mul(a, b));
        assert!(!pair_permissible(&spec, &[b, a], &[cinv]));
    }

    #[test]
    fn edge_ordering_avoids_forbidden() {
        let spec = GroupSpec::cyclic(101).unwrap();
        let quarter = Block::plus(vec![g(1, 0), g(2, 0), g(3, 0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let forbidden: HashSet<GElem> = [g(1, 0), g(2, 0)].into_iter().collect();
        for _ in 0..10 {
            let t = sample_edge_ordering(&spec, &quarter, &forbidden, 1, false, &mut rng, 100).unwrap();
            assert_eq!(t[0], g(3, 0));
            let t = sample_edge_ordering(&spec, &quarter, &forbidden, 1, true, &mut rng, 100).unwrap();
            assert_eq!(t[2], g(3, 0));
        }
        let all: HashSet<GElem> = quarter.elements.iter().copied().collect();
        assert!(sample_edge_ordering(&spec, &quarter, &all, 1, false, &mut rng, 5).is_err());
    }

    #[test]
    fn minus_patterns_alternate() {
        let b = Block::minus(vec![g(1, 1), g(2, 1)], vec![g(3, 1), g(4, 1)]);
        assert_eq!(pattern(&b, false), vec![0, 1, 0, 1]);
        assert_eq!(pattern(&b, true), vec![1, 0, 1, 0]);
        assert_eq!(prefixes(&b, true, 2).len(), 4);
        assert_eq!(prefix_count(&b, 3), 2 * 2 * 1);
    }

    #[test]
    fn k_choice() {
        let b = Block::plus(vec![g(1, 0); 16]);
        assert_eq!(choose_k(0.5, 8, &[b.clone()]), 1);
        assert_eq!(choose_k(2.0, 64, &[b.clone()]), 2);
        assert_eq!(choose_k(0.1, 8, &[b]), 1);
    }

    #[test]
    fn whole_phase_on_planted_blocks() {
        let spec = GroupSpec::cyclic(1_000_003).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let blocks = vec![
            Block::plus(lacunary(&spec, 1001, 8, 0)),
            Block::plus(lacunary(&spec, 313_131, 8, 0)),
            Block::plus(lacunary(&spec, 1001 << 8, 8, 0)),
        ];
        let delta = compute_delta(&spec, &blocks);
        let (seq, plan, _) =
            order_blocks(&spec, &blocks, delta, 1, &[], &[], BlockRetries::default(), 1 << 16, &mut rng).unwrap();
        assert_eq!(plan.quarters.len(), 12);
        assert_eq!(seq.len(), 24);
        assert!(crate::sequencing::is_sequencing(&spec, &seq));
        assert_eq!(spec.product(&seq), delta);
    }
}
