//! Splitting a set into a rectified remainder and dissociated blocks.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dissociation::{certify_dissociated, greedy_certified, interleave, SignedSums};
use crate::error::{Error, Result};
use crate::group::{GElem, GElemWire, GroupSpec, Sign};
use crate::rectify::{apply_scaling, rectify_set, RParams};

pub const DEFAULT_PRODUCT_CAP: u64 = 1 << 18;

/// A dissociated block whose elements all act on `Z_p` by the same sign.
/// Blocks acting by `-1` carry an equal split into odd and even halves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub sign: Sign,
    pub elements: Vec<GElem>,
    pub odd: Vec<GElem>,
    pub even: Vec<GElem>,
}

impl Block {
    pub fn plus(elements: Vec<GElem>) -> Self {
        Block { sign: Sign::Plus, elements, odd: vec![], even: vec![] }
    }

    pub fn minus(odd: Vec<GElem>, even: Vec<GElem>) -> Self {
        let elements = odd.iter().chain(&even).copied().collect();
        Block { sign: Sign::Minus, elements, odd, even }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Odd and even halves interleaved for `-1` blocks, the elements as
    /// stored otherwise.
    pub fn canonical_order(&self) -> Vec<GElem> {
        match self.sign {
            Sign::Minus => interleave(&self.odd, &self.even),
            Sign::Plus => self.elements.clone(),
        }
    }

    pub fn product(&self, spec: &GroupSpec) -> GElem {
        spec.product(&self.canonical_order())
    }

    pub fn scaled(&self, spec: &GroupSpec, lambda: u64) -> Block {
        let s = |v: &[GElem]| apply_scaling(spec, lambda, v);
        Block { sign: self.sign, elements: s(&self.elements), odd: s(&self.odd), even: s(&self.even) }
    }

    /// Products of exactly `j` elements: alternating selections of
    /// `ceil(j/2)` odd and `floor(j/2)` even elements for `-1` blocks, plain
    /// `j`-subsets otherwise. `j = 0` gives the identity.
    pub fn products_of_size(&self, spec: &GroupSpec, j: usize, cap: u64) -> Result<BTreeSet<GElem>> {
        let (pools, sizes): (Vec<&[GElem]>, Vec<usize>) = match self.sign {
            Sign::Minus => (vec![&self.odd, &self.even], vec![j.div_ceil(2), j / 2]),
            Sign::Plus => (vec![&self.elements], vec![j]),
        };
        let count = pools
            .iter()
            .zip(&sizes)
            .map(|(p, &k)| binom(p.len(), k))
            .fold(1u64, |a, b| a.saturating_mul(b));
        if count > cap {
            return Err(Error::CapExceeded { what: "block products", size: count as usize, cap: cap as usize });
        }
        let mut out = BTreeSet::new();
        let choices: Vec<Vec<Vec<GElem>>> = pools
            .iter()
            .zip(&sizes)
            .map(|(p, &k)| subsets(p, k))
            .collect();
        match self.sign {
            Sign::Minus => {
                for o in &choices[0] {
                    for e in &choices[1] {
                        out.insert(spec.product(&interleave(o, e)));
                    }
                }
            }
            Sign::Plus => {
                for s in &choices[0] {
                    out.insert(spec.product(s));
                }
            }
        }
        Ok(out)
    }

    /// Union of [`Block::products_of_size`] over `0..=m`.
    pub fn products_up_to(&self, spec: &GroupSpec, m: usize, cap: u64) -> Result<BTreeSet<GElem>> {
        let mut out = BTreeSet::new();
        for j in 0..=m.min(self.len()) {
            out.extend(self.products_of_size(spec, j, cap)?);
        }
        Ok(out)
    }
}

pub(crate) fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

fn subsets(items: &[GElem], k: usize) -> Vec<Vec<GElem>> {
    fn rec(items: &[GElem], k: usize, from: usize, cur: &mut Vec<GElem>, out: &mut Vec<Vec<GElem>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Product over the `-1` blocks (halves interleaved), then over the `+1`
/// blocks. Every block product lies in the kernel of the sign map, so the
/// result does not depend on block order or on orderings inside halves.
pub fn compute_delta(spec: &GroupSpec, blocks: &[Block]) -> GElem {
    let minus = blocks.iter().filter(|b| b.sign == Sign::Minus);
    let plus = blocks.iter().filter(|b| b.sign == Sign::Plus);
    minus.chain(plus).fold(spec.identity(), |acc, b| spec.mul(acc, b.product(spec)))
}

fn by_magnitude(spec: &GroupSpec, items: &[GElem], rng: &mut impl Rng) -> Vec<GElem> {
    let mut v = items.to_vec();
    v.sort();
    v.shuffle(rng);
    v.sort_by_key(|g| std::cmp::Reverse(spec.lift(g.x).unsigned_abs()));
    v
}

fn form_block(sign: Sign, chosen: &[GElem], split: &[usize]) -> Block {
    match sign {
        Sign::Plus => Block::plus(chosen.to_vec()),
        Sign::Minus => {
            let half = chosen.len() / 2;
            let odd = split[..half].iter().map(|&i| chosen[i]).collect();
            let even = split[half..].iter().map(|&i| chosen[i]).collect();
            Block::minus(odd, even)
        }
    }
}

/// Greedily grows a block of the given sign from `pool`, largest
/// magnitudes first, keeping the x-projection free of signed relations.
/// The size is cut down to a multiple of 8 inside `window`. When `reject`
/// refuses the block product, single elements are swapped for unused
/// candidates until an acceptable product appears.
pub(crate) fn extract_block_with(
    spec: &GroupSpec,
    pool: &[GElem],
    window: (usize, usize),
    sign: Sign,
    reject: &dyn Fn(GElem) -> bool,
    rng: &mut impl Rng,
) -> Result<Block> {
    let (lo, hi) = window;
    let cands: Vec<GElem> =
        by_magnitude(spec, pool, rng).into_iter().filter(|&g| spec.sign_of(g) == sign && g.x != 0).collect();
    if cands.is_empty() {
        return Err(Error::NoneFound(format!("no {sign:?} candidates in the pool")));
    }
    let mut sums = SignedSums::new(spec.p());
    let mut chosen = Vec::new();
    for &c in &cands {
        if chosen.len() >= hi {
            break;
        }
        if sums.accepts(c.x) {
            sums.add(c.x);
            chosen.push(c);
        }
    }
    let size = chosen.len() / 8 * 8;
    if size < lo.max(8) {
        return Err(Error::NoneFound(format!("largest block found has {} elements, window {lo}..={hi}", chosen.len())));
    }
    chosen.truncate(size);
    let mut split: Vec<usize> = (0..size).collect();
    split.shuffle(rng);

    let block = form_block(sign, &chosen, &split);
    if !reject(block.product(spec)) {
        return Ok(block);
    }
    if sign == Sign::Minus {
        // Exchanging an odd and an even element changes the product.
        let half = size / 2;
        for i in 0..half {
            for j in half..size {
                let mut s = split.clone();
                s.swap(i, j);
                let b = form_block(sign, &chosen, &s);
                if !reject(b.product(spec)) {
                    return Ok(b);
                }
            }
        }
    }
    let used: HashSet<GElem> = chosen.iter().copied().collect();
    for pos in (0..size).rev() {
        for &c in cands.iter().filter(|c| !used.contains(c)) {
            let mut trial = chosen.clone();
            trial[pos] = c;
            if !certify_dissociated(spec, &trial) {
                continue;
            }
            let b = form_block(sign, &trial, &split);
            if !reject(b.product(spec)) {
                return Ok(b);
            }
        }
    }
    Err(Error::NoneFound("every candidate block has a forbidden product".into()))
}

/// Block extraction with an optional forbidden canonical product.
pub fn extract_block(
    spec: &GroupSpec,
    pool: &[GElem],
    window: (usize, usize),
    sign: Sign,
    forbidden_product: Option<GElem>,
    rng: &mut impl Rng,
) -> Result<Block> {
    extract_block_with(spec, pool, window, sign, &|q| Some(q) == forbidden_product, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeParams {
    pub r: RParams,
    /// Allowed block sizes; the final size is a multiple of 8.
    pub window: (usize, usize),
}

impl Default for DecomposeParams {
    fn default() -> Self {
        DecomposeParams { r: RParams::default(), window: (8, 32) }
    }
}

/// `E` together with the blocks, all in the scaled coordinates given by
/// `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub lambda: u64,
    pub r: usize,
    pub window: (usize, usize),
    pub remainder: Vec<GElem>,
    pub blocks: Vec<Block>,
    pub delta: Option<GElem>,
    /// Size of a greedy certified-dissociated subset of the remainder; a
    /// lower bound for its dimension.
    pub remainder_dim: usize,
    /// The kernel elements with zero x-component multiply to the identity.
    pub zero_part_trivial: bool,
    pub notes: Vec<String>,
}

impl Decomposition {
    pub fn s(&self) -> usize {
        self.blocks.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    /// Every element has zero x-component; sequenced inside `H`.
    Delegated { ordering: Vec<GElem> },
    Decomposed(Decomposition),
}

fn interval_denominator(remainder_len: usize) -> f64 {
    90.0 * (remainder_len as f64 + 1.0)
}

fn zero_part(spec: &GroupSpec, remainder: &[GElem]) -> Vec<GElem> {
    remainder.iter().copied().filter(|&g| g.x == 0 && spec.sign_of(g) == Sign::Plus).collect()
}

/// Splits `set` into dissociated blocks and a remainder with short x-components.
pub fn structure_decompose(
    spec: &GroupSpec,
    set: &[GElem],
    params: &DecomposeParams,
    rng: &mut impl Rng,
) -> Result<Structure> {
    if set.is_empty() {
        return Err(Error::InvalidElement("empty set".into()));
    }
    crate::sequencing::Ordering::new(set.to_vec())?.validate(spec)?;
    if set.iter().any(|&g| spec.is_identity(g)) {
        return Err(Error::InvalidElement("set contains the identity".into()));
    }
    if set.iter().all(|g| g.x == 0) {
        let ordering = crate::oracle::search_sequencing(spec, set).ok_or(Error::NotSequenceable)?;
        return Ok(Structure::Delegated { ordering });
    }

    let r = params.r.r(spec.p(), set.len());
    let mut notes = Vec::new();
    let mut pool = set.to_vec();
    let mut blocks: Vec<Block> = Vec::new();
    let mut cumulative = spec.identity();
    loop {
        let dim = greedy_certified(spec, &by_magnitude(spec, &pool, rng)).len();
        if dim < r {
            break;
        }
        let lead = *pool.iter().max_by_key(|g| (spec.lift(g.x).unsigned_abs(), std::cmp::Reverse(**g))).unwrap();
        let first = spec.sign_of(lead);
        let acc = cumulative;
        let reject = move |q: GElem| spec.mul(acc, q).x == 0;
        let mut found = None;
        for sign in [first, first * Sign::Minus] {
            match extract_block_with(spec, &pool, params.window, sign, &reject, rng) {
                Ok(b) => {
                    found = Some(b);
                    break;
                }
                Err(Error::NoneFound(why)) => notes.push(format!("block {}: {sign:?}: {why}", blocks.len() + 1)),
                Err(e) => return Err(e),
            }
        }
        let Some(block) = found else { break };
        let taken: HashSet<GElem> = block.elements.iter().copied().collect();
        pool.retain(|g| !taken.contains(g));
        cumulative = spec.mul(cumulative, block.product(spec));
        blocks.push(block);
    }
    let remainder_dim = greedy_certified(spec, &by_magnitude(spec, &pool, rng)).len();

    if blocks.is_empty() {
        let (lambda, remainder) = match rectify_set(spec, &pool, interval_denominator(pool.len()))
            .or_else(|_| rectify_set(spec, &pool, 4.0 * pool.len() as f64))
        {
            Ok((res, img)) => (res.lambda, img),
            Err(e) => {
                notes.push(format!("remainder left unscaled: {e}"));
                (1, pool.clone())
            }
        };
        let zero_part_trivial = {
            let z = zero_part(spec, &remainder);
            !z.is_empty() && spec.is_identity(spec.product(&z))
        };
        if remainder_dim >= r {
            notes.push(format!("no block extracted although the remainder has dimension >= {remainder_dim}"));
        }
        return Ok(Structure::Decomposed(Decomposition {
            lambda,
            r,
            window: params.window,
            remainder,
            blocks,
            delta: None,
            remainder_dim,
            zero_part_trivial,
            notes,
        }));
    }
    if remainder_dim >= r {
        return Err(Error::DecompositionFailure {
            stage: "extract",
            detail: format!("remainder dimension {remainder_dim} >= R = {r} but no further block exists"),
        });
    }

    let delta_pre = compute_delta(spec, &blocks);
    let mut with_delta = pool.clone();
    with_delta.push(delta_pre);
    let (res, _) = rectify_set(spec, &with_delta, interval_denominator(pool.len()))
        .map_err(|e| Error::DecompositionFailure { stage: "rectify", detail: e.to_string() })?;
    let mut lambda = res.lambda;
    if spec.lift(spec.scale(lambda, delta_pre).x) < 0 {
        lambda = spec.p() - lambda;
    }
    let remainder = apply_scaling(spec, lambda, &pool);
    let blocks: Vec<Block> = blocks.iter().map(|b| b.scaled(spec, lambda)).collect();
    let delta = compute_delta(spec, &blocks);
    let blocks = arrange_ends(spec, blocks, delta, &mut notes)?;
    let z = zero_part(spec, &remainder);
    let d = Decomposition {
        lambda,
        r,
        window: params.window,
        zero_part_trivial: !z.is_empty() && spec.is_identity(spec.product(&z)),
        remainder,
        blocks,
        delta: Some(delta),
        remainder_dim,
        notes,
    };
    let original: Vec<GElem> = set.to_vec();
    let violations = check_decomposition(spec, &original, &d);
    if !violations.is_empty() {
        return Err(Error::DecompositionFailure { stage: "invariants", detail: violations.join("; ") });
    }
    Ok(Structure::Decomposed(d))
}

fn ends_ok(spec: &GroupSpec, first: &Block, last: &Block, delta: GElem) -> bool {
    if first.sign != last.sign {
        return false;
    }
    let mut v: Vec<GElem> = first.elements.clone();
    v.extend(&last.elements);
    v.push(delta);
    certify_dissociated(spec, &v)
}

/// Reorders the blocks so that the first and last share a sign and
/// together with `delta` stay dissociated. Falls back to splitting one block
/// into pieces placed at both ends.
fn arrange_ends(spec: &GroupSpec, blocks: Vec<Block>, delta: GElem, notes: &mut Vec<String>) -> Result<Vec<Block>> {
    let s = blocks.len();
    if s >= 2 {
        if ends_ok(spec, &blocks[0], &blocks[s - 1], delta) {
            return Ok(blocks);
        }
        for i in 0..s {
            for j in 0..s {
                if i != j && ends_ok(spec, &blocks[i], &blocks[j], delta) {
                    let mut out = vec![blocks[i].clone()];
                    out.extend((0..s).filter(|&k| k != i && k != j).map(|k| blocks[k].clone()));
                    out.push(blocks[j].clone());
                    notes.push(format!("blocks {} and {} moved to the ends", i + 1, j + 1));
                    return Ok(out);
                }
            }
        }
    }
    for b in 0..s {
        if let Some((third, second, fourth)) = quarter_split(spec, &blocks[b], delta) {
            let mut out = vec![third, second];
            out.extend((0..s).filter(|&k| k != b).map(|k| blocks[k].clone()));
            out.push(fourth);
            notes.push(format!("block {} split across both ends", b + 1));
            return Ok(out);
        }
    }
    Err(Error::DecompositionFailure {
        stage: "end blocks",
        detail: format!("no arrangement of {s} blocks keeps the end blocks and delta dissociated"),
    })
}

/// Halves a block, keeps a half that stays dissociated with `delta`, and
/// halves that one again. Needs the block size divisible by 64 so every
/// piece remains a multiple of 8.
fn quarter_split(spec: &GroupSpec, block: &Block, delta: GElem) -> Option<(Block, Block, Block)> {
    let n = block.len();
    if n % 64 != 0 {
        return None;
    }
    let halves = |b: &Block| -> (Block, Block) {
        match b.sign {
            Sign::Plus => {
                let h = b.len() / 2;
                (Block::plus(b.elements[..h].to_vec()), Block::plus(b.elements[h..].to_vec()))
            }
            Sign::Minus => {
                let h = b.odd.len() / 2;
                (
                    Block::minus(b.odd[..h].to_vec(), b.even[..h].to_vec()),
                    Block::minus(b.odd[h..].to_vec(), b.even[h..].to_vec()),
                )
            }
        }
    };
    let (a, b) = halves(block);
    let with = |x: &Block| {
        let mut v = x.elements.clone();
        v.push(delta);
        certify_dissociated(spec, &v)
    };
    let (keep, other) = if with(&a) {
        (a, b)
    } else if with(&b) {
        (b, a)
    } else {
        return None;
    };
    let (third, fourth) = halves(&keep);
    Some((third, other, fourth))
}

/// Every violated condition, as a readable line. Empty when the
/// decomposition is sound.
pub fn check_decomposition(spec: &GroupSpec, original: &[GElem], d: &Decomposition) -> Vec<String> {
    let mut bad = Vec::new();
    let image: BTreeSet<GElem> = apply_scaling(spec, d.lambda, original).into_iter().collect();
    let mut parts: Vec<GElem> = d.remainder.clone();
    for b in &d.blocks {
        parts.extend(&b.elements);
    }
    let as_set: BTreeSet<GElem> = parts.iter().copied().collect();
    if as_set.len() != parts.len() {
        bad.push("parts overlap".into());
    }
    if as_set != image {
        bad.push("parts do not cover the scaled input".into());
    }
    let s = d.blocks.len();
    if s == 0 {
        return bad;
    }
    if d.remainder_dim >= d.r {
        bad.push(format!("(i) remainder dimension {} >= R = {}", d.remainder_dim, d.r));
    }
    let (lo, hi) = d.window;
    for (j, b) in d.blocks.iter().enumerate() {
        let n = b.len();
        if n % 8 != 0 || n == 0 {
            bad.push(format!("(ii) block {} has size {n}", j + 1));
        }
        if n > hi || (n < lo && !d.notes.iter().any(|m| m.contains("split"))) {
            bad.push(format!("(ii) block {} size {n} outside {lo}..={hi}", j + 1));
        }
        if !certify_dissociated(spec, &b.elements) {
            bad.push(format!("(ii) block {} not certified dissociated", j + 1));
        }
        if b.elements.iter().any(|&g| spec.sign_of(g) != b.sign) {
            bad.push(format!("(iii) block {} is not homogeneous", j + 1));
        }
        if b.sign == Sign::Minus {
            let halves: BTreeSet<GElem> = b.odd.iter().chain(&b.even).copied().collect();
            let all: BTreeSet<GElem> = b.elements.iter().copied().collect();
            if b.odd.len() != b.even.len() || halves != all {
                bad.push(format!("(iv) block {} halves are not an equal split", j + 1));
            }
        }
    }
    if d.blocks[0].sign != d.blocks[s - 1].sign {
        bad.push("(iii) first and last blocks differ in sign".into());
    }
    let Some(delta) = d.delta else {
        bad.push("(iv) delta missing".into());
        return bad;
    };
    if compute_delta(spec, &d.blocks) != delta {
        bad.push("(iv) delta does not match the blocks".into());
    }
    if delta.x == 0 || spec.lift(delta.x) <= 0 {
        bad.push(format!("(iv) delta x-component {} is not positive", spec.lift(delta.x)));
    }
    if spec.sign_of(delta) != Sign::Plus {
        bad.push("(iv) delta does not act trivially".into());
    }
    let half = spec.p() as f64 / interval_denominator(d.remainder.len());
    if let Some(g) = d.remainder.iter().chain([&delta]).find(|g| spec.lift(g.x).unsigned_abs() as f64 >= half) {
        bad.push(format!("(iv) {:?} outside (-{half:.2}, {half:.2})", spec.to_wire(*g)));
    }
    let mut ends = d.blocks[0].elements.clone();
    if s > 1 {
        ends.extend(&d.blocks[s - 1].elements);
    }
    ends.push(delta);
    if !certify_dissociated(spec, &ends) {
        bad.push("(v) first block, last block and delta are not certified dissociated".into());
    }
    if 2 * d.remainder.len() < d.r {
        bad.push(format!("|E| = {} below R/2 = {}", d.remainder.len(), d.r as f64 / 2.0));
    }
    bad
}

/// JSON-friendly view with elements in wire form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDump {
    pub sign: i64,
    pub odd: Vec<GElemWire>,
    pub even: Vec<GElemWire>,
    pub elements: Vec<GElemWire>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDump {
    pub lambda: u64,
    pub r: usize,
    pub window: (usize, usize),
    pub remainder: Vec<GElemWire>,
    pub blocks: Vec<BlockDump>,
    pub delta: Option<GElemWire>,
    pub remainder_dim: usize,
    pub zero_part_trivial: bool,
    pub notes: Vec<String>,
}

impl Decomposition {
    pub fn dump(&self, spec: &GroupSpec) -> DecompositionDump {
        DecompositionDump {
            lambda: self.lambda,
            r: self.r,
            window: self.window,
            remainder: spec.elems_to_wire(&self.remainder),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDump {
                    sign: b.sign.value(),
                    odd: spec.elems_to_wire(&b.odd),
                    even: spec.elems_to_wire(&b.even),
                    elements: spec.elems_to_wire(&b.elements),
                })
                .collect(),
            delta: self.delta.map(|g| spec.to_wire(g)),
            remainder_dim: self.remainder_dim,
            zero_part_trivial: self.zero_part_trivial,
            notes: self.notes.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(x: u64, a: u32) -> GElem {
        GElem::new(x, a)
    }

    #[test]
    fn delta_examples() {
        let d = GroupSpec::dihedral(101).unwrap();
        let b = Block::minus(vec![g(1, 1), g(2, 1)], vec![g(3, 1), g(4, 1)]);
        assert_eq!(compute_delta(&d, &[b.clone()]), g(101 - 4, 0));
        let b0 = Block::plus(vec![g(1, 0), g(2, 0), g(5, 0)]);
        assert_eq!(compute_delta(&d, &[b0.clone()]), g(8, 0));
        assert_eq!(compute_delta(&d, &[b0.clone(), b.clone()]), compute_delta(&d, &[b, b0]));
    }

    #[test]
    fn delta_ignores_half_orderings() {
        let d = GroupSpec::dihedral(1009).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let odd = vec![g(10, 1), g(200, 1), g(33, 1), g(7, 1)];
        let even = vec![g(500, 1), g(81, 1), g(999, 1), g(2, 1)];
        let base = compute_delta(&d, &[Block::minus(odd.clone(), even.clone())]);
        for _ in 0..10 {
            let (mut o, mut e) = (odd.clone(), even.clone());
            o.shuffle(&mut rng);
            e.shuffle(&mut rng);
            assert_eq!(compute_delta(&d, &[Block::minus(o, e)]), base);
        }
    }

    #[test]
    fn products_of_size_examples() {
        let d = GroupSpec::dihedral(101).unwrap();
        let b = Block::minus(vec![g(1, 1)], vec![g(3, 1)]);
        let two: Vec<GElem> = b.products_of_size(&d, 2, 100).unwrap().into_iter().collect();
        assert_eq!(two, vec![g(99, 0)]);
        let zero: Vec<GElem> = b.products_of_size(&d, 0, 100).unwrap().into_iter().collect();
        assert_eq!(zero, vec![d.identity()]);
        let p = Block::plus(vec![g(1, 0), g(2, 0), g(5, 0)]);
        assert_eq!(p.products_up_to(&d, 1, 100).unwrap().len(), 4);
    }

    fn lacunary(spec: &GroupSpec, m: u64, count: u32, a: u32) -> Vec<GElem> {
        (0..count).map(|i| g(spec.reduce((m << i) as i64), a)).collect()
    }

    #[test]
    fn extract_planted_block() {
        let spec = GroupSpec::dihedral(1_000_003).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pool = lacunary(&spec, 12345, 8, 1);
        let b = extract_block(&spec, &pool, (8, 8), Sign::Minus, None, &mut rng).unwrap();
        let got: BTreeSet<GElem> = b.elements.iter().copied().collect();
        assert_eq!(got, pool.iter().copied().collect());
        assert_eq!(b.odd.len(), 4);
        assert!(crate::dissociation::is_dissociated(&spec, &b.elements).unwrap().0);

        assert!(matches!(
            extract_block(&spec, &lacunary(&spec, 7, 8, 0), (8, 8), Sign::Minus, None, &mut rng),
            Err(Error::NoneFound(_))
        ));
    }

    #[test]
    fn forbidden_product_forces_a_swap() {
        let spec = GroupSpec::dihedral(1_000_003).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pool = lacunary(&spec, 3, 9, 0);
        let first = extract_block(&spec, &pool, (8, 8), Sign::Plus, None, &mut rng).unwrap();
        let forbidden = first.product(&spec);
        let b = extract_block(&spec, &pool, (8, 8), Sign::Plus, Some(forbidden), &mut rng).unwrap();
        assert_ne!(b.product(&spec), forbidden);
        let overlap = b.elements.iter().filter(|e| first.elements.contains(e)).count();
        assert_eq!(overlap, 7);
    }

    #[test]
    fn delegated_when_all_x_zero() {
        let spec = GroupSpec::dihedral(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = structure_decompose(&spec, &[g(0, 1)], &DecomposeParams::default(), &mut rng).unwrap();
        assert_eq!(s, Structure::Delegated { ordering: vec![g(0, 1)] });
    }

    #[test]
    fn small_cyclic_set_stays_whole() {
        let spec = GroupSpec::cyclic(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let set: Vec<GElem> = [3u64, 17, 40, 77, 90].iter().map(|&x| g(x, 0)).collect();
        let params = DecomposeParams { r: RParams { c1: 0.5, override_r: Some(10) }, window: (8, 32) };
        let Structure::Decomposed(d) = structure_decompose(&spec, &set, &params, &mut rng).unwrap() else {
            panic!("expected a decomposition")
        };
        assert_eq!(d.s(), 0);
        assert_eq!(d.remainder.len(), 5);
        assert!(check_decomposition(&spec, &set, &d).is_empty());
    }
}
