//! Dissociated sets: exact testing for small sets, a fast sound test for
//! large ones, dimension, span membership, absorption and alternating
//! products.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GElem, GroupSpec, Sign};

pub const DEFAULT_DISSOCIATION_CAP: usize = 12;
pub const DEFAULT_ALTERNATING_CAP: u64 = 1 << 20;

/// An ordered signed product of distinct elements of a set, given by indices
/// into that set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedWord {
    pub permutation: Vec<usize>,
    pub exponents: Vec<i8>,
}

impl SignedWord {
    pub fn replay(&self, spec: &GroupSpec, set: &[GElem]) -> GElem {
        self.permutation
            .iter()
            .zip(&self.exponents)
            .fold(spec.identity(), |acc, (&i, &e)| spec.mul(acc, spec.pow_sign(set[i], e)))
    }
}

/// A nonempty signed word over `D` evaluating to the identity.
pub type DissociationWitness = SignedWord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCertificate {
    pub target: crate::group::GElemWire,
    pub word: SignedWord,
}

/// Depth-first search over `(used mask, product)` states for a signed word
/// (nonempty unless `allow_empty`) whose value is `target`.
fn find_word(spec: &GroupSpec, set: &[GElem], target: GElem, allow_empty: bool) -> Option<SignedWord> {
    if allow_empty && target == spec.identity() {
        return Some(SignedWord { permutation: vec![], exponents: vec![] });
    }
    let inverses: Vec<GElem> = set.iter().map(|&g| spec.inv(g)).collect();
    let mut visited: HashSet<(u32, GElem)> = HashSet::new();
    let mut path: Vec<(usize, i8)> = Vec::new();

    fn go(
        spec: &GroupSpec,
        set: &[GElem],
        inverses: &[GElem],
        target: GElem,
        mask: u32,
        prod: GElem,
        visited: &mut HashSet<(u32, GElem)>,
        path: &mut Vec<(usize, i8)>,
    ) -> bool {
        for i in 0..set.len() {
            if mask & (1 << i) != 0 {
                continue;
            }
            for e in [1i8, -1] {
                let factor = if e == 1 { set[i] } else { inverses[i] };
                if e == -1 && inverses[i] == set[i] {
                    continue;
                }
                let q = spec.mul(prod, factor);
                path.push((i, e));
                if q == target {
                    return true;
                }
                let m = mask | (1 << i);
                if visited.insert((m, q)) && go(spec, set, inverses, target, m, q, visited, path) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }

    if go(spec, set, &inverses, target, 0, spec.identity(), &mut visited, &mut path) {
        Some(SignedWord {
            permutation: path.iter().map(|&(i, _)| i).collect(),
            exponents: path.iter().map(|&(_, e)| e).collect(),
        })
    } else {
        None
    }
}

fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded { what, size, cap })
    } else {
        Ok(())
    }
}

/// Exact test. Returns a witness word evaluating to the identity when `set`
/// is not dissociated.
pub fn is_dissociated(spec: &GroupSpec, set: &[GElem]) -> Result<(bool, Option<DissociationWitness>)> {
    is_dissociated_capped(spec, set, DEFAULT_DISSOCIATION_CAP)
}

pub fn is_dissociated_capped(
    spec: &GroupSpec,
    set: &[GElem],
    cap: usize,
) -> Result<(bool, Option<DissociationWitness>)> {
    check_cap("is_dissociated", set.len(), cap.min(31))?;
    match find_word(spec, set, spec.identity(), false) {
        Some(w) => Ok((false, Some(w))),
        None => Ok((true, None)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMode {
    /// Greedy: no element of `B \ D` can be added.
    #[default]
    Maximal,
    /// Largest dissociated subset, by exhaustive search.
    Maximum,
}

/// Dimension of `set` together with the dissociated subset attaining it.
pub fn dimension(spec: &GroupSpec, set: &[GElem], mode: DimensionMode) -> Result<(usize, Vec<GElem>)> {
    match mode {
        DimensionMode::Maximal => {
            let mut d: Vec<GElem> = Vec::new();
            for &b in set {
                if d.contains(&b) {
                    continue;
                }
                d.push(b);
                check_cap("dimension", d.len(), DEFAULT_DISSOCIATION_CAP)?;
                if !is_dissociated(spec, &d)?.0 {
                    d.pop();
                }
            }
            Ok((d.len(), d))
        }
        DimensionMode::Maximum => {
            check_cap("dimension (maximum)", set.len(), DEFAULT_DISSOCIATION_CAP)?;
            let mut best = Vec::new();
            let mut cur = Vec::new();
            max_search(spec, set, 0, &mut cur, &mut best)?;
            Ok((best.len(), best))
        }
    }
}

fn max_search(spec: &GroupSpec, set: &[GElem], from: usize, cur: &mut Vec<GElem>, best: &mut Vec<GElem>) -> Result<()> {
    if cur.len() > best.len() {
        *best = cur.clone();
    }
    for i in from..set.len() {
        if cur.len() + (set.len() - i) <= best.len() {
            break;
        }
        if cur.contains(&set[i]) {
            continue;
        }
        cur.push(set[i]);
        if is_dissociated(spec, cur)?.0 {
            max_search(spec, set, i + 1, cur, best)?;
        }
        cur.pop();
    }
    Ok(())
}

/// Whether `x` is an ordered signed product over some subset of `d`. The
/// empty product counts, so the identity is always in the span.
pub fn in_span(spec: &GroupSpec, x: GElem, d: &[GElem]) -> Result<(bool, Option<SpanCertificate>)> {
    check_cap("in_span", d.len(), DEFAULT_DISSOCIATION_CAP)?;
    Ok(match find_word(spec, d, x, true) {
        Some(word) => (true, Some(SpanCertificate { target: spec.to_wire(x), word })),
        None => (false, None),
    })
}

/// Picks a side whose union with `x` stays dissociated; side 1 wins ties.
pub fn absorb(spec: &GroupSpec, d1: &[GElem], d2: &[GElem], x: GElem) -> Result<u8> {
    if spec.is_identity(x) {
        return Err(Error::InvalidElement("cannot absorb the identity".into()));
    }
    for (side, d) in [(1u8, d1), (2u8, d2)] {
        let mut with = d.to_vec();
        with.push(x);
        if is_dissociated(spec, &with)?.0 {
            return Ok(side);
        }
    }
    Err(Error::LemmaViolation(format!("{x:?} extends neither side")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternatingProducts {
    pub products: BTreeSet<GElem>,
    pub selections: u64,
    pub all_distinct: bool,
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

/// Interleaves `odd` and `even` starting with `odd`; the counts must differ
/// by at most one in favour of `odd`.
pub fn interleave(odd: &[GElem], even: &[GElem]) -> Vec<GElem> {
    let mut out = Vec::with_capacity(odd.len() + even.len());
    for i in 0..odd.len().max(even.len()) {
        if let Some(&g) = odd.get(i) {
            out.push(g);
        }
        if let Some(&g) = even.get(i) {
            out.push(g);
        }
    }
    out
}

/// All products `d_1 d_2 ... d_h` for `1 <= h <= k` with odd positions drawn
/// without repetition from `odd` and even positions from `even`. When every
/// element has sign -1 the value only depends on which elements fill the
/// odd and the even positions, so one canonical order per selection is
/// evaluated.
pub fn alternating_products(
    spec: &GroupSpec,
    odd: &[GElem],
    even: &[GElem],
    k: usize,
    cap: u64,
) -> Result<AlternatingProducts> {
    if let Some(g) = odd.iter().chain(even).find(|&&g| spec.sign_of(g) != Sign::Minus) {
        return Err(Error::InvalidElement(format!("{g:?} does not act by -1")));
    }
    let total: u64 = (1..=k)
        .map(|h| binom(odd.len(), h.div_ceil(2)).saturating_mul(binom(even.len(), h / 2)))
        .fold(0u64, |a, b| a.saturating_add(b));
    if total > cap {
        return Err(Error::CapExceeded { what: "alternating_products", size: total as usize, cap: cap as usize });
    }
    let mut seen: HashMap<GElem, ()> = HashMap::new();
    let mut all_distinct = true;
    for h in 1..=k {
        let odd_sets = subsets_of_size(odd.len(), h.div_ceil(2));
        let even_sets = subsets_of_size(even.len(), h / 2);
        for so in &odd_sets {
            let o: Vec<GElem> = so.iter().map(|&i| odd[i]).collect();
            for se in &even_sets {
                let e: Vec<GElem> = se.iter().map(|&i| even[i]).collect();
                let q = spec.product(&interleave(&o, &e));
                if seen.insert(q, ()).is_some() {
                    all_distinct = false;
                }
            }
        }
    }
    Ok(AlternatingProducts { products: seen.into_keys().collect(), selections: total, all_distinct })
}

/// Bitset over `Z_p` holding every nonzero-length signed sum
/// `sum c_i x_i` (`c_i` in `{-1, 0, 1}`, not all zero) of the x-components
/// added so far.
///
/// The x-component of any signed word over a set is such a sum, so if zero
/// is never reached the set is dissociated. The converse fails, which makes
/// this a sound but incomplete test; it scales to large sets where the
/// exact search does not.
#[derive(Debug, Clone)]
pub struct SignedSums {
    p: u64,
    bits: Vec<u64>,
    count: usize,
}

impl SignedSums {
    pub fn new(p: u64) -> Self {
        SignedSums { p, bits: vec![0; p.div_ceil(64) as usize], count: 0 }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, r: u64) -> bool {
        let r = r % self.p;
        self.bits[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    fn set(bits: &mut [u64], r: u64) {
        bits[(r / 64) as usize] |= 1 << (r % 64);
    }

    /// Whether adding an element with x-component `x` keeps zero out of the
    /// sums.
    pub fn accepts(&self, x: u64) -> bool {
        let x = x % self.p;
        x != 0 && !self.contains(x) && !self.contains(self.p - x)
    }

    pub fn add(&mut self, x: u64) {
        let x = x % self.p;
        let mut next = self.bits.clone();
        or_rotated(&mut next, &self.bits, x, self.p);
        or_rotated(&mut next, &self.bits, (self.p - x) % self.p, self.p);
        Self::set(&mut next, x);
        Self::set(&mut next, (self.p - x) % self.p);
        self.bits = next;
        self.count += 1;
    }

    pub fn reaches_zero(&self) -> bool {
        self.contains(0)
    }
}

/// `dst |= {r + s mod p : r in src}`.
fn or_rotated(dst: &mut [u64], src: &[u64], s: u64, p: u64) {
    if s == 0 {
        for (d, v) in dst.iter_mut().zip(src) {
            *d |= v;
        }
        return;
    }
    // r < p - s moves up by s; r >= p - s wraps down by p - s.
    or_shift_left(dst, src, s as usize);
    or_shift_right(dst, src, (p - s) as usize);
    let tail = (p % 64) as u32;
    if tail != 0 {
        let last = dst.len() - 1;
        dst[last] &= (1u64 << tail) - 1;
    }
}

fn or_shift_left(dst: &mut [u64], src: &[u64], k: usize) {
    let (ws, bs) = (k / 64, (k % 64) as u32);
    for i in ws..dst.len() {
        let j = i - ws;
        let mut v = src[j] << bs;
        if bs > 0 && j > 0 {
            v |= src[j - 1] >> (64 - bs);
        }
        dst[i] |= v;
    }
}

fn or_shift_right(dst: &mut [u64], src: &[u64], k: usize) {
    let (ws, bs) = (k / 64, (k % 64) as u32);
    let n = src.len();
    for i in 0..n.saturating_sub(ws) {
        let j = i + ws;
        let mut v = src[j] >> bs;
        if bs > 0 && j + 1 < n {
            v |= src[j + 1] << (64 - bs);
        }
        dst[i] |= v;
    }
}

/// Sound test: `true` guarantees `set` is dissociated.
pub fn certify_dissociated(spec: &GroupSpec, set: &[GElem]) -> bool {
    let mut sums = SignedSums::new(spec.p());
    for g in set {
        if !sums.accepts(g.x) {
            return false;
        }
        sums.add(g.x);
    }
    true
}

/// Greedy maximal subset passing [`certify_dissociated`], scanning `items`
/// in order. Its size is a lower bound for the dimension.
pub fn greedy_certified(spec: &GroupSpec, items: &[GElem]) -> Vec<GElem> {
    let mut sums = SignedSums::new(spec.p());
    let mut out = Vec::new();
    for &g in items {
        if sums.accepts(g.x) {
            sums.add(g.x);
            out.push(g);
        }
    }
    out
}

/// Exact test for small sets, sound test beyond the cap.
pub fn dissociated_checked(spec: &GroupSpec, set: &[GElem]) -> bool {
    if certify_dissociated(spec, set) {
        return true;
    }
    if set.len() <= DEFAULT_DISSOCIATION_CAP {
        return is_dissociated(spec, set).map(|r| r.0).unwrap_or(false);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(x: u64, a: u32) -> GElem {
        GElem::new(x, a)
    }

    fn z7z2() -> GroupSpec {
        GroupSpec::new(7, vec![2], vec![Sign::Plus]).unwrap()
    }

    #[test]
    fn dissociation_examples() {
        let spec = z7z2();
        let set = [g(1, 0), g(2, 0), g(3, 0)];
        let (ok, w) = is_dissociated(&spec, &set).unwrap();
        assert!(!ok);
        assert_eq!(w.unwrap().replay(&spec, &set), spec.identity());

        let d5 = GroupSpec::dihedral(5).unwrap();
        assert!(is_dissociated(&d5, &[g(1, 1), g(2, 1)]).unwrap().0);
        assert!(is_dissociated(&d5, &[g(0, 1)]).unwrap().0);
        assert!(is_dissociated(&d5, &[]).unwrap().0);
    }

    #[test]
    fn dissociation_cap() {
        let spec = GroupSpec::cyclic(1009).unwrap();
        let set: Vec<GElem> = (1..=13).map(|x| g(x, 0)).collect();
        assert!(matches!(is_dissociated(&spec, &set), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn dimension_examples() {
        let z7 = GroupSpec::cyclic(7).unwrap();
        let (r, d) = dimension(&z7, &[g(1, 0), g(2, 0), g(3, 0)], DimensionMode::Maximal).unwrap();
        assert_eq!((r, d), (2, vec![g(1, 0), g(2, 0)]));
        let (r, _) = dimension(&z7, &[g(1, 0), g(2, 0), g(3, 0)], DimensionMode::Maximum).unwrap();
        assert_eq!(r, 2);

        let d5 = GroupSpec::dihedral(5).unwrap();
        assert_eq!(dimension(&d5, &[g(3, 1)], DimensionMode::Maximal).unwrap().0, 1);
        let b = [g(1, 1), g(2, 1), g(4, 0)];
        assert!(!is_dissociated(&d5, &b).unwrap().0);
        assert_eq!(dimension(&d5, &b, DimensionMode::Maximum).unwrap().0, 2);
    }

    #[test]
    fn span_examples() {
        let z7 = GroupSpec::cyclic(7).unwrap();
        let (yes, cert) = in_span(&z7, g(3, 0), &[g(1, 0), g(2, 0)]).unwrap();
        assert!(yes);
        assert_eq!(cert.unwrap().word.replay(&z7, &[g(1, 0), g(2, 0)]), g(3, 0));

        assert!(!in_span(&z7z2(), g(3, 1), &[g(1, 0), g(2, 0)]).unwrap().0);

        let d5 = GroupSpec::dihedral(5).unwrap();
        assert!(in_span(&d5, g(4, 0), &[g(1, 1), g(2, 1)]).unwrap().0);
        assert!(in_span(&d5, d5.identity(), &[g(1, 1)]).unwrap().0);
    }

    #[test]
    fn absorb_examples() {
        let d5 = GroupSpec::dihedral(5).unwrap();
        assert_eq!(absorb(&d5, &[g(1, 1)], &[g(2, 1)], g(1, 0)).unwrap(), 1);
        let z7 = GroupSpec::cyclic(7).unwrap();
        assert_eq!(absorb(&z7, &[g(1, 0)], &[g(2, 0)], g(3, 0)).unwrap(), 1);
        assert_eq!(absorb(&z7, &[g(1, 0)], &[g(2, 0)], g(6, 0)).unwrap(), 2);
    }

    #[test]
    fn alternating_examples() {
        let d = GroupSpec::dihedral(101).unwrap();
        let r = alternating_products(&d, &[g(1, 1)], &[g(3, 1)], 2, DEFAULT_ALTERNATING_CAP).unwrap();
        let want: BTreeSet<GElem> = [g(1, 1), g(99, 0)].into_iter().collect();
        assert_eq!(r.products, want);
        assert!(r.all_distinct);

        let r = alternating_products(&d, &[g(1, 1), g(2, 1)], &[g(5, 1), g(7, 1)], 2, DEFAULT_ALTERNATING_CAP)
            .unwrap();
        assert_eq!(r.products.len(), 6);
        assert!(r.all_distinct);

        let r = alternating_products(&d, &[g(1, 1)], &[g(3, 1)], 0, DEFAULT_ALTERNATING_CAP).unwrap();
        assert!(r.products.is_empty() && r.all_distinct);

        assert!(alternating_products(&d, &[g(1, 0)], &[], 1, 10).is_err());
    }

    #[test]
    fn signed_sums_rotation() {
        for p in [5u64, 61, 64, 67, 127, 131, 1009] {
            if !crate::group::is_prime(p) {
                continue;
            }
            let xs = [1u64, 3, 9, 27];
            let mut sums = SignedSums::new(p);
            let mut naive: HashSet<u64> = HashSet::new();
            for &x in &xs {
                let x = x % p;
                let mut next = naive.clone();
                for &r in &naive {
                    next.insert((r + x) % p);
                    next.insert((r + p - x) % p);
                }
                next.insert(x);
                next.insert((p - x) % p);
                naive = next;
                sums.add(x);
            }
            for r in 0..p {
                assert_eq!(sums.contains(r), naive.contains(&r), "p={p} r={r}");
            }
        }
    }

    #[test]
    fn certified_is_sound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let spec = GroupSpec::dihedral(101).unwrap();
        for _ in 0..300 {
            let n = rng.gen_range(1..=5);
            let set: Vec<GElem> = (0..n).map(|_| g(rng.gen_range(1..101), rng.gen_range(0..2))).collect();
            if certify_dissociated(&spec, &set) {
                assert!(is_dissociated(&spec, &set).unwrap().0, "{set:?}");
            }
        }
    }
}
