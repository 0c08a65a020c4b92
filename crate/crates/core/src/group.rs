//! Exact arithmetic in `G = Z_p x|_phi H` where `H = Z_{n_1} x ... x Z_{n_k}` and
//! every `phi(h)` is either the identity or negation on `Z_p`.
//!
//! Elements are stored as a residue `x` in `[0, p)` together with a packed
//! mixed-radix index for the `H` component (first factor most significant, so
//! index order coincides with the lexicographic order on tuples). The `H`
//! addition table, negation table and sign table are precomputed because `H`
//! is capped at a few dozen elements.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `|H|` for which strong sequenceability is checked exhaustively.
pub const DEFAULT_H_CAP: usize = 24;

/// Evaluation of `phi(a)`: `+1` (identity) or `-1` (negation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// One group element `(x, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GElem {
    pub x: u64,
    /// Packed index of the `H` component.
    pub a: u32,
}

impl GElem {
    pub const fn new(x: u64, a: u32) -> Self {
        GElem { x, a }
    }
}

/// JSON form of an element: `{"x": int, "a": [int]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GElemWire {
    pub x: i64,
    pub a: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpecWire {
    pub p: u64,
    pub h_orders: Vec<u32>,
    pub phi_signs: Vec<i64>,
}

/// The ambient group. Construction validates `p`, the sign homomorphism and
/// the strong sequenceability of `H`.
#[derive(Clone)]
#[derive(Serialize, Deserialize)]
#[serde(try_from = "GroupSpecWire", into = "GroupSpecWire")]
pub struct GroupSpec {
    p: u64,
    h_orders: Vec<u32>,
    phi_signs: Vec<Sign>,
    h_size: u32,
    h_add: Vec<u32>,
    h_neg: Vec<u32>,
    h_sign: Vec<Sign>,
}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupSpec")
            .field("p", &self.p)
            .field("h_orders", &self.h_orders)
            .field("phi_signs", &self.phi_signs)
            .finish()
    }
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.h_orders == other.h_orders && self.phi_signs == other.phi_signs
    }
}

impl Eq for GroupSpec {}

impl TryFrom<GroupSpecWire> for GroupSpec {
    type Error = Error;
    fn try_from(w: GroupSpecWire) -> Result<Self> {
        let signs = w
            .phi_signs
            .iter()
            .map(|&s| {
                Sign::from_value(s)
                    .ok_or_else(|| Error::InvalidSpec(format!("phi sign {s} is not +1 or -1")))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::new(w.p, w.h_orders, signs)
    }
}

impl From<GroupSpec> for GroupSpecWire {
    fn from(g: GroupSpec) -> Self {
        GroupSpecWire {
            p: g.p,
            h_orders: g.h_orders,
            phi_signs: g.phi_signs.iter().map(|s| s.value()).collect(),
        }
    }
}

/// Deterministic Miller-Rabin, exact for all `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn ss_cache() -> &'static Mutex<HashMap<Vec<u32>, bool>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<u32>, bool>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl GroupSpec {
    /// Validated constructor.
    pub fn new(p: u64, h_orders: Vec<u32>, phi_signs: Vec<Sign>) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::InvalidSpec(format!("{p} is not an odd prime")));
        }
        if p > (1u64 << 40) {
            return Err(Error::InvalidSpec(format!("modulus {p} too large")));
        }
        let spec = Self::build(p, h_orders, phi_signs)?;
        let cached = ss_cache().lock().unwrap().get(&spec.h_orders).copied();
        let ss = match cached {
            Some(v) => v,
            None => {
                let (v, _) = is_strongly_sequenceable(&spec.h_orders, DEFAULT_H_CAP)?;
                ss_cache().lock().unwrap().insert(spec.h_orders.clone(), v);
                v
            }
        };
        if !ss {
            return Err(Error::InvalidSpec(format!(
                "H = {:?} is not strongly sequenceable",
                spec.h_orders
            )));
        }
        Ok(spec)
    }

    /// `Z_p` with trivial `H`.
    pub fn cyclic(p: u64) -> Result<Self> {
        Self::new(p, vec![], vec![])
    }

    /// `Dih_p = Z_p x| Z_2` with `phi(1) = -id`.
    pub fn dihedral(p: u64) -> Result<Self> {
        Self::new(p, vec![2], vec![Sign::Minus])
    }

    /// Structural checks only; skips primality and strong sequenceability.
    /// Used internally to model `H` on its own.
    pub(crate) fn build(p: u64, h_orders: Vec<u32>, phi_signs: Vec<Sign>) -> Result<Self> {
        if h_orders.len() != phi_signs.len() {
            return Err(Error::InvalidSpec(format!(
                "{} cyclic factors but {} phi signs",
                h_orders.len(),
                phi_signs.len()
            )));
        }
        let mut h_size: u64 = 1;
        for (&n, &s) in h_orders.iter().zip(&phi_signs) {
            if n < 2 {
                return Err(Error::InvalidSpec(format!("cyclic factor order {n} < 2")));
            }
            if s == Sign::Minus && n % 2 != 0 {
                return Err(Error::InvalidSpec(format!(
                    "phi sign -1 on odd factor Z_{n} is not a homomorphism"
                )));
            }
            h_size *= n as u64;
            if h_size > 4096 {
                return Err(Error::InvalidSpec("H too large".into()));
            }
        }
        let h_size = h_size as u32;
        let mut spec = GroupSpec {
            p,
            h_orders,
            phi_signs,
            h_size,
            h_add: Vec::new(),
            h_neg: Vec::new(),
            h_sign: Vec::new(),
        };
        let n = h_size as usize;
        let decoded: Vec<Vec<u32>> = (0..h_size).map(|i| spec.h_decode(i)).collect();
        spec.h_add = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                let sum: Vec<u32> = decoded[i]
                    .iter()
                    .zip(&decoded[j])
                    .zip(&spec.h_orders)
                    .map(|((a, b), m)| (a + b) % m)
                    .collect();
                spec.h_add[i * n + j] = spec.h_encode_unchecked(&sum);
            }
        }
        spec.h_neg = decoded
            .iter()
            .map(|t| {
                let neg: Vec<u32> = t
                    .iter()
                    .zip(&spec.h_orders)
                    .map(|(a, m)| (m - a) % m)
                    .collect();
                spec.h_encode_unchecked(&neg)
            })
            .collect();
        spec.h_sign = decoded
            .iter()
            .map(|t| {
                t.iter()
                    .zip(&spec.phi_signs)
                    .fold(Sign::Plus, |acc, (&ai, &s)| {
                        if s == Sign::Minus && ai % 2 == 1 {
                            acc * Sign::Minus
                        } else {
                            acc
                        }
                    })
            })
            .collect();
        Ok(spec)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn h_orders(&self) -> &[u32] {
        &self.h_orders
    }

    pub fn phi_signs(&self) -> &[Sign] {
        &self.phi_signs
    }

    pub fn h_size(&self) -> u32 {
        self.h_size
    }

    pub fn order(&self) -> u64 {
        self.p * self.h_size as u64
    }

    pub fn identity(&self) -> GElem {
        GElem::new(0, 0)
    }

    pub fn is_identity(&self, g: GElem) -> bool {
        g.x == 0 && g.a == 0
    }

    pub fn h_decode(&self, mut a: u32) -> Vec<u32> {
        let mut out = vec![0; self.h_orders.len()];
        for (slot, &n) in out.iter_mut().zip(&self.h_orders).rev() {
            *slot = a % n;
            a /= n;
        }
        out
    }

    fn h_encode_unchecked(&self, t: &[u32]) -> u32 {
        t.iter().zip(&self.h_orders).fold(0, |acc, (&v, &n)| acc * n + v)
    }

    pub fn h_encode(&self, t: &[u32]) -> Result<u32> {
        if t.len() != self.h_orders.len() {
            return Err(Error::InvalidElement(format!(
                "H component has {} coordinates, expected {}",
                t.len(),
                self.h_orders.len()
            )));
        }
        for (&v, &n) in t.iter().zip(&self.h_orders) {
            if v >= n {
                return Err(Error::InvalidElement(format!("coordinate {v} not reduced mod {n}")));
            }
        }
        Ok(self.h_encode_unchecked(t))
    }

    pub fn h_add(&self, a: u32, b: u32) -> u32 {
        self.h_add[(a * self.h_size + b) as usize]
    }

    pub fn h_neg(&self, a: u32) -> u32 {
        self.h_neg[a as usize]
    }

    /// `phi(a)` as a sign.
    pub fn phi(&self, a: u32) -> Sign {
        self.h_sign[a as usize]
    }

    pub fn sign_of(&self, g: GElem) -> Sign {
        self.phi(g.a)
    }

    /// Reduce an integer modulo `p`.
    pub fn reduce(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    /// Signed representative of `x` in `(-p/2, p/2]`.
    pub fn lift(&self, x: u64) -> i64 {
        if x > self.p / 2 {
            x as i64 - self.p as i64
        } else {
            x as i64
        }
    }

    fn apply_sign(&self, s: Sign, x: u64) -> u64 {
        match s {
            Sign::Plus => x,
            Sign::Minus => {
                if x == 0 {
                    0
                } else {
                    self.p - x
                }
            }
        }
    }

    /// `(x1, a1) . (x2, a2) = (x1 + phi(a1) x2, a1 + a2)`.
    pub fn mul(&self, g: GElem, h: GElem) -> GElem {
        let x = (g.x + self.apply_sign(self.phi(g.a), h.x)) % self.p;
        GElem::new(x, self.h_add(g.a, h.a))
    }

    pub fn inv(&self, g: GElem) -> GElem {
        // (x, a)^{-1} = (-phi(a)^{-1} x, -a) and phi(-a) = phi(a).
        let x = self.apply_sign(self.phi(g.a) * Sign::Minus, g.x);
        GElem::new(x, self.h_neg(g.a))
    }

    pub fn pow_sign(&self, g: GElem, exponent: i8) -> GElem {
        match exponent {
            1 => g,
            -1 => self.inv(g),
            _ => self.identity(),
        }
    }

    /// Left fold of `mul` over `items`.
    pub fn product<'a, I: IntoIterator<Item = &'a GElem>>(&self, items: I) -> GElem {
        items
            .into_iter()
            .fold(self.identity(), |acc, &g| self.mul(acc, g))
    }

    /// The scaling automorphism `(x, a) -> (lambda x, a)`.
    pub fn scale(&self, lambda: u64, g: GElem) -> GElem {
        GElem::new(((g.x as u128 * lambda as u128) % self.p as u128) as u64, g.a)
    }

    pub fn inv_mod_p(&self, v: u64) -> Option<u64> {
        let v = v % self.p;
        if v == 0 {
            return None;
        }
        let (mut t, mut new_t) = (0i128, 1i128);
        let (mut r, mut new_r) = (self.p as i128, v as i128);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        Some(t.rem_euclid(self.p as i128) as u64)
    }

    pub fn contains(&self, g: GElem) -> bool {
        g.x < self.p && g.a < self.h_size
    }

    /// Sort key `(lift(x), H-lex)` used wherever a deterministic element order
    /// is needed.
    pub fn lex_key(&self, g: GElem) -> (i64, u32) {
        (self.lift(g.x), g.a)
    }

    pub fn to_wire(&self, g: GElem) -> GElemWire {
        GElemWire {
            x: g.x as i64,
            a: self.h_decode(g.a),
        }
    }

    /// Parses a wire element; `x` may be any integer and is reduced mod `p`,
    /// `H` coordinates must already be reduced.
    pub fn from_wire(&self, w: &GElemWire) -> Result<GElem> {
        Ok(GElem::new(self.reduce(w.x), self.h_encode(&w.a)?))
    }

    pub fn elems_to_wire(&self, gs: &[GElem]) -> Vec<GElemWire> {
        gs.iter().map(|&g| self.to_wire(g)).collect()
    }

    pub fn elems_from_wire(&self, ws: &[GElemWire]) -> Result<Vec<GElem>> {
        ws.iter().map(|w| self.from_wire(w)).collect()
    }

    /// All elements of `G` in packed order. Intended for small groups only.
    pub fn elements(&self) -> impl Iterator<Item = GElem> + '_ {
        (0..self.h_size).flat_map(move |a| (0..self.p).map(move |x| GElem::new(x, a)))
    }

    pub fn wire(&self) -> GroupSpecWire {
        self.clone().into()
    }
}

/// Exhaustively checks that every nonempty subset of `H \ {id}` has a
/// sequencing. Returns a counterexample subset (as coordinate tuples) when
/// one exists.
pub fn is_strongly_sequenceable(
    h_orders: &[u32],
    cap: usize,
) -> Result<(bool, Option<Vec<Vec<u32>>>)> {
    use rayon::prelude::*;

    let size: u64 = h_orders.iter().map(|&n| n as u64).product();
    if size as usize > cap {
        return Err(Error::CapExceeded {
            what: "strong sequenceability check",
            size: size as usize,
            cap,
        });
    }
    let model = GroupSpec::build(3, h_orders.to_vec(), vec![Sign::Plus; h_orders.len()])?;
    let nonid: Vec<GElem> = (1..model.h_size).map(|a| GElem::new(0, a)).collect();
    let m = nonid.len();
    let bad = (1u64..(1u64 << m)).into_par_iter().find_first(|&mask| {
        let subset: Vec<GElem> = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| nonid[i])
            .collect();
        crate::oracle::search_sequencing(&model, &subset).is_none()
    });
    Ok(match bad {
        None => (true, None),
        Some(mask) => {
            let subset = (0..m)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| model.h_decode(nonid[i].a))
                .collect();
            (false, Some(subset))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dih(p: u64) -> GroupSpec {
        GroupSpec::dihedral(p).unwrap()
    }

    #[test]
    fn dihedral_law_examples() {
        let g = dih(5);
        assert_eq!(g.mul(GElem::new(1, 1), GElem::new(2, 1)), GElem::new(4, 0));
        assert_eq!(g.mul(GElem::new(2, 0), GElem::new(3, 0)), g.identity());
        let z7 = GroupSpec::cyclic(7).unwrap();
        assert_eq!(z7.mul(GElem::new(3, 0), GElem::new(5, 0)), GElem::new(1, 0));
    }

    #[test]
    fn inverse_examples() {
        let g7 = dih(7);
        assert_eq!(g7.inv(GElem::new(3, 1)), GElem::new(3, 1));
        let g5 = dih(5);
        assert_eq!(g5.inv(GElem::new(2, 0)), GElem::new(3, 0));
        assert_eq!(g5.inv(g5.identity()), g5.identity());
    }

    #[test]
    fn phi_examples() {
        let g = dih(11);
        assert_eq!(g.phi(0), Sign::Plus);
        assert_eq!(g.phi(1), Sign::Minus);
        let spec = GroupSpec::new(7, vec![2, 3], vec![Sign::Minus, Sign::Plus]).unwrap();
        let a = spec.h_encode(&[1, 2]).unwrap();
        assert_eq!(spec.phi(a), Sign::Minus);
    }

    #[test]
    fn small_h_strongly_sequenceable() {
        assert!(is_strongly_sequenceable(&[2], 24).unwrap().0);
        assert!(is_strongly_sequenceable(&[3], 24).unwrap().0);
        assert!(is_strongly_sequenceable(&[2, 2], 24).unwrap().0);
        assert!(matches!(
            is_strongly_sequenceable(&[5, 5], 24),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GroupSpec::cyclic(9).is_err());
        assert!(GroupSpec::new(7, vec![3], vec![Sign::Minus]).is_err());
        assert!(GroupSpec::new(7, vec![2], vec![]).is_err());
    }

    #[test]
    fn lift_is_symmetric() {
        let g = GroupSpec::cyclic(101).unwrap();
        assert_eq!(g.lift(100), -1);
        assert_eq!(g.lift(50), 50);
        assert_eq!(g.lift(51), -50);
    }

    #[test]
    fn json_round_trip() {
        let spec: GroupSpec =
            serde_json::from_str(r#"{"p": 13, "h_orders": [2], "phi_signs": [-1]}"#).unwrap();
        assert_eq!(spec, dih(13));
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"p":13,"h_orders":[2],"phi_signs":[-1]}"#);
        let e = spec.from_wire(&GElemWire { x: -1, a: vec![1] }).unwrap();
        assert_eq!(e, GElem::new(12, 1));
        assert!(spec.from_wire(&GElemWire { x: 1, a: vec![2] }).is_err());
    }

    #[test]
    fn mul_matches_sign_rule() {
        let spec = GroupSpec::new(13, vec![4, 3], vec![Sign::Minus, Sign::Plus]).unwrap();
        for g in spec.elements().step_by(5) {
            for h in spec.elements().step_by(7) {
                let expect = spec.reduce(g.x as i64 + spec.phi(g.a).value() * h.x as i64);
                assert_eq!(spec.mul(g, h).x, expect);
            }
        }
    }
}
