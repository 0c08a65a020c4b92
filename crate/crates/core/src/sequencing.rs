//! Orderings, partial products and the valid / sequencing predicates.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GElem, GElemWire, GroupSpec};

/// An ordering of a set of distinct group elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordering(Vec<GElem>);

impl Ordering {
    /// Builds an ordering, rejecting repeated elements.
    pub fn new(elements: Vec<GElem>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for g in &elements {
            if !seen.insert(*g) {
                return Err(Error::InvalidElement(format!("duplicate element {g:?} in ordering")));
            }
        }
        Ok(Ordering(elements))
    }

    pub fn empty() -> Self {
        Ordering(Vec::new())
    }

    pub fn elements(&self) -> &[GElem] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<GElem> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Ordering {
        Ordering(self.0.iter().rev().copied().collect())
    }

    pub fn validate(&self, spec: &GroupSpec) -> Result<()> {
        match self.0.iter().find(|g| !spec.contains(**g)) {
            Some(g) => Err(Error::InvalidElement(format!("{g:?} not in {spec:?}"))),
            None => Ok(()),
        }
    }
}

impl From<Ordering> for Vec<GElem> {
    fn from(o: Ordering) -> Self {
        o.0
    }
}

/// `p_1 = a_1`, `p_i = p_{i-1} . a_i`.
pub fn partial_products(spec: &GroupSpec, ord: &[GElem]) -> Vec<GElem> {
    let mut acc = spec.identity();
    ord.iter()
        .map(|&g| {
            acc = spec.mul(acc, g);
            acc
        })
        .collect()
}

/// Where a candidate ordering first fails to be a sequencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequencingDefect {
    /// Partial products at 1-based positions `first < second` coincide.
    Collision { first: usize, second: usize },
    /// The partial product at 1-based position `at < m` is the identity.
    EarlyIdentity { at: usize },
}

/// First defect among the partial products, in position order.
pub fn find_defect(spec: &GroupSpec, partials: &[GElem]) -> Option<SequencingDefect> {
    let mut seen: HashMap<GElem, usize> = HashMap::with_capacity(partials.len());
    let m = partials.len();
    for (i, &q) in partials.iter().enumerate() {
        if let Some(&j) = seen.get(&q) {
            return Some(SequencingDefect::Collision { first: j + 1, second: i + 1 });
        }
        if spec.is_identity(q) && i + 1 < m {
            return Some(SequencingDefect::EarlyIdentity { at: i + 1 });
        }
        seen.insert(q, i);
    }
    None
}

/// Partial products pairwise distinct.
pub fn is_valid(spec: &GroupSpec, ord: &[GElem]) -> bool {
    let partials = partial_products(spec, ord);
    let mut seen = BTreeSet::new();
    partials.iter().all(|q| seen.insert(*q))
}

/// Valid, and no partial product before the last one is the identity.
pub fn is_sequencing(spec: &GroupSpec, ord: &[GElem]) -> bool {
    find_defect(spec, &partial_products(spec, ord)).is_none()
}

/// `{prefix . p_i : i in [0, m]}` where `p_0` is the empty product.
pub fn partial_product_set(spec: &GroupSpec, prefix: GElem, ord: &[GElem]) -> BTreeSet<GElem> {
    let mut out = BTreeSet::new();
    let mut acc = prefix;
    out.insert(acc);
    for &g in ord {
        acc = spec.mul(acc, g);
        out.insert(acc);
    }
    out
}

/// Auditable record of a sequencing: the ordering together with every
/// partial product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: String,
    pub group: crate::group::GroupSpecWire,
    pub ordering: Vec<GElemWire>,
    pub partial_products: Vec<GElemWire>,
}

pub const CERT_SCHEMA: &str = "semiseq.certificate/1";

impl Certificate {
    pub fn build(spec: &GroupSpec, ord: &[GElem]) -> Self {
        Certificate {
            schema: CERT_SCHEMA.to_string(),
            group: spec.wire(),
            ordering: spec.elems_to_wire(ord),
            partial_products: spec.elems_to_wire(&partial_products(spec, ord)),
        }
    }
}

/// Result of re-checking a certificate from scratch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub ok: bool,
    /// 1-based positions where the embedded partial products disagree with a
    /// recomputation.
    pub mismatched_partials: Vec<usize>,
    pub defect: Option<SequencingDefect>,
    pub detail: Option<String>,
}

/// Replays a certificate: the ordering must consist of distinct elements, the
/// embedded partial products must match a recomputation, and both the
/// embedded and the recomputed trace must be free of defects.
pub fn verify_certificate(cert: &Certificate) -> Result<Verdict> {
    let spec = GroupSpec::try_from(cert.group.clone())?;
    let ord = spec.elems_from_wire(&cert.ordering)?;
    let claimed = spec.elems_from_wire(&cert.partial_products)?;
    if let Err(e) = Ordering::new(ord.clone()) {
        return Ok(Verdict {
            ok: false,
            mismatched_partials: vec![],
            defect: None,
            detail: Some(e.to_string()),
        });
    }
    let recomputed = partial_products(&spec, &ord);
    let mut mismatched: Vec<usize> = recomputed
        .iter()
        .zip(&claimed)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i + 1)
        .collect();
    if claimed.len() != recomputed.len() {
        mismatched.push(claimed.len().min(recomputed.len()) + 1);
    }
    let defect = find_defect(&spec, &claimed).or_else(|| find_defect(&spec, &recomputed));
    Ok(Verdict {
        ok: mismatched.is_empty() && defect.is_none(),
        mismatched_partials: mismatched,
        defect,
        detail: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(p: u64, xs: &[u64]) -> (GroupSpec, Vec<GElem>) {
        let spec = GroupSpec::cyclic(p).unwrap();
        (spec, xs.iter().map(|&x| GElem::new(x, 0)).collect())
    }

    #[test]
    fn partials_examples() {
        let (spec, ord) = z(5, &[2, 1, 3]);
        let got: Vec<u64> = partial_products(&spec, &ord).iter().map(|g| g.x).collect();
        assert_eq!(got, vec![2, 3, 1]);
        let d5 = GroupSpec::dihedral(5).unwrap();
        let got = partial_products(&d5, &[GElem::new(1, 1), GElem::new(2, 1)]);
        assert_eq!(got, vec![GElem::new(1, 1), GElem::new(4, 0)]);
        assert!(partial_products(&d5, &[]).is_empty());
    }

    #[test]
    fn predicate_examples() {
        let (spec, ord) = z(5, &[1, 2, 3]);
        assert!(!is_valid(&spec, &ord));
        let (spec, ord) = z(5, &[2, 1, 3]);
        assert!(is_sequencing(&spec, &ord));
        let (spec, ord) = z(5, &[1, 4, 2, 3]);
        assert!(!is_sequencing(&spec, &ord));
        assert_eq!(
            find_defect(&spec, &partial_products(&spec, &ord)),
            Some(SequencingDefect::EarlyIdentity { at: 2 })
        );
    }

    #[test]
    fn final_identity_allowed() {
        let (spec, ord) = z(5, &[1, 2, 3, 4]);
        // partials 1, 3, 1 -> collision
        assert!(!is_sequencing(&spec, &ord));
        let (spec, ord) = z(5, &[1, 3, 4, 2]);
        // partials 1, 4, 3, 0
        assert!(is_sequencing(&spec, &ord));
    }

    #[test]
    fn partial_product_set_examples() {
        let (spec, ord) = z(5, &[2, 1, 3]);
        let set: Vec<u64> = partial_product_set(&spec, spec.identity(), &ord)
            .iter()
            .map(|g| g.x)
            .collect();
        assert_eq!(set, vec![0, 1, 2, 3]);

        let d = GroupSpec::dihedral(101).unwrap();
        let only = partial_product_set(&d, GElem::new(1, 0), &[]);
        assert_eq!(only.into_iter().collect::<Vec<_>>(), vec![GElem::new(1, 0)]);

        let ord = [GElem::new(1, 0), GElem::new(5, 1), GElem::new(100, 0), GElem::new(2, 1)];
        let set = partial_product_set(&d, GElem::new(1, 0), &ord);
        let expect: BTreeSet<GElem> = [(1, 0), (2, 0), (7, 1), (8, 1), (6, 0)]
            .iter()
            .map(|&(x, a)| GElem::new(x, a))
            .collect();
        assert_eq!(set, expect);
    }

    #[test]
    fn certificate_round_trip_and_fault() {
        let (spec, ord) = z(7, &[2, 1, 3]);
        let cert = Certificate::build(&spec, &ord);
        assert!(verify_certificate(&cert).unwrap().ok);
        let mut bad = cert.clone();
        bad.partial_products[1] = bad.partial_products[0].clone();
        let v = verify_certificate(&bad).unwrap();
        assert!(!v.ok);
        assert_eq!(v.mismatched_partials, vec![2]);
        assert_eq!(v.defect, Some(SequencingDefect::Collision { first: 1, second: 2 }));
    }
}
