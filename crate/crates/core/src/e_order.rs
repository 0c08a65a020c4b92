//! Ordering the rectified remainder so its partial products, shifted by
//! `delta`, stay clear of the sets built from the end blocks.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::decompose::Block;
use crate::error::{Error, Result};
use crate::group::{GElem, GroupSpec, Sign};
use crate::sequencing::{find_defect, partial_products};

/// The remainder cut by sign and by the side of zero its x-component falls on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ESplit {
    pub positive: Vec<GElem>,
    pub negative: Vec<GElem>,
    pub zero: Vec<GElem>,
    /// Sign `-1` elements with the larger x-components, `ceil(|S|/2)` of them.
    pub flip_high: Vec<GElem>,
    /// Sign `-1` elements with the smaller x-components, `floor(|S|/2)`.
    pub flip_low: Vec<GElem>,
    pub half_width: f64,
}

impl ESplit {
    pub fn flips(&self) -> usize {
        self.flip_high.len() + self.flip_low.len()
    }
}

/// Splits `e` after checking every x-component lies in
/// `(-p/denominator, p/denominator)`.
pub fn split_e(spec: &GroupSpec, e: &[GElem], denominator: f64) -> Result<ESplit> {
    let half_width = spec.p() as f64 / denominator;
    let mut out = ESplit {
        positive: vec![],
        negative: vec![],
        zero: vec![],
        flip_high: vec![],
        flip_low: vec![],
        half_width,
    };
    let mut flips = Vec::new();
    for &g in e {
        let l = spec.lift(g.x);
        if l.unsigned_abs() as f64 >= half_width {
            return Err(Error::IntervalViolation(format!(
                "{:?} has |x| = {} >= {half_width:.3}",
                spec.to_wire(g),
                l.abs()
            )));
        }
        match (spec.sign_of(g), l.signum()) {
            (Sign::Minus, _) => flips.push(g),
            (Sign::Plus, 1) => out.positive.push(g),
            (Sign::Plus, -1) => out.negative.push(g),
            _ => out.zero.push(g),
        }
    }
    flips.sort_by_key(|&g| spec.lex_key(g));
    let low = flips.len() / 2;
    out.flip_high = flips.split_off(low);
    out.flip_low = flips;
    Ok(out)
}

/// `Y_j` and `Y'_j` for `j = 1..=k`, stored at index `j - 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YFamily {
    pub forward: Vec<HashSet<GElem>>,
    pub backward: Vec<HashSet<GElem>>,
}

impl YFamily {
    pub fn empty(k: usize) -> Self {
        YFamily { forward: vec![HashSet::new(); k], backward: vec![HashSet::new(); k] }
    }
}

/// `Y_j = (prod_j last)^-1 ∪ delta^-1 prod_j first`; `Y'_j` swaps the two
/// blocks. `prod_j` denotes the products of exactly `j` block elements.
pub fn build_y_sets(spec: &GroupSpec, first: &Block, last: &Block, delta: GElem, k: usize, cap: u64) -> Result<YFamily> {
    let dinv = spec.inv(delta);
    let mut fam = YFamily::default();
    for j in 1..=k {
        let f = first.products_of_size(spec, j, cap)?;
        let l = last.products_of_size(spec, j, cap)?;
        let mk = |inverted: &std::collections::BTreeSet<GElem>, shifted: &std::collections::BTreeSet<GElem>| {
            inverted.iter().map(|&g| spec.inv(g)).chain(shifted.iter().map(|&g| spec.mul(dinv, g))).collect()
        };
        fam.forward.push(mk(&l, &f));
        fam.backward.push(mk(&f, &l));
    }
    Ok(fam)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Positive,
    Negative,
    FlipHigh,
    FlipLow,
}

impl Role {
    fn prefers_max(self) -> bool {
        matches!(self, Role::Positive | Role::FlipHigh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    /// Some candidate keeps the preceding partial product out of every `Y_j`.
    Skip,
    /// Every candidate hits some `Y_j`; `level` is the smallest such `j`.
    Hit { level: usize, avoided: bool },
    /// A later choice was forced by the search backing up.
    Backtracked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub position: usize,
    pub role: Role,
    pub kind: StepKind,
    pub chosen: GElem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub stage: String,
    pub level: usize,
    pub hits: usize,
    pub bound: f64,
    pub y_size: usize,
}

impl AuditRow {
    pub fn ok(&self) -> bool {
        self.hits as f64 <= self.bound
    }
}

/// `inf_L (|H||Y_j|/L + L + 2|H| sum_{i<j} |Y_i|)` over positive integers.
pub fn audit_core(h: usize, y: &[HashSet<GElem>], j: usize) -> f64 {
    let h = h as f64;
    let c = h * y[j - 1].len() as f64;
    let earlier: usize = y[..j - 1].iter().map(|s| s.len()).sum();
    let root = c.sqrt();
    let best = [root.floor(), root.ceil(), 1.0]
        .into_iter()
        .filter(|&l| l >= 1.0)
        .map(|l| c / l + l)
        .fold(f64::INFINITY, f64::min);
    best + 2.0 * h * earlier as f64
}

fn hits(spec: &GroupSpec, start: GElem, seq: &[GElem], y: &HashSet<GElem>) -> usize {
    let mut acc = start;
    let mut n = y.contains(&acc) as usize;
    for &g in seq {
        acc = spec.mul(acc, g);
        n += y.contains(&acc) as usize;
    }
    n
}

/// Arrangement of the pieces produced by the ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    /// `zero, positive, s_0, negative, s_1, s_2, ...` in one run.
    WithFlips,
    /// `zero, reversed positive` before `delta`, `negative` after it.
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EOrder {
    pub layout: Layout,
    /// Part placed before the blocks (or before `delta`).
    pub before: Vec<GElem>,
    /// Part placed after the blocks (or after `delta`).
    pub after: Vec<GElem>,
    pub steps: Vec<StepRecord>,
    pub audits: Vec<AuditRow>,
    /// Zero-part element moved out of the zero run because the run
    /// multiplied to the identity.
    pub moved_zero: Option<GElem>,
}

impl EOrder {
    pub fn audits_ok(&self) -> bool {
        self.audits.iter().all(AuditRow::ok)
    }

    /// The ordering with `delta` spliced in where the blocks go.
    pub fn with_delta(&self, delta: GElem) -> Vec<GElem> {
        let mut v = self.before.clone();
        v.push(delta);
        v.extend(&self.after);
        v
    }
}

/// A sequencing of the zero part inside `H`, whose product is not the
/// identity. When the whole part multiplies to the identity one element is
/// set aside and returned separately.
pub fn order_zero(spec: &GroupSpec, zero: &[GElem]) -> Result<(Vec<GElem>, Option<GElem>)> {
    if zero.is_empty() {
        return Ok((vec![], None));
    }
    if zero.len() > crate::oracle::DEFAULT_ORACLE_CAP + 1 {
        return Err(Error::CapExceeded {
            what: "zero part",
            size: zero.len(),
            cap: crate::oracle::DEFAULT_ORACLE_CAP + 1,
        });
    }
    let seq_nontrivial = |set: &[GElem]| -> Option<Vec<GElem>> {
        if set.is_empty() {
            return Some(vec![]);
        }
        if spec.is_identity(spec.product(set)) {
            return None;
        }
        crate::oracle::search_sequencing(spec, set)
    };
    if let Some(v) = seq_nontrivial(zero) {
        return Ok((v, None));
    }
    if spec.is_identity(spec.product(zero)) {
        for (i, &moved) in zero.iter().enumerate() {
            let mut rest = zero.to_vec();
            rest.remove(i);
            if let Some(v) = seq_nontrivial(&rest) {
                return Ok((v, Some(moved)));
            }
        }
    }
    Err(Error::OrderingFailure("the zero part has no usable sequencing".into()))
}

struct Backward<'a> {
    spec: &'a GroupSpec,
    y: &'a [HashSet<GElem>],
    roles: &'a [Role],
    forbid: &'a dyn Fn(usize, GElem) -> bool,
    budget: usize,
}

fn extremal_key(spec: &GroupSpec, g: GElem) -> (i64, u32) {
    spec.lex_key(g)
}

impl Backward<'_> {
    fn level(&self, g: GElem) -> Option<usize> {
        self.y.iter().position(|s| s.contains(&g)).map(|i| i + 1)
    }

    fn sort_extremal(&self, role: Role, v: &mut [(GElem, GElem)]) {
        v.sort_by_key(|&(g, _)| extremal_key(self.spec, g));
        if role.prefers_max() {
            v.reverse();
        }
    }

    /// Candidates ranked so that the first one is the greedy choice.
    fn rank(&self, role: Role, nu: GElem, pool: &[GElem]) -> (Vec<(GElem, GElem)>, StepKind) {
        let mut cands: Vec<(GElem, GElem)> = pool.iter().map(|&g| (g, self.spec.mul(nu, self.spec.inv(g)))).collect();
        let (mut clear, mut hit): (Vec<_>, Vec<_>) = cands.drain(..).partition(|&(_, prev)| self.level(prev).is_none());
        self.sort_extremal(role, &mut clear);
        if !clear.is_empty() {
            self.sort_extremal(role, &mut hit);
            clear.extend(hit);
            return (clear, StepKind::Skip);
        }
        let level = hit.iter().filter_map(|&(_, prev)| self.level(prev)).min().unwrap_or(1);
        let ylev = &self.y[level - 1];
        let (mut away, mut inside): (Vec<_>, Vec<_>) = hit.into_iter().partition(|&(_, prev)| !ylev.contains(&prev));
        self.sort_extremal(role, &mut away);
        self.sort_extremal(role, &mut inside);
        let avoided = !away.is_empty();
        away.extend(inside);
        (away, StepKind::Hit { level, avoided })
    }

    /// Fills positions `k, k-1, ..., 1`. `pools[r]` holds the unused
    /// elements for each role.
    fn run(&mut self, k: usize, nu: GElem, pools: &mut [Vec<GElem>; 4], out: &mut Vec<GElem>, steps: &mut Vec<StepRecord>) -> bool {
        if k == 0 {
            return true;
        }
        let role = self.roles[k - 1];
        let idx = role as usize;
        let (ranked, kind) = self.rank(role, nu, &pools[idx]);
        for (n, (g, prev)) in ranked.into_iter().enumerate() {
            if self.budget == 0 {
                return false;
            }
            self.budget -= 1;
            if k > 1 && (self.forbid)(k - 1, prev) {
                continue;
            }
            let at = pools[idx].iter().position(|&q| q == g).unwrap();
            pools[idx].swap_remove(at);
            out.push(g);
            steps.push(StepRecord { position: k, role, kind: if n == 0 { kind } else { StepKind::Backtracked }, chosen: g });
            if self.run(k - 1, prev, pools, out, steps) {
                return true;
            }
            out.pop();
            steps.pop();
            pools[idx].push(g);
        }
        false
    }
}

const SEARCH_BUDGET: usize = 200_000;

fn role_index(r: Role) -> usize {
    r as usize
}

/// Builds an ordering of the given roles backwards from `end`, the product
/// `start . x_1 ... x_m`. Returns the elements in forward order.
fn build_backward(
    spec: &GroupSpec,
    roles: &[Role],
    pools: [Vec<GElem>; 4],
    end: GElem,
    y: &[HashSet<GElem>],
    forbid: &dyn Fn(usize, GElem) -> bool,
) -> Result<(Vec<GElem>, Vec<StepRecord>)> {
    let mut pools = pools;
    for r in [Role::Positive, Role::Negative, Role::FlipHigh, Role::FlipLow] {
        let need = roles.iter().filter(|&&q| q == r).count();
        if pools[role_index(r)].len() != need {
            return Err(Error::LemmaViolation(format!("{r:?}: {} elements for {need} positions", pools[role_index(r)].len())));
        }
    }
    let mut b = Backward { spec, y, roles, forbid, budget: SEARCH_BUDGET };
    let mut out = Vec::with_capacity(roles.len());
    let mut steps = Vec::with_capacity(roles.len());
    if !b.run(roles.len(), end, &mut pools, &mut out, &mut steps) {
        return Err(Error::OrderingFailure(format!("no admissible ordering of {} elements", roles.len())));
    }
    out.reverse();
    steps.reverse();
    Ok((out, steps))
}

/// Roles by position for the run `positive, s_0, negative, s_1, s_2, ...`.
pub fn flip_layout_roles(split: &ESplit) -> Vec<Role> {
    let (np, nn, ns) = (split.positive.len(), split.negative.len(), split.flips());
    let mut roles = vec![Role::Positive; np];
    if ns > 0 {
        roles.push(Role::FlipHigh);
    }
    roles.extend(std::iter::repeat_n(Role::Negative, nn));
    for off in 1..ns {
        roles.push(if off % 2 == 1 { Role::FlipLow } else { Role::FlipHigh });
    }
    roles
}

fn run_is_sequencing(spec: &GroupSpec, delta: GElem, run: &[GElem]) -> bool {
    let mut seq = Vec::with_capacity(run.len() + 1);
    if !spec.is_identity(delta) {
        seq.push(delta);
    }
    seq.extend_from_slice(run);
    find_defect(spec, &partial_products(spec, &seq)).is_none()
}

/// Reinserts a moved zero-part element, last position first.
fn place_moved(spec: &GroupSpec, delta: GElem, run: &[GElem], moved: GElem) -> Option<Vec<GElem>> {
    (0..=run.len()).rev().find_map(|at| {
        let mut v = run.to_vec();
        v.insert(at, moved);
        run_is_sequencing(spec, delta, &v).then_some(v)
    })
}

/// Ordering when sign `-1` elements are present: `delta` followed by the
/// result is a sequencing. With `delta` the identity the run alone is
/// checked.
pub fn order_e_with_flips(spec: &GroupSpec, split: &ESplit, delta: GElem, y: &[HashSet<GElem>]) -> Result<EOrder> {
    if split.flips() == 0 {
        return Err(Error::OrderingFailure("no sign -1 elements".into()));
    }
    let (zero, moved) = order_zero(spec, &split.zero)?;
    let roles = flip_layout_roles(split);
    let base = spec.mul(delta, spec.product(&zero));
    let all: Vec<GElem> = [&split.positive, &split.flip_high, &split.negative, &split.flip_low]
        .into_iter()
        .flatten()
        .copied()
        .collect();
    // The end point does not depend on the order: the x-components combine
    // with alternating signs exactly as the layout prescribes.
    let signed: i64 = split.positive.iter().chain(&split.flip_high).map(|g| spec.lift(g.x)).sum::<i64>()
        - split.negative.iter().chain(&split.flip_low).map(|g| spec.lift(g.x)).sum::<i64>();
    let a_end = all.iter().fold(base.a, |a, g| spec.h_add(a, g.a));
    let end = GElem::new(spec.reduce(spec.lift(base.x) + signed), a_end);
    let pools = [split.positive.clone(), split.negative.clone(), split.flip_high.clone(), split.flip_low.clone()];
    let (run, steps) = build_backward(spec, &roles, pools, end, y, &|_, _| false)?;

    let trace = partial_products(spec, &[&[base][..], &run].concat());
    if *trace.last().unwrap() != end {
        return Err(Error::LemmaViolation("partial product bookkeeping disagrees with the layout".into()));
    }
    let first_low = split.positive.len() + split.negative.len() + 2;
    let lows: Vec<i64> = (first_low..=roles.len()).step_by(2).map(|k| spec.lift(trace[k].x)).collect();
    if lows.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::LemmaViolation("partial products at low flips are not monotone".into()));
    }

    let mut full = zero;
    full.extend(&run);
    let audits = (1..=y.len())
        .map(|j| AuditRow {
            stage: "with_flips".into(),
            level: j,
            hits: hits(spec, delta, &full, &y[j - 1]),
            bound: 4.0 * audit_core(spec.h_size() as usize, y, j) + spec.h_size() as f64,
            y_size: y[j - 1].len(),
        })
        .collect();
    let full = match moved {
        Some(m) => place_moved(spec, delta, &full, m)
            .ok_or_else(|| Error::OrderingFailure("no position for the moved zero element".into()))?,
        None => full,
    };
    if !run_is_sequencing(spec, delta, &full) {
        return Err(Error::OrderingFailure("delta followed by the run is not a sequencing".into()));
    }
    Ok(EOrder { layout: Layout::WithFlips, before: vec![], after: full, steps, audits, moved_zero: moved })
}

/// Ordering when every element acts trivially: the zero part and the
/// reversed positive run go before `delta`, the negative run after it.
pub fn order_e_without_flips(spec: &GroupSpec, split: &ESplit, delta: GElem, fam: &YFamily) -> Result<EOrder> {
    if split.flips() > 0 {
        return Err(Error::OrderingFailure("sign -1 elements present".into()));
    }
    let (zero, moved) = order_zero(spec, &split.zero)?;
    let h = spec.h_size() as usize;
    let np = split.positive.len();
    let nn = split.negative.len();

    let end_p = spec.mul(delta, spec.product(&split.positive));
    let pools = [split.positive.clone(), vec![], vec![], vec![]];
    // The head partial matching `delta . nu` meets the final product when
    // nu is the inverse of the negative run's product.
    let closing = spec.inv(spec.product(&split.negative));
    let closing_live = nn > 0 && !spec.is_identity(closing);
    let avoid_close = |_: usize, nu: GElem| closing_live && nu == closing;
    let (pos, mut steps) = build_backward(spec, &vec![Role::Positive; np], pools, end_p, &fam.forward, &avoid_close)?;

    let mut before = zero.clone();
    before.extend(pos.iter().rev());
    let mut head = before.clone();
    head.push(delta);
    let head_partials = partial_products(spec, &head);
    let mut seen: HashSet<GElem> = head_partials.iter().copied().collect();
    seen.insert(spec.identity());
    // Partial products after the negative run starts equal `shift . nu_k`.
    let shift = spec.mul(spec.product(&zero), spec.product(&split.positive));
    let end_n = spec.mul(delta, spec.product(&split.negative));
    if nn > 0 && seen.contains(&spec.mul(shift, end_n)) && !spec.is_identity(spec.mul(shift, end_n)) {
        return Err(Error::OrderingFailure("final partial product repeats an earlier one".into()));
    }
    let forbid = |_: usize, nu: GElem| seen.contains(&spec.mul(shift, nu));
    let pools = [vec![], split.negative.clone(), vec![], vec![]];
    let (neg, nsteps) = build_backward(spec, &vec![Role::Negative; nn], pools, end_n, &fam.backward, &forbid)?;
    steps.extend(nsteps);

    let mut audits = Vec::new();
    for j in 1..=fam.forward.len() {
        audits.push(AuditRow {
            stage: "positive".into(),
            level: j,
            hits: hits(spec, delta, &pos, &fam.forward[j - 1]),
            bound: audit_core(h, &fam.forward, j),
            y_size: fam.forward[j - 1].len(),
        });
    }
    for j in 1..=fam.backward.len() {
        audits.push(AuditRow {
            stage: "negative".into(),
            level: j,
            hits: hits(spec, delta, &neg, &fam.backward[j - 1]),
            bound: audit_core(h, &fam.backward, j),
            y_size: fam.backward[j - 1].len(),
        });
    }
    let mut after = neg;
    if let Some(m) = moved {
        after.push(m);
    }
    Ok(EOrder { layout: Layout::Composite, before, after, steps, audits, moved_zero: moved })
}
