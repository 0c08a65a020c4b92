//! Ground truth: a backtracking sequencer for arbitrary subsets and an
//! exhaustive scanner over all small subsets of a group.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GElem, GElemWire, GroupSpec, GroupSpecWire};
use crate::sequencing::Ordering;

pub const DEFAULT_ORACLE_CAP: usize = 16;

/// Lexicographically first sequencing of `set` under the `(x, H-lex)` order
/// with `x` taken in `[0, p)`, or `None` when no sequencing exists. No size
/// cap is applied.
pub(crate) fn search_sequencing(spec: &GroupSpec, set: &[GElem]) -> Option<Vec<GElem>> {
    let mut items = set.to_vec();
    items.sort();
    items.dedup();
    let n = items.len();
    let mut path = Vec::with_capacity(n);
    let mut partials = Vec::with_capacity(n);
    let mut used = vec![false; n];
    if dfs(spec, &items, &mut used, &mut path, &mut partials) {
        Some(path)
    } else {
        None
    }
}

fn dfs(
    spec: &GroupSpec,
    items: &[GElem],
    used: &mut [bool],
    path: &mut Vec<GElem>,
    partials: &mut Vec<GElem>,
) -> bool {
    let n = items.len();
    if path.len() == n {
        return true;
    }
    let current = partials.last().copied().unwrap_or_else(|| spec.identity());
    for i in 0..n {
        if used[i] {
            continue;
        }
        let next = spec.mul(current, items[i]);
        let last = path.len() + 1 == n;
        if (spec.is_identity(next) && !last) || partials.contains(&next) {
            continue;
        }
        used[i] = true;
        path.push(items[i]);
        partials.push(next);
        if dfs(spec, items, used, path, partials) {
            return true;
        }
        partials.pop();
        path.pop();
        used[i] = false;
    }
    false
}

/// Lexicographically first sequencing of `set`, found by exhaustive
/// depth-first search.
pub fn brute_sequencing(spec: &GroupSpec, set: &[GElem], cap: usize) -> Result<Ordering> {
    if set.len() > cap {
        return Err(Error::CapExceeded { what: "brute_sequencing", size: set.len(), cap });
    }
    if set.iter().any(|&g| spec.is_identity(g)) {
        return Err(Error::InvalidElement("the identity cannot be sequenced".into()));
    }
    let ord = Ordering::new(set.to_vec())?;
    ord.validate(spec)?;
    search_sequencing(spec, set)
        .map(|v| Ordering::new(v).expect("search returns distinct elements"))
        .ok_or(Error::NotSequenceable)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub size: usize,
    pub checked: u64,
    pub sequenceable: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub group: GroupSpecWire,
    pub min_size: usize,
    pub max_size: usize,
    pub checked: u64,
    pub sequenceable: u64,
    pub failures: Vec<Vec<GElemWire>>,
    pub by_size: Vec<SizeRow>,
    pub shards: usize,
    pub shards_done: Vec<usize>,
    pub wall_time_ms: f64,
}

impl ScanReport {
    fn empty(spec: &GroupSpec, max_size: usize, shards: usize) -> Self {
        ScanReport {
            group: spec.wire(),
            min_size: 1,
            max_size,
            checked: 0,
            sequenceable: 0,
            failures: Vec::new(),
            by_size: (1..=max_size)
                .map(|size| SizeRow { size, checked: 0, sequenceable: 0 })
                .collect(),
            shards,
            shards_done: Vec::new(),
            wall_time_ms: 0.0,
        }
    }

    /// Associative merge; the result does not depend on merge order.
    pub fn merge(mut self, other: &ScanReport) -> Self {
        self.checked += other.checked;
        self.sequenceable += other.sequenceable;
        self.failures.extend(other.failures.iter().cloned());
        self.failures.sort_by(|a, b| serde_json::to_string(a).unwrap().cmp(&serde_json::to_string(b).unwrap()));
        for (row, o) in self.by_size.iter_mut().zip(&other.by_size) {
            row.checked += o.checked;
            row.sequenceable += o.sequenceable;
        }
        self.shards_done.extend(other.shards_done.iter().copied());
        self.shards_done.sort_unstable();
        self.shards_done.dedup();
        self.wall_time_ms += other.wall_time_ms;
        self
    }

    pub fn is_consistent(&self) -> bool {
        self.checked == self.sequenceable + self.failures.len() as u64
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub shards: usize,
    /// Directory holding one JSON file per finished shard; finished shards
    /// are loaded instead of recomputed.
    pub checkpoint_dir: Option<PathBuf>,
    /// Upper bound on the number of subsets checked in this call.
    pub budget: Option<u64>,
}

fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

/// Number of subsets a shard will check: those whose smallest element index
/// is congruent to `shard` modulo `shards`.
fn shard_size(n: usize, max_size: usize, shard: usize, shards: usize) -> u64 {
    (shard..n)
        .step_by(shards)
        .map(|lead| (0..max_size).map(|k| binom(n - lead - 1, k)).sum::<u64>())
        .sum()
}

fn shard_path(dir: &Path, shard: usize, shards: usize) -> PathBuf {
    dir.join(format!("shard-{shard:04}-of-{shards:04}.json"))
}

fn run_shard(spec: &GroupSpec, nonid: &[GElem], max_size: usize, shard: usize, shards: usize) -> ScanReport {
    let start = Instant::now();
    let mut report = ScanReport::empty(spec, max_size, shards);
    let n = nonid.len();
    let mut subset = Vec::with_capacity(max_size);
    for lead in (shard..n).step_by(shards) {
        // Combinations of size k-1 over indices lead+1..n, prefixed by lead.
        let rest = n - lead - 1;
        for k in 1..=max_size.min(n - lead) {
            let mut idx: Vec<usize> = (0..k - 1).collect();
            loop {
                subset.clear();
                subset.push(nonid[lead]);
                subset.extend(idx.iter().map(|&i| nonid[lead + 1 + i]));
                let ok = search_sequencing(spec, &subset).is_some();
                report.checked += 1;
                report.by_size[k - 1].checked += 1;
                if ok {
                    report.sequenceable += 1;
                    report.by_size[k - 1].sequenceable += 1;
                } else {
                    report.failures.push(spec.elems_to_wire(&subset));
                }
                // next combination of k-1 from `rest`
                let m = k - 1;
                let mut i = m;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if idx[i] < rest - m + i {
                        idx[i] += 1;
                        for j in i + 1..m {
                            idx[j] = idx[j - 1] + 1;
                        }
                        i = usize::MAX;
                        break;
                    }
                }
                if i != usize::MAX {
                    break;
                }
            }
        }
    }
    report.shards_done = vec![shard];
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

/// Runs the oracle on every nonempty subset of `G \ {id}` of size at most
/// `max_size`.
pub fn conjecture_scan(spec: &GroupSpec, max_size: usize, opts: &ScanOptions) -> Result<ScanReport> {
    let shards = opts.shards.max(1);
    let nonid: Vec<GElem> = {
        let mut v: Vec<GElem> = spec.elements().filter(|&g| !spec.is_identity(g)).collect();
        v.sort();
        v
    };
    let max_size = max_size.min(nonid.len());
    let mut report = ScanReport::empty(spec, max_size, shards);
    if max_size == 0 {
        return Ok(report);
    }
    if max_size > DEFAULT_ORACLE_CAP {
        return Err(Error::CapExceeded { what: "conjecture_scan subset size", size: max_size, cap: DEFAULT_ORACLE_CAP });
    }

    let mut loaded = Vec::new();
    let mut pending = Vec::new();
    for shard in 0..shards {
        let cached = opts.checkpoint_dir.as_ref().and_then(|dir| {
            let text = std::fs::read_to_string(shard_path(dir, shard, shards)).ok()?;
            let r: ScanReport = serde_json::from_str(&text).ok()?;
            (r.group == report.group && r.max_size == max_size && r.shards == shards).then_some(r)
        });
        match cached {
            Some(r) => loaded.push(r),
            None => pending.push(shard),
        }
    }

    let mut admitted = Vec::new();
    let mut planned = 0u64;
    let mut over_budget = false;
    for &shard in &pending {
        let size = shard_size(nonid.len(), max_size, shard, shards);
        if let Some(b) = opts.budget {
            if planned + size > b {
                over_budget = true;
                break;
            }
        }
        planned += size;
        admitted.push(shard);
    }

    let fresh: Vec<ScanReport> = admitted
        .par_iter()
        .map(|&shard| run_shard(spec, &nonid, max_size, shard, shards))
        .collect();
    if let Some(dir) = &opts.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
        for r in &fresh {
            let path = shard_path(dir, r.shards_done[0], shards);
            std::fs::write(path, serde_json::to_string_pretty(r)?)?;
        }
    }
    for r in loaded.iter().chain(&fresh) {
        report = report.merge(r);
    }
    if over_budget {
        return Err(Error::BudgetExceeded { checked: report.checked, partial: Box::new(report) });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zp(p: u64, xs: &[u64]) -> (GroupSpec, Vec<GElem>) {
        let spec = GroupSpec::cyclic(p).unwrap();
        (spec, xs.iter().map(|&x| GElem::new(x, 0)).collect())
    }

    #[test]
    fn lexicographic_first_examples() {
        let (spec, set) = zp(5, &[1, 2, 3]);
        let ord = brute_sequencing(&spec, &set, 16).unwrap();
        let xs: Vec<u64> = ord.elements().iter().map(|g| g.x).collect();
        assert_eq!(xs, vec![2, 1, 3]);

        let (spec, set) = zp(5, &[3]);
        assert_eq!(brute_sequencing(&spec, &set, 16).unwrap().elements(), &set[..]);

        let (spec, set) = zp(5, &[1, 2, 3, 4]);
        let ord = brute_sequencing(&spec, &set, 16).unwrap();
        assert!(crate::sequencing::is_sequencing(&spec, ord.elements()));
    }

    #[test]
    fn caps_and_bad_input() {
        let (spec, set) = zp(31, &(1..20).collect::<Vec<_>>());
        assert!(matches!(brute_sequencing(&spec, &set, 16), Err(Error::CapExceeded { .. })));
        let (spec, set) = zp(5, &[0, 1]);
        assert!(brute_sequencing(&spec, &set, 16).is_err());
    }

    #[test]
    fn z2z2_full_set_is_not_sequenceable_as_valid_but_is_sequencing() {
        // {a, b, a+b} in Z_2 x Z_2: partials a, a+b, 0 (final identity allowed)
        let spec = GroupSpec::new(3, vec![2, 2], vec![crate::group::Sign::Plus; 2]).unwrap();
        let set: Vec<GElem> = (1..4).map(|a| GElem::new(0, a)).collect();
        assert!(brute_sequencing(&spec, &set, 16).is_ok());
    }

    #[test]
    fn scan_z5() {
        let spec = GroupSpec::cyclic(5).unwrap();
        let r = conjecture_scan(&spec, 4, &ScanOptions { shards: 3, ..Default::default() }).unwrap();
        assert_eq!(r.checked, 15);
        assert!(r.failures.is_empty());
        assert!(r.is_consistent());
        let r0 = conjecture_scan(&spec, 0, &ScanOptions::default()).unwrap();
        assert_eq!(r0.checked, 0);
    }

    #[test]
    fn scan_dih3() {
        let spec = GroupSpec::dihedral(3).unwrap();
        let r = conjecture_scan(&spec, 5, &ScanOptions { shards: 2, ..Default::default() }).unwrap();
        assert_eq!(r.checked, 31);
        // Sequencing all of Sym(3) \ {id} would make Sym(3) sequenceable.
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].len(), 5);
        assert_eq!(r.by_size[3], SizeRow { size: 4, checked: 5, sequenceable: 5 });
    }

    #[test]
    fn shards_merge_to_the_same_totals() {
        let spec = GroupSpec::cyclic(11).unwrap();
        let one = conjecture_scan(&spec, 4, &ScanOptions { shards: 1, ..Default::default() }).unwrap();
        let many = conjecture_scan(&spec, 4, &ScanOptions { shards: 5, ..Default::default() }).unwrap();
        assert_eq!(one.checked, many.checked);
        assert_eq!(one.by_size, many.by_size);
        assert_eq!(one.checked, (1..=4).map(|k| binom(10, k)).sum::<u64>());
    }

    #[test]
    fn budget_returns_partial_report() {
        let spec = GroupSpec::cyclic(11).unwrap();
        let opts = ScanOptions { shards: 4, budget: Some(100), ..Default::default() };
        match conjecture_scan(&spec, 5, &opts) {
            Err(Error::BudgetExceeded { checked, partial }) => {
                assert!(checked <= 100);
                assert_eq!(partial.checked, checked);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
