//! End-to-end runs: configuration, dispatch between the oracle and the
//! constructive route, verification, and reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::block_order::{choose_k, order_blocks, BlockRetries, BlockStats};
use crate::decompose::{structure_decompose, DecomposeParams, Decomposition, DecompositionDump, Structure};
use crate::e_order::{
    build_y_sets, order_e_with_flips, order_e_without_flips, split_e, AuditRow, ESplit, Layout, StepKind, StepRecord,
    YFamily,
};
use crate::error::{Error, Result};
use crate::group::{GElem, GElemWire, GroupSpec};
use crate::oracle::{brute_sequencing, DEFAULT_ORACLE_CAP};
use crate::rectify::{apply_scaling, RParams};
use crate::sequencing::{verify_certificate, Certificate, Ordering, Verdict};

pub const REPORT_SCHEMA: &str = "semiseq.report/1";
pub const DECOMPOSITION_SCHEMA: &str = "semiseq.decomposition/1";
pub const CONFIG_SCHEMA: &str = "semiseq.config/1";

fn default_schema() -> String {
    CONFIG_SCHEMA.into()
}
fn default_c1() -> f64 {
    0.5
}
fn default_c2() -> f64 {
    0.5
}
fn default_window() -> (usize, usize) {
    (8, 32)
}
fn default_true() -> bool {
    true
}
fn default_cap() -> u64 {
    crate::decompose::DEFAULT_PRODUCT_CAP
}
fn default_oracle_cap() -> usize {
    DEFAULT_ORACLE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub group: GroupSpec,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default)]
    pub force_r: Option<usize>,
    #[serde(default)]
    pub force_k: Option<usize>,
    #[serde(default = "default_window")]
    pub window: (usize, usize),
    #[serde(default)]
    pub retries: BlockRetries,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub fallback: bool,
    #[serde(default = "default_cap")]
    pub product_cap: u64,
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(group: GroupSpec, seed: u64) -> Self {
        PipelineConfig {
            schema: default_schema(),
            group,
            c1: default_c1(),
            c2: default_c2(),
            force_r: None,
            force_k: None,
            window: default_window(),
            retries: BlockRetries::default(),
            seed,
            fallback: true,
            product_cap: default_cap(),
            oracle_cap: default_oracle_cap(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("config: {m}")));
        if self.schema != CONFIG_SCHEMA {
            return bad(&format!("unknown schema {:?}", self.schema));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return bad("c1 and c2 must be positive");
        }
        if self.force_r == Some(0) || self.force_k == Some(0) {
            return bad("forced R and K must be positive");
        }
        let (lo, hi) = self.window;
        if hi < 8 || lo > hi {
            return bad("window must satisfy lo <= hi and hi >= 8");
        }
        let r = self.retries;
        if r.partitions == 0 || r.orderings == 0 || r.samples == 0 || self.product_cap == 0 || self.oracle_cap == 0 {
            return bad("caps must be positive");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: PipelineConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn decompose_params(&self) -> DecomposeParams {
        DecomposeParams { r: RParams { c1: self.c1, override_r: self.force_r }, window: self.window }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "rectify-only")]
    RectifyOnly,
    #[serde(rename = "full-pipeline")]
    FullPipeline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub r: usize,
    pub k: Option<usize>,
    pub s: usize,
    pub block_sizes: Vec<usize>,
    pub block_signs: Vec<i64>,
    pub remainder_len: usize,
    pub remainder_dim: usize,
    pub delta: Option<GElemWire>,
    pub zero_part_trivial: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub flip_high: usize,
    pub flip_low: usize,
}

impl From<&ESplit> for SplitSizes {
    fn from(s: &ESplit) -> Self {
        SplitSizes {
            positive: s.positive.len(),
            negative: s.negative.len(),
            zero: s.zero.len(),
            flip_high: s.flip_high.len(),
            flip_low: s.flip_low.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub position: usize,
    pub role: crate::e_order::Role,
    pub kind: StepKind,
    pub chosen: GElemWire,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
    pub stages_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema: String,
    pub group: GroupSpec,
    pub seed: u64,
    pub input: Vec<GElemWire>,
    pub mode: Mode,
    pub lambda: Option<u64>,
    pub decomposition: Option<DecompositionSummary>,
    pub split: Option<SplitSizes>,
    pub layout: Option<Layout>,
    pub steps: Vec<StepLog>,
    pub audits: Vec<AuditRow>,
    pub block_stats: Option<BlockStats>,
    /// Why the constructive route was abandoned, when it was.
    pub fallback_reason: Option<String>,
    pub ordering: Vec<GElemWire>,
    pub certificate: Certificate,
    pub verdict: Verdict,
    pub timings: Timings,
    pub determinism_hash: String,
}

impl PipelineReport {
    /// SHA-256 of the report with timings and the hash itself blanked.
    pub fn compute_hash(&self) -> String {
        let mut c = self.clone();
        c.timings = Timings::default();
        c.determinism_hash = String::new();
        let bytes = serde_json::to_vec(&c).expect("report serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn audits_ok(&self) -> bool {
        self.audits.iter().all(AuditRow::ok)
    }
}

struct Route {
    mode: Mode,
    ordering: Vec<GElem>,
    lambda: Option<u64>,
    decomposition: Option<DecompositionSummary>,
    split: Option<SplitSizes>,
    layout: Option<Layout>,
    steps: Vec<StepRecord>,
    audits: Vec<AuditRow>,
    block_stats: Option<BlockStats>,
}

impl Route {
    fn oracle(ordering: Vec<GElem>) -> Self {
        Route {
            mode: Mode::Oracle,
            ordering,
            lambda: None,
            decomposition: None,
            split: None,
            layout: None,
            steps: vec![],
            audits: vec![],
            block_stats: None,
        }
    }
}

fn summarize(spec: &GroupSpec, d: &Decomposition, k: Option<usize>) -> DecompositionSummary {
    DecompositionSummary {
        r: d.r,
        k,
        s: d.s(),
        block_sizes: d.blocks.iter().map(|b| b.len()).collect(),
        block_signs: d.blocks.iter().map(|b| b.sign.value()).collect(),
        remainder_len: d.remainder.len(),
        remainder_dim: d.remainder_dim,
        delta: d.delta.map(|g| spec.to_wire(g)),
        zero_part_trivial: d.zero_part_trivial,
        notes: d.notes.clone(),
    }
}

fn clock(stages: &mut BTreeMap<String, f64>, name: &str, t: Instant) {
    stages.insert(name.into(), t.elapsed().as_secs_f64() * 1e3);
}

/// Ordering of the remainder alone when no blocks were extracted.
fn remainder_only(spec: &GroupSpec, d: &Decomposition, route: &mut Route) -> Result<Vec<GElem>> {
    let e = &d.remainder;
    let widest = e.iter().map(|g| spec.lift(g.x).unsigned_abs()).max().unwrap_or(0);
    let denominator = spec.p() as f64 / (widest as f64 + 0.5);
    let split = split_e(spec, e, denominator)?;
    if split.flips() > 0 {
        route.split = Some((&split).into());
        let o = order_e_with_flips(spec, &split, spec.identity(), &[])?;
        route.layout = Some(o.layout.clone());
        route.steps = o.steps;
        route.audits = o.audits;
        return Ok(o.after);
    }
    // Every element acts trivially: the widest one plays the role of delta,
    // after negating if needed so that it lies on the positive side.
    let lead = *e
        .iter()
        .filter(|g| g.x != 0)
        .max_by_key(|g| (spec.lift(g.x).unsigned_abs(), std::cmp::Reverse(**g)))
        .ok_or_else(|| Error::OrderingFailure("remainder has no nonzero x-component".into()))?;
    let flip = spec.lift(lead.x) < 0;
    let neg = spec.p() - 1;
    let (e2, lead2) = if flip { (apply_scaling(spec, neg, e), spec.scale(neg, lead)) } else { (e.clone(), lead) };
    let rest: Vec<GElem> = e2.iter().copied().filter(|&g| g != lead2).collect();
    let split = split_e(spec, &rest, denominator)?;
    route.split = Some((&split).into());
    let o = order_e_without_flips(spec, &split, lead2, &YFamily::empty(0))?;
    route.layout = Some(o.layout.clone());
    route.steps = o.steps.clone();
    route.audits = o.audits.clone();
    let seq = o.with_delta(lead2);
    Ok(if flip { apply_scaling(spec, neg, &seq) } else { seq })
}

fn constructive(
    spec: &GroupSpec,
    cfg: &PipelineConfig,
    set: &[GElem],
    rng: &mut ChaCha8Rng,
    stages: &mut BTreeMap<String, f64>,
) -> Result<Route> {
    let t = Instant::now();
    let structure = structure_decompose(spec, set, &cfg.decompose_params(), rng)?;
    clock(stages, "decompose", t);
    let d = match structure {
        Structure::Delegated { ordering } => return Ok(Route::oracle(ordering)),
        Structure::Decomposed(d) => d,
    };
    let mut route = Route::oracle(vec![]);
    route.lambda = Some(d.lambda);
    let t = Instant::now();
    let scaled = if d.s() == 0 {
        route.mode = Mode::RectifyOnly;
        route.decomposition = Some(summarize(spec, &d, None));
        let seq = remainder_only(spec, &d, &mut route)?;
        clock(stages, "order_remainder", t);
        seq
    } else {
        route.mode = Mode::FullPipeline;
        let delta = d.delta.expect("blocks imply delta");
        let k = cfg.force_k.unwrap_or_else(|| choose_k(cfg.c2, d.r, &d.blocks));
        route.decomposition = Some(summarize(spec, &d, Some(k)));
        let fam = build_y_sets(spec, &d.blocks[0], &d.blocks[d.s() - 1], delta, k, cfg.product_cap)?;
        let split = split_e(spec, &d.remainder, 90.0 * (d.remainder.len() as f64 + 1.0))?;
        route.split = Some((&split).into());
        let o = if split.flips() > 0 {
            order_e_with_flips(spec, &split, delta, &fam.forward)?
        } else {
            order_e_without_flips(spec, &split, delta, &fam)?
        };
        clock(stages, "order_remainder", t);
        route.layout = Some(o.layout.clone());
        route.steps = o.steps.clone();
        route.audits = o.audits.clone();
        let t = Instant::now();
        let (seq, _, stats) =
            order_blocks(spec, &d.blocks, delta, k, &o.before, &o.after, cfg.retries, cfg.product_cap, rng)?;
        clock(stages, "order_blocks", t);
        route.block_stats = Some(stats);
        seq
    };
    let back = spec
        .inv_mod_p(d.lambda)
        .ok_or_else(|| Error::LemmaViolation(format!("scaling {} is not invertible", d.lambda)))?;
    route.ordering = apply_scaling(spec, back, &scaled);
    Ok(route)
}

fn same_elements(a: &[GElem], b: &[GElem]) -> bool {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort();
    y.sort();
    x == y
}

/// Sequences `set`, trying the constructive route first and the oracle
/// when that fails and fallback is enabled. The result is always verified.
pub fn cmd_sequence(cfg: &PipelineConfig, set: &[GElemWire]) -> Result<PipelineReport> {
    cfg.validate()?;
    let start = Instant::now();
    let spec = &cfg.group;
    let elems = spec.elems_from_wire(set)?;
    Ordering::new(elems.clone())?.validate(spec)?;
    if elems.is_empty() {
        return Err(Error::InvalidElement("empty set".into()));
    }
    if let Some(&g) = elems.iter().find(|&&g| spec.is_identity(g)) {
        return Err(Error::InvalidElement(format!("{:?} is the identity", spec.to_wire(g))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stages = BTreeMap::new();

    let attempt = constructive(spec, cfg, &elems, &mut rng, &mut stages).and_then(|r| {
        let cert = Certificate::build(spec, &r.ordering);
        if !same_elements(&r.ordering, &elems) {
            return Err(Error::LemmaViolation("ordering is not a permutation of the input".into()));
        }
        if !verify_certificate(&cert)?.ok {
            return Err(Error::OrderingFailure(format!("{:?} route produced a non-sequencing", r.mode)));
        }
        Ok(r)
    });
    let (route, fallback_reason) = match attempt {
        Ok(r) => (r, None),
        Err(e) if cfg.fallback => {
            let t = Instant::now();
            let ord = match brute_sequencing(spec, &elems, cfg.oracle_cap) {
                Ok(o) => o,
                Err(Error::CapExceeded { .. }) => return Err(e),
                Err(other) => return Err(other),
            };
            clock(&mut stages, "oracle", t);
            (Route::oracle(ord.into_vec()), Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };

    let certificate = Certificate::build(spec, &route.ordering);
    let verdict = verify_certificate(&certificate)?;
    let mut report = PipelineReport {
        schema: REPORT_SCHEMA.into(),
        group: spec.clone(),
        seed: cfg.seed,
        input: set.to_vec(),
        mode: route.mode,
        lambda: route.lambda,
        decomposition: route.decomposition,
        split: route.split,
        layout: route.layout,
        steps: route
            .steps
            .iter()
            .map(|s| StepLog { position: s.position, role: s.role, kind: s.kind, chosen: spec.to_wire(s.chosen) })
            .collect(),
        audits: route.audits,
        block_stats: route.block_stats,
        fallback_reason,
        ordering: spec.elems_to_wire(&route.ordering),
        certificate,
        verdict,
        timings: Timings::default(),
        determinism_hash: String::new(),
    };
    report.timings = Timings { total_ms: start.elapsed().as_secs_f64() * 1e3, stages_ms: stages };
    report.determinism_hash = report.compute_hash();
    Ok(report)
}

pub fn cmd_verify(cert: &Certificate) -> Result<Verdict> {
    verify_certificate(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureDump {
    Delegated { ordering: Vec<GElemWire> },
    Decomposed(DecompositionDump),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub schema: String,
    pub group: GroupSpec,
    pub seed: u64,
    pub input: Vec<GElemWire>,
    pub structure: StructureDump,
}

pub fn cmd_decompose(cfg: &PipelineConfig, set: &[GElemWire]) -> Result<DecomposeReport> {
    cfg.validate()?;
    let spec = &cfg.group;
    let elems = spec.elems_from_wire(set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let structure = match structure_decompose(spec, &elems, &cfg.decompose_params(), &mut rng)? {
        Structure::Delegated { ordering } => StructureDump::Delegated { ordering: spec.elems_to_wire(&ordering) },
        Structure::Decomposed(d) => StructureDump::Decomposed(d.dump(spec)),
    };
    Ok(DecomposeReport {
        schema: DECOMPOSITION_SCHEMA.into(),
        group: spec.clone(),
        seed: cfg.seed,
        input: set.to_vec(),
        structure,
    })
}

pub fn cmd_scan(
    spec: &GroupSpec,
    max_size: usize,
    opts: &crate::oracle::ScanOptions,
) -> Result<crate::oracle::ScanReport> {
    crate::oracle::conjecture_scan(spec, max_size, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wire(spec: &GroupSpec, xs: &[(u64, u32)]) -> Vec<GElemWire> {
        xs.iter().map(|&(x, a)| spec.to_wire(GElem::new(x, a))).collect()
    }

    #[test]
    fn tiny_cyclic_goes_to_oracle() {
        let spec = GroupSpec::cyclic(5).unwrap();
        let cfg = PipelineConfig::new(spec.clone(), 1);
        let r = cmd_sequence(&cfg, &wire(&spec, &[(1, 0), (2, 0), (3, 0)])).unwrap();
        assert_eq!(r.mode, Mode::Oracle);
        assert_eq!(r.ordering, wire(&spec, &[(2, 0), (1, 0), (3, 0)]));
        assert!(r.verdict.ok);
    }

    #[test]
    fn dihedral_remainder_only() {
        let spec = GroupSpec::dihedral(101).unwrap();
        let cfg = PipelineConfig::new(spec.clone(), 1);
        let set = wire(&spec, &[(1, 0), (100, 0), (2, 1), (5, 1)]);
        let r = cmd_sequence(&cfg, &set).unwrap();
        assert_eq!(r.mode, Mode::RectifyOnly);
        assert!(r.verdict.ok);
        assert_eq!(r.lambda, Some(1));
    }

    #[test]
    fn zero_components_are_delegated() {
        let spec = GroupSpec::dihedral(101).unwrap();
        let cfg = PipelineConfig::new(spec.clone(), 1);
        let r = cmd_sequence(&cfg, &wire(&spec, &[(0, 1)])).unwrap();
        assert_eq!(r.mode, Mode::Oracle);
        assert!(r.fallback_reason.is_none());
    }

    #[test]
    fn rejects_identity_and_bad_config() {
        let spec = GroupSpec::cyclic(7).unwrap();
        let cfg = PipelineConfig::new(spec.clone(), 1);
        assert!(cmd_sequence(&cfg, &wire(&spec, &[(0, 0)])).is_err());
        let mut bad = cfg.clone();
        bad.retries.partitions = 0;
        assert!(bad.validate().is_err());
        let text = r#"{"group": {"p": 7, "h_orders": [], "phi_signs": []}, "seed": 3}"#;
        let c = PipelineConfig::from_json(text).unwrap();
        assert_eq!((c.seed, c.window, c.fallback), (3, (8, 32), true));
        assert!(PipelineConfig::from_json(r#"{"group": {"p": 7, "h_orders": [], "phi_signs": []}}"#).is_err());
    }

    #[test]
    fn hash_ignores_timings() {
        let spec = GroupSpec::cyclic(11).unwrap();
        let cfg = PipelineConfig::new(spec.clone(), 7);
        let set = wire(&spec, &[(1, 0), (3, 0), (4, 0), (9, 0)]);
        let a = cmd_sequence(&cfg, &set).unwrap();
        let mut b = cmd_sequence(&cfg, &set).unwrap();
        assert_eq!(a.determinism_hash, b.determinism_hash);
        b.timings.total_ms += 1000.0;
        assert_eq!(b.compute_hash(), a.determinism_hash);
    }
}
