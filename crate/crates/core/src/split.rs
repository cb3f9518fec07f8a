//! Split-tree list decoding (S-NBSCL).
//!
//! The code is decoded as `M` subcodes of length `N/M`, one sub-decoder per
//! group of channel positions. At every level each sub-decoder proposes sub-paths, keeps
//! its best `L_s` (skimming), and a reconciliation step pairs sub-paths that
//! extend the same global survivor, discards tuples violating a frozen
//! input, and keeps the best `L` global paths.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::GfElement;
use crate::llrv::{KernelTables, Llrv, Precision};
use crate::nbscl::{increment, output_offset, push_extensions, renormalize, spawn_children, Candidate};
use crate::polar::{LevelConstraint, SplitSpec};
use crate::trellis::{DecoderPath, Trellis};

/// Largest supported split factor.
pub const MAX_SPLIT: usize = 4;

/// Default cap on `L_s^M`, the size of the assembled tuple space.
pub const DEFAULT_BUDGET: usize = 1 << 20;

/// A candidate extension local to one sub-decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubPath {
    pub sub_decoder: usize,
    /// Global survivor slot this sub-path extends.
    pub parent: usize,
    pub symbol: u8,
    pub pm: f64,
}

/// One sub-path per sub-decoder, all extending the same global survivor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalPath {
    pub parent: usize,
    /// Index into each sub-decoder's skimmed list.
    pub members: [usize; MAX_SPLIT],
    pub symbols: [u8; MAX_SPLIT],
    pub pm: f64,
    pub width: usize,
}

impl GlobalPath {
    pub fn members(&self) -> &[usize] {
        &self.members[..self.width]
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols[..self.width]
    }
}

/// How sub-path lists are skimmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkimPolicy {
    /// Like [`SkimPolicy::Local`], except on levels that mix frozen and free
    /// inputs: there a free sub-decoder ranks its sub-paths by their best
    /// valid completion (see [`conditioned_skim`]) before keeping `L_s`.
    /// Ranking by the local metric alone ignores the evidence held by the
    /// sub-decoders the frozen input ties it to.
    #[default]
    Conditioned,
    /// Skim only sub-decoders whose own input symbol is free, by their local
    /// metric. A sub-decoder whose input is frozen keeps every locally valid
    /// sub-path; its symbol is fixed by the constraint once the other
    /// members are chosen.
    Local,
    /// Skim every sub-decoder independently before assembly.
    Uniform,
}

/// Metric a sub-decoder ranks its sub-paths by when skimming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkimMetric {
    /// The sub-path's own metric: its sub-decoder's share of the parent
    /// metric plus the local increment.
    #[default]
    SubDecoder,
    /// The full metric of the parent global path plus the local increment.
    /// A parent whose metric sits mostly in other sub-decoders is then not
    /// crowded out, which makes skimming nearly lossless.
    Global,
}

/// Skimming and list parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkimConfig {
    /// Global list size `L`.
    pub list_size: usize,
    /// Sub-paths kept per sub-decoder, `L_s`.
    pub skim: usize,
    /// Split factor `M`.
    pub m: usize,
    /// Upper bound on `L_s^M`.
    pub budget: usize,
    #[serde(default)]
    pub precision: Precision,
    /// Run reconciliation even on levels where every symbol is frozen.
    #[serde(default)]
    pub force_reconcile: bool,
    #[serde(default)]
    pub policy: SkimPolicy,
    pub metric: SkimMetric,
}

impl SkimConfig {
    fn skims(&self, constraint: &LevelConstraint, j: usize) -> bool {
        match self.policy {
            SkimPolicy::Uniform => true,
            SkimPolicy::Local => constraint.input_frozen[j].is_none(),
            SkimPolicy::Conditioned => constraint.input_frozen[j].is_none() && !constraint.cross_constrained(),
        }
    }

    pub fn new(m: usize, list_size: usize, skim: usize) -> Self {
        SkimConfig { list_size, skim, m, budget: DEFAULT_BUDGET, precision: Precision::Float, force_reconcile: false, policy: SkimPolicy::Conditioned, metric: SkimMetric::SubDecoder }
    }

    /// Checks `L <= L_s <= qL` and `L_s^M <= budget`.
    pub fn validate(&self, q: usize) -> Result<()> {
        if !matches!(self.m, 2 | 4) {
            return Err(Error::SplitFactor(self.m));
        }
        if self.list_size == 0 {
            return Err(Error::DecoderConfig("list size must be at least 1".into()));
        }
        if self.skim < self.list_size || self.skim > q * self.list_size {
            return Err(Error::DecoderConfig(format!(
                "skimming factor {} outside [L, qL] = [{}, {}]",
                self.skim,
                self.list_size,
                q * self.list_size
            )));
        }
        let space = (self.skim as u128).pow(self.m as u32);
        if space > self.budget as u128 {
            return Err(Error::DecoderConfig(format!("L_s^M = {space} exceeds the assembly budget {}", self.budget)));
        }
        Ok(())
    }
}

/// Per-frame reconciliation counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub bypassed_levels: usize,
    pub reconciled_levels: usize,
    /// Valid assembled tuples at each level (`L` on bypassed levels).
    pub valid_tuples: Vec<usize>,
}

impl SplitStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutput {
    pub input: Vec<GfElement>,
    pub message: Vec<GfElement>,
    pub pm: f64,
    pub stats: SplitStats,
}

fn subpath_order(a: &SubPath, b: &SubPath) -> Ordering {
    b.pm.total_cmp(&a.pm).then(a.parent.cmp(&b.parent)).then(a.symbol.cmp(&b.symbol))
}

/// Global order: metric descending, then parent ascending, then symbols lexicographically.
pub fn global_order(a: &GlobalPath, b: &GlobalPath) -> Ordering {
    b.pm.total_cmp(&a.pm).then(a.parent.cmp(&b.parent)).then_with(|| a.symbols().cmp(b.symbols()))
}

/// Drops sub-paths that contradict a locally frozen symbol and sorts the
/// rest. Lists of skimmed sub-decoders (see [`SkimPolicy`]) keep their best `L_s`.
/// All entries must come from one sub-decoder.
pub fn skim_subpaths(
    mut subpaths: Vec<SubPath>,
    level: usize,
    constraint: &LevelConstraint,
    cfg: &SkimConfig,
) -> Result<Vec<SubPath>> {
    subpaths.retain(|s| constraint.local_frozen[s.sub_decoder].is_none_or(|v| v.0 == s.symbol));
    let Some(first) = subpaths.first() else {
        return Err(Error::FrameFailure { level });
    };
    let keep = if cfg.skims(constraint, first.sub_decoder) { cfg.skim.min(subpaths.len()) } else { subpaths.len() };
    if subpaths.len() > keep {
        subpaths.select_nth_unstable_by(keep - 1, subpath_order);
        subpaths.truncate(keep);
    }
    subpaths.sort_unstable_by(subpath_order);
    Ok(subpaths)
}

/// Cartesian product of the skimmed lists restricted to matching global
/// parents, keeping tuples whose inputs honour every frozen value of the level.
///
/// Only the lists of sub-decoders with a free input are iterated; the member
/// of a sub-decoder with a frozen input is the unique symbol satisfying its
/// constraint, looked up in its list (the tuple is invalid if it is absent).
/// The result is the filtered full product (order unspecified).
pub fn assemble_globals(skimmed: &[Vec<SubPath>], level: usize, split: &SplitSpec) -> Result<Vec<GlobalPath>> {
    let m = skimmed.len();
    debug_assert_eq!(m, split.m());
    let q = split.code().q();
    let inputs = &split.levels()[level].input_frozen;
    let parents = skimmed.iter().flatten().map(|s| s.parent + 1).max().unwrap_or(0);
    let drivers: Vec<usize> = (0..m).filter(|&j| inputs[j].is_none()).collect();
    let resolved: Vec<usize> = (0..m).rev().filter(|&j| inputs[j].is_some()).collect();
    let mut groups = vec![vec![Vec::new(); parents]; m];
    let mut lookup = vec![Vec::new(); m];
    for (j, list) in skimmed.iter().enumerate() {
        if inputs[j].is_some() {
            lookup[j] = vec![usize::MAX; parents * q];
            for (idx, s) in list.iter().enumerate() {
                lookup[j][s.parent * q + s.symbol as usize] = idx;
            }
        } else {
            for (idx, s) in list.iter().enumerate() {
                groups[j][s.parent].push(idx);
            }
        }
    }
    let mut out = Vec::new();
    for g in 0..parents {
        if drivers.iter().any(|&j| groups[j][g].is_empty()) {
            continue;
        }
        let mut odo = [0usize; MAX_SPLIT];
        'tuples: loop {
            let mut gp = GlobalPath { parent: g, members: [0; MAX_SPLIT], symbols: [0; MAX_SPLIT], pm: 0.0, width: m };
            for (d, &j) in drivers.iter().enumerate() {
                let idx = groups[j][g][odo[d]];
                gp.members[j] = idx;
                gp.symbols[j] = skimmed[j][idx].symbol;
            }
            let mut valid = true;
            for &j in &resolved {
                let w = split.resolve(level, j, &gp.symbols[..m]).expect("frozen input");
                let idx = lookup[j][g * q + w as usize];
                if idx == usize::MAX {
                    valid = false;
                    break;
                }
                gp.members[j] = idx;
                gp.symbols[j] = w;
            }
            if valid {
                gp.pm = (0..m).map(|j| skimmed[j][gp.members[j]].pm).sum();
                out.push(gp);
            }
            let mut d = drivers.len();
            loop {
                if d == 0 {
                    break 'tuples;
                }
                d -= 1;
                odo[d] += 1;
                if odo[d] < groups[drivers[d]][g].len() {
                    break;
                }
                odo[d] = 0;
            }
        }
    }
    if out.is_empty() {
        return Err(Error::FrameFailure { level });
    }
    Ok(out)
}

/// Skims the free-input lists of a cross-constrained level by completed metric.
///
/// `lists` are the sorted, unskimmed per-sub-decoder lists. A sub-path of a
/// free sub-decoder is scored by the best valid tuple containing it, where
/// the other free sub-decoders contribute their local top `skim` and the
/// frozen-input sub-decoders their resolved symbol. With a single free
/// sub-decoder the score is exact. Each free list is then cut to its best
/// `skim` sub-paths that have a valid completion; sub-paths keep their own
/// metric.
pub fn conditioned_skim(mut lists: Vec<Vec<SubPath>>, level: usize, split: &SplitSpec, skim: usize) -> Result<Vec<Vec<SubPath>>> {
    let inputs = &split.levels()[level].input_frozen;
    let m = lists.len();
    let scouts: Vec<Vec<SubPath>> = lists.iter().map(|l| l[..skim.min(l.len())].to_vec()).collect();
    let mut kept = Vec::new();
    for j in (0..m).filter(|&j| inputs[j].is_none()) {
        let trial: Vec<Vec<SubPath>> = (0..m)
            .map(|k| if k == j || inputs[k].is_some() { lists[k].clone() } else { scouts[k].clone() })
            .collect();
        let mut best = vec![f64::NEG_INFINITY; lists[j].len()];
        if let Ok(globals) = assemble_globals(&trial, level, split) {
            for g in &globals {
                let e = g.members[j];
                best[e] = best[e].max(g.pm);
            }
        }
        let mut order: Vec<usize> = (0..best.len()).filter(|&e| best[e] > f64::NEG_INFINITY).collect();
        order.sort_unstable_by(|&a, &b| best[b].total_cmp(&best[a]).then(subpath_order(&lists[j][a], &lists[j][b])));
        order.truncate(skim);
        if order.is_empty() {
            return Err(Error::FrameFailure { level });
        }
        let mut list: Vec<SubPath> = order.iter().map(|&e| lists[j][e]).collect();
        list.sort_unstable_by(subpath_order);
        kept.push((j, list));
    }
    for (j, list) in kept {
        lists[j] = list;
    }
    Ok(lists)
}

/// Keeps the best `l` global paths in [`global_order`].
pub fn select_globals(globals: &mut Vec<GlobalPath>, l: usize) {
    if globals.len() > l {
        globals.select_nth_unstable_by(l - 1, global_order);
        globals.truncate(l);
    }
    globals.sort_unstable_by(global_order);
}

/// Overwrites each sub-decoder's survivor slots with the member sub-paths of
/// `top`; slot `t` afterwards belongs to global survivor `t`.
pub(crate) fn distribute_paths(
    top: &[GlobalPath],
    skimmed: &[Vec<SubPath>],
    states: &mut [Vec<DecoderPath>],
    trellises: &[Trellis<'_>],
) {
    for (j, (state, trellis)) in states.iter_mut().zip(trellises).enumerate() {
        let selected: Vec<Candidate> = top
            .iter()
            .map(|gp| {
                let s = &skimmed[j][gp.members[j]];
                Candidate { parent: s.parent, symbol: s.symbol, pm: s.pm }
            })
            .collect();
        let parents = std::mem::take(state);
        spawn_children(trellis, parents, &selected, state);
    }
}

fn flatten(split: &SplitSpec, channel: &[Llrv]) -> Result<Vec<f64>> {
    let code = split.code();
    if channel.len() != code.len() {
        return Err(Error::Length { expected: code.len(), actual: channel.len() });
    }
    let mut flat = Vec::with_capacity(code.len() * code.q());
    for l in channel {
        if l.len() != code.q() {
            return Err(Error::Length { expected: code.q(), actual: l.len() });
        }
        flat.extend_from_slice(l.values());
    }
    Ok(flat)
}

/// S-NBSCL decoding over flat channel LLRVs (`N * q` values).
pub(crate) fn decode_flat(split: &SplitSpec, kt: &KernelTables, channel: &[f64], cfg: &SkimConfig) -> Result<SplitOutput> {
    let code = split.code();
    let q = code.q();
    cfg.validate(q)?;
    if cfg.m != split.m() {
        return Err(Error::DecoderConfig(format!("config M={} but code split into {}", cfg.m, split.m())));
    }
    let m = split.m();
    let positions: Vec<&[f64]> = channel.chunks(q).collect();
    let blocks: Vec<Vec<f64>> = split.split_blocks(&positions).into_iter().map(|b| b.concat()).collect();
    let mut trellises: Vec<Trellis<'_>> = blocks.iter().map(|ch| Trellis::new(kt, ch, cfg.precision)).collect();
    let mut states: Vec<Vec<DecoderPath>> = trellises.iter().map(|t| vec![t.new_path()]).collect();
    let mut stats = SplitStats::default();

    for (level, constraint) in split.levels().iter().enumerate() {
        for (trellis, state) in trellises.iter_mut().zip(states.iter_mut()) {
            for p in state.iter_mut() {
                trellis.evaluate(p, level)?;
            }
        }
        if constraint.bypass() && !cfg.force_reconcile {
            for ((trellis, state), fz) in trellises.iter().zip(states.iter_mut()).zip(&constraint.local_frozen) {
                let v = fz.expect("bypass level is fully frozen").0;
                for p in state.iter_mut() {
                    let out = p.output();
                    let inc = increment(out, v, output_offset(out, cfg.precision));
                    trellis.commit(p, v, inc);
                }
                renormalize(state, cfg.precision);
            }
            stats.bypassed_levels += 1;
            stats.valid_tuples.push(states[0].len());
            continue;
        }

        // Under the global metric a sub-path is ranked with the metric its
        // parent holds in the other sub-decoders; the shift is undone before assembly.
        let offsets: Vec<Vec<f64>> = match cfg.metric {
            SkimMetric::SubDecoder => vec![vec![0.0; states[0].len()]; m],
            SkimMetric::Global => {
                let totals: Vec<f64> = (0..states[0].len()).map(|t| states.iter().map(|s| s[t].pm()).sum()).collect();
                states.iter().map(|s| s.iter().zip(&totals).map(|(p, t)| t - p.pm()).collect()).collect()
            }
        };
        let mut skimmed = Vec::with_capacity(m);
        for (j, state) in states.iter().enumerate() {
            let keep = if cfg.skims(constraint, j) { cfg.skim } else { q };
            let mut subpaths = local_subpaths(j, state, constraint.local_frozen[j], keep, cfg.precision);
            subpaths.iter_mut().for_each(|sp| sp.pm += offsets[j][sp.parent]);
            let mut list = skim_subpaths(subpaths, level, constraint, cfg)?;
            list.iter_mut().for_each(|sp| sp.pm -= offsets[j][sp.parent]);
            skimmed.push(list);
        }
        if cfg.policy == SkimPolicy::Conditioned && constraint.cross_constrained() {
            skimmed = conditioned_skim(skimmed, level, split, cfg.skim)?;
        }
        let mut globals = assemble_globals(&skimmed, level, split)?;
        stats.valid_tuples.push(globals.len());
        select_globals(&mut globals, cfg.list_size);
        debug_assert!(globals.iter().all(|g| split.is_valid(level, g.symbols())));
        distribute_paths(&globals, &skimmed, &mut states, &trellises);
        for state in states.iter_mut() {
            renormalize(state, cfg.precision);
        }
        stats.reconciled_levels += 1;
    }

    let slots = states[0].len();
    let total = |t: usize| states.iter().map(|s| s[t].pm()).sum::<f64>();
    let best = (0..slots)
        .reduce(|a, b| if total(b) > total(a) { b } else { a })
        .ok_or(Error::EmptyList)?;
    let w: Vec<Vec<GfElement>> =
        states.iter().map(|s| s[best].decisions().iter().map(|&x| GfElement(x)).collect()).collect();
    let input = split.sub_sequences_to_input(&w);
    debug_assert!(code.encode(&input).is_ok(), "survivor violates a frozen symbol");
    Ok(SplitOutput { message: code.input_to_message(&input), input, pm: total(best), stats })
}

/// Sub-path proposals of one sub-decoder: the frozen value when the symbol is
/// locally frozen, otherwise the best `keep` extensions of every slot.
fn local_subpaths(
    j: usize,
    state: &[DecoderPath],
    frozen: Option<GfElement>,
    keep: usize,
    precision: Precision,
) -> Vec<SubPath> {
    match frozen {
        Some(v) => state
            .iter()
            .enumerate()
            .map(|(g, p)| {
                let out = p.output();
                let pm = p.pm() + increment(out, v.0, output_offset(out, precision));
                SubPath { sub_decoder: j, parent: g, symbol: v.0, pm }
            })
            .collect(),
        None => {
            let mut cands = Vec::with_capacity(state.len() * keep);
            for (g, p) in state.iter().enumerate() {
                push_extensions(&mut cands, g, p, keep, precision);
            }
            cands
                .into_iter()
                .map(|c| SubPath { sub_decoder: j, parent: c.parent, symbol: c.symbol, pm: c.pm })
                .collect()
        }
    }
}

/// Split-tree list decoding of `split.code()`.
pub fn s_nbscl_decode(split: &SplitSpec, channel: &[Llrv], cfg: &SkimConfig) -> Result<SplitOutput> {
    let flat = flatten(split, channel)?;
    decode_flat(split, &split.code().kernel_tables(), &flat, cfg)
}
