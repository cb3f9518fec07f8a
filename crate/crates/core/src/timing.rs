//! Cycle-level latency and throughput model of the direct-mapped list
//! decoder and the split-tree decoder.
//!
//! Throughput counts coded bits: `N * r * clock / cycles`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sorter::{merge_sort_latency, sort2d_cycles, sort2d_width};

/// Architecture parameters. Unit costs are public so alternative cost
/// models (e.g. all ones) can be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchParams {
    pub n: usize,
    pub k: usize,
    pub q: usize,
    pub list_size: usize,
    pub m: usize,
    pub skim: usize,
    pub clock_hz: f64,
    /// Processing element latency charged per trellis activation, `2 log2 q + 3`.
    pub pe_f_cycles: u64,
    pub pe_g_cycles: u64,
    pub pm_calc: u64,
    /// Sorting the `qL` candidate metrics of one free symbol (merge sorter).
    pub merge_sort: u64,
    /// Path-memory update of the direct-mapped decoder, `log2 N`.
    pub pm_update_full: u64,
    /// Skimming sorter over `qL` sub-path metrics.
    pub skim_sort: u64,
    pub filter_overhead: u64,
    pub global_calc: u64,
    /// Sorter over the `L_s^M` assembled global paths.
    pub global_sort: u64,
    /// Sub-decoder update, `log2(N/M)`.
    pub pm_update_sub: u64,
    pub bypass_cycles: u64,
}

fn log2(x: usize) -> Result<u64> {
    if x == 0 || !x.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(x));
    }
    Ok(x.trailing_zeros() as u64)
}

impl ArchParams {
    /// Default cost model for an (N, K) code over GF(q) with list `L`,
    /// split factor `M` and skimming factor `L_s`.
    pub fn new(n: usize, k: usize, q: usize, list_size: usize, m: usize, skim: usize, clock_hz: f64) -> Result<Self> {
        let ln = log2(n)?;
        let lq = log2(q)?;
        log2(m)?;
        if k > n || list_size == 0 || skim == 0 || m > n || !clock_hz.is_finite() || clock_hz <= 0.0 {
            return Err(Error::DecoderConfig("inconsistent architecture parameters".into()));
        }
        let global_space = (skim as u128).pow(m as u32);
        let global_space = usize::try_from(global_space)
            .map_err(|_| Error::DecoderConfig(format!("L_s^M = {global_space} is too large")))?;
        Ok(ArchParams {
            n,
            k,
            q,
            list_size,
            m,
            skim,
            clock_hz,
            pe_f_cycles: 2 * lq + 3,
            pe_g_cycles: 5,
            pm_calc: 1,
            merge_sort: merge_sort_latency((q * list_size).max(2))?,
            pm_update_full: ln,
            skim_sort: sort2d_cycles(sort2d_width(q * list_size)),
            filter_overhead: 34,
            global_calc: 1,
            global_sort: sort2d_cycles(sort2d_width(global_space)),
            pm_update_sub: log2(n / m)?,
            bypass_cycles: 1,
        })
    }

    /// Bits per symbol.
    pub fn r(&self) -> u32 {
        self.q.trailing_zeros()
    }

    pub fn coded_bits(&self) -> u64 {
        self.n as u64 * self.r() as u64
    }

    /// Cycles spent per free symbol by the direct-mapped decoder.
    pub fn free_symbol_cycles(&self) -> u64 {
        self.pm_calc + self.merge_sort + self.pm_update_full
    }

    /// Cycles of one reconciled level of the split decoder.
    pub fn reconcile_level_cycles(&self) -> u64 {
        self.skim_sort + self.filter_overhead + self.global_calc + self.global_sort + self.pm_update_sub
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub trellis_cycles: u64,
    /// Metric calculation, sorting and update cycles (direct-mapped decoder).
    pub pm_cycles: u64,
    /// Bypassed plus reconciled level cycles (split decoder).
    pub recon_cycles: u64,
    pub total_cycles: u64,
    pub throughput_mbps: f64,
    pub coded_bits: u64,
    pub clock_hz: f64,
    pub free_symbols: usize,
    pub bypassed_levels: usize,
    pub reconciled_levels: usize,
}

fn finish(p: &ArchParams, trellis: u64, pm: u64, recon: u64, free: usize, bypassed: usize, reconciled: usize) -> TimingReport {
    let total = trellis + pm + recon;
    let mut r = TimingReport {
        trellis_cycles: trellis,
        pm_cycles: pm,
        recon_cycles: recon,
        total_cycles: total,
        throughput_mbps: 0.0,
        coded_bits: p.coded_bits(),
        clock_hz: p.clock_hz,
        free_symbols: free,
        bypassed_levels: bypassed,
        reconciled_levels: reconciled,
    };
    r.throughput_mbps = throughput(&r);
    r
}

/// Direct-mapped list decoder: `(2N-2)` trellis activations, then per
/// symbol a metric calculation, plus sorting and path update for free symbols.
/// `frozen_pattern[i]` is true for frozen symbols.
pub fn dm_frame_latency(p: &ArchParams, frozen_pattern: &[bool]) -> Result<TimingReport> {
    if frozen_pattern.len() != p.n {
        return Err(Error::Length { expected: p.n, actual: frozen_pattern.len() });
    }
    let trellis = (2 * p.n as u64 - 2) * p.pe_f_cycles;
    let free = frozen_pattern.iter().filter(|f| !**f).count();
    let pm = p.pm_calc * p.n as u64 + (p.merge_sort + p.pm_update_full) * free as u64;
    Ok(finish(p, trellis, pm, 0, free, 0, 0))
}

/// Split-tree decoder: `(2N/M - 2)` sub-trellis activations, one cycle per
/// bypassed level and a full reconciliation per other level.
/// `level_pattern[i]` is true when every symbol of level `i` is frozen.
pub fn st_frame_latency(p: &ArchParams, level_pattern: &[bool]) -> Result<TimingReport> {
    let levels = p.n / p.m;
    if level_pattern.len() != levels {
        return Err(Error::Length { expected: levels, actual: level_pattern.len() });
    }
    let trellis = (2 * levels as u64 - 2) * p.pe_f_cycles;
    let bypassed = level_pattern.iter().filter(|b| **b).count();
    let reconciled = levels - bypassed;
    let recon = bypassed as u64 * p.bypass_cycles + reconciled as u64 * p.reconcile_level_cycles();
    Ok(finish(p, trellis, 0, recon, 0, bypassed, reconciled))
}

/// Coded-bit throughput in Mb/s.
pub fn throughput(report: &TimingReport) -> f64 {
    if report.total_cycles == 0 {
        return 0.0;
    }
    report.coded_bits as f64 * report.clock_hz / report.total_cycles as f64 / 1e6
}

/// Level pattern with `bypassed` all-frozen levels followed by `reconciled` others.
pub fn synthetic_level_pattern(bypassed: usize, reconciled: usize) -> Vec<bool> {
    let mut v = vec![true; bypassed];
    v.resize(bypassed + reconciled, false);
    v
}

/// Frozen pattern with the first `n - k` symbols frozen.
pub fn synthetic_frozen_pattern(n: usize, k: usize) -> Vec<bool> {
    (0..n).map(|i| i < n - k).collect()
}
