//! Per-path successive-cancellation trellis state.
//!
//! Depth 0 is the channel (N vectors), depth `n` the single output vector
//! of the symbol being decoded. LLRV buffers are reference counted: a path
//! copied at selection time shares them until one of the copies rewrites a
//! depth, at which point that copy gets a fresh buffer.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::llrv::{f_node_into, g_node_into, KernelTables, NodeScratch, Precision};

/// One list entry of a successive-cancellation list decoder.
#[derive(Debug, Clone)]
pub struct DecoderPath {
    pm: f64,
    decisions: Vec<u8>,
    llr: Vec<Arc<Vec<f64>>>,
    left_cw: Vec<Vec<u8>>,
}

impl DecoderPath {
    /// Empty path for a code of `len` symbols over GF(q).
    pub fn new(len: usize, q: usize) -> Self {
        let n = len.trailing_zeros() as usize;
        let llr = (0..=n)
            .map(|d| Arc::new(if d == 0 { Vec::new() } else { vec![0.0; (len >> d) * q] }))
            .collect();
        DecoderPath { pm: 0.0, decisions: Vec::with_capacity(len), llr, left_cw: vec![Vec::new(); n + 1] }
    }

    /// Accumulated path metric (higher is better).
    pub fn pm(&self) -> f64 {
        self.pm
    }

    pub(crate) fn set_pm(&mut self, pm: f64) {
        self.pm = pm;
    }

    /// Symbols decided so far, in decoding order.
    pub fn decisions(&self) -> &[u8] {
        &self.decisions
    }

    /// Index of the next symbol to decode.
    pub fn next_index(&self) -> usize {
        self.decisions.len()
    }

    /// Re-encoded codeword of the completed left sibling at each depth.
    /// Entry `d` is only meaningful while the current node at depth `d` is a right child.
    pub fn partial_sums(&self) -> &[Vec<u8>] {
        &self.left_cw
    }

    /// Trellis output of the most recently evaluated symbol.
    pub fn output(&self) -> &[f64] {
        self.llr.last().expect("at least one depth")
    }
}

/// Shared, read-only context for evaluating paths over one channel block.
pub(crate) struct Trellis<'a> {
    n: usize,
    len: usize,
    q: usize,
    kt: &'a KernelTables,
    channel: &'a [f64],
    precision: Precision,
    scratch: NodeScratch,
}

impl<'a> Trellis<'a> {
    pub(crate) fn new(kt: &'a KernelTables, channel: &'a [f64], precision: Precision) -> Self {
        let q = kt.q();
        let len = channel.len() / q;
        debug_assert!(len.is_power_of_two() && len >= 2);
        Trellis {
            n: len.trailing_zeros() as usize,
            len,
            q,
            kt,
            channel,
            precision,
            scratch: NodeScratch::new(q),
        }
    }

    pub(crate) fn new_path(&self) -> DecoderPath {
        DecoderPath::new(self.len, self.q)
    }

    /// Evaluates the trellis output for symbol `i`, which must be the path's next symbol.
    pub(crate) fn evaluate(&mut self, path: &mut DecoderPath, i: usize) -> Result<()> {
        let next = path.next_index();
        if i != next || i >= self.len {
            return Err(Error::OutOfOrder { requested: i, next });
        }
        let (n, q) = (self.n, self.q);
        // Depth at which symbol i turns right; everything below it is a left (F) descent.
        let (start, g_first) = if i == 0 { (0, false) } else { (n - 1 - i.trailing_zeros() as usize, true) };
        for d in start..n {
            let h = self.len >> (d + 1);
            let (lo, hi) = path.llr.split_at_mut(d + 1);
            let input: &[f64] = if d == 0 { self.channel } else { &lo[d] };
            let slot = &mut hi[0];
            if Arc::get_mut(slot).is_none() {
                *slot = Arc::new(vec![0.0; h * q]);
            }
            let out = Arc::get_mut(slot).expect("unique after reallocation");
            if g_first && d == start {
                let mu = &path.left_cw[d + 1];
                for j in 0..h {
                    let o = &mut out[j * q..(j + 1) * q];
                    g_node_into(&input[j * q..(j + 1) * q], &input[(j + h) * q..(j + h + 1) * q], mu[j], o, self.kt);
                    if let Precision::Quantized(qz) = self.precision {
                        qz.quantize_llrv(o);
                    }
                }
            } else {
                for j in 0..h {
                    let o = &mut out[j * q..(j + 1) * q];
                    f_node_into(
                        &input[j * q..(j + 1) * q],
                        &input[(j + h) * q..(j + h + 1) * q],
                        o,
                        self.kt,
                        &mut self.scratch,
                    );
                    if let Precision::Quantized(qz) = self.precision {
                        qz.quantize_llrv(o);
                    }
                }
            }
        }
        Ok(())
    }

    /// Records `symbol` as the decision for the path's next index and folds it into the partial sums.
    pub(crate) fn commit(&self, path: &mut DecoderPath, symbol: u8, increment: f64) {
        let i = path.next_index();
        let mut cur = vec![symbol];
        let (mut d, mut idx) = (self.n, i);
        while d > 0 && idx & 1 == 1 {
            let left = &path.left_cw[d];
            let h = cur.len();
            let mut parent = vec![0u8; 2 * h];
            for j in 0..h {
                let c = cur[j] as usize;
                parent[j] = left[j] ^ self.kt.mul_alpha[c];
                parent[j + h] = self.kt.mul_beta[c];
            }
            cur = parent;
            d -= 1;
            idx >>= 1;
        }
        if d > 0 {
            path.left_cw[d] = cur;
        }
        path.decisions.push(symbol);
        path.pm += increment;
    }
}
