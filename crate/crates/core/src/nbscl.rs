//! Successive-cancellation (list) decoding of nonbinary polar codes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::GfElement;
use crate::llrv::{log_sum_exp, KernelTables, Llrv, Precision};
use crate::polar::CodeSpec;
use crate::trellis::{DecoderPath, Trellis};

/// One extension of a list path by one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub parent: usize,
    pub symbol: u8,
    pub pm: f64,
}

/// Total order used for every selection: metric descending, then parent, then symbol ascending.
pub fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.pm.total_cmp(&a.pm).then(a.parent.cmp(&b.parent)).then(a.symbol.cmp(&b.symbol))
}

/// Keeps the best `l` candidates, sorted by [`candidate_order`].
pub fn select_top(cands: &mut Vec<Candidate>, l: usize) {
    if cands.len() > l && l > 0 {
        cands.select_nth_unstable_by(l - 1, candidate_order);
        cands.truncate(l);
    }
    cands.truncate(l);
    cands.sort_unstable_by(candidate_order);
}

/// Metric increment for deciding `symbol` given the trellis output.
///
/// Float mode adds the exact log-probability, so the metric of a complete
/// path is its log-likelihood up to a common constant. Quantized mode adds
/// the max-normalized entry.
#[inline]
pub(crate) fn increment(out: &[f64], symbol: u8, lse: f64) -> f64 {
    out[symbol as usize] - lse
}

#[inline]
pub(crate) fn output_offset(out: &[f64], precision: Precision) -> f64 {
    match precision {
        Precision::Float => log_sum_exp(out),
        Precision::Quantized(_) => 0.0,
    }
}

/// List decoder settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SclConfig {
    pub list_size: usize,
    #[serde(default)]
    pub precision: Precision,
}

impl SclConfig {
    pub fn new(list_size: usize) -> Self {
        SclConfig { list_size, precision: Precision::Float }
    }
}

/// A complete path at the end of decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListEntry {
    pub input: Vec<GfElement>,
    pub pm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutput {
    /// Decided input vector `u` of the best path.
    pub input: Vec<GfElement>,
    /// Free symbols of `input`.
    pub message: Vec<GfElement>,
    pub pm: f64,
    /// Final survivors, best first.
    pub list: Vec<ListEntry>,
}

fn flatten(code: &CodeSpec, channel: &[Llrv]) -> Result<Vec<f64>> {
    if channel.len() != code.len() {
        return Err(Error::Length { expected: code.len(), actual: channel.len() });
    }
    let q = code.q();
    let mut flat = Vec::with_capacity(code.len() * q);
    for l in channel {
        if l.len() != q {
            return Err(Error::Length { expected: q, actual: l.len() });
        }
        flat.extend_from_slice(l.values());
    }
    Ok(flat)
}

/// Shifts metrics so the best is zero and saturates (quantized mode only).
pub(crate) fn renormalize(paths: &mut [DecoderPath], precision: Precision) {
    if let Precision::Quantized(qz) = precision {
        let best = paths.iter().map(|p| p.pm()).fold(f64::NEG_INFINITY, f64::max);
        for p in paths {
            p.set_pm(qz.saturate_pm(p.pm() - best));
        }
    }
}

/// Rebuilds the path list from selected candidates, moving a parent into its last child.
pub(crate) fn spawn_children(
    trellis: &Trellis<'_>,
    parents: Vec<DecoderPath>,
    selected: &[Candidate],
    out: &mut Vec<DecoderPath>,
) {
    let mut uses = vec![0usize; parents.len()];
    for c in selected {
        uses[c.parent] += 1;
    }
    let mut old: Vec<Option<DecoderPath>> = parents.into_iter().map(Some).collect();
    for c in selected {
        uses[c.parent] -= 1;
        let mut child = if uses[c.parent] == 0 {
            old[c.parent].take().expect("parent still present")
        } else {
            old[c.parent].as_ref().expect("parent still present").clone()
        };
        trellis.commit(&mut child, c.symbol, 0.0);
        child.set_pm(c.pm);
        out.push(child);
    }
}

/// Appends to `cands` the best `min(l, q)` extensions of one path.
pub(crate) fn push_extensions(cands: &mut Vec<Candidate>, parent: usize, path: &DecoderPath, l: usize, precision: Precision) {
    let out = path.output();
    let lse = output_offset(out, precision);
    let start = cands.len();
    cands.extend(
        (0..out.len()).map(|s| Candidate { parent, symbol: s as u8, pm: path.pm() + increment(out, s as u8, lse) }),
    );
    if out.len() > l {
        let tail = &mut cands[start..];
        tail.select_nth_unstable_by(l - 1, candidate_order);
        cands.truncate(start + l);
    }
}

/// Successive-cancellation list decoding over flat channel LLRVs (`N * q` values).
pub(crate) fn decode_flat(code: &CodeSpec, kt: &KernelTables, channel: &[f64], cfg: &SclConfig) -> Result<DecodeOutput> {
    let l = cfg.list_size;
    if l == 0 {
        return Err(Error::DecoderConfig("list size must be at least 1".into()));
    }
    let mut trellis = Trellis::new(kt, channel, cfg.precision);
    let mut paths = vec![trellis.new_path()];
    let mut cands = Vec::with_capacity(l * code.q().min(l));
    for i in 0..code.len() {
        for p in paths.iter_mut() {
            trellis.evaluate(p, i)?;
        }
        match code.frozen()[i] {
            Some(v) => {
                for p in paths.iter_mut() {
                    let out = p.output();
                    let inc = increment(out, v.0, output_offset(out, cfg.precision));
                    trellis.commit(p, v.0, inc);
                }
            }
            None => {
                cands.clear();
                for (pi, p) in paths.iter().enumerate() {
                    push_extensions(&mut cands, pi, p, l, cfg.precision);
                }
                select_top(&mut cands, l);
                let parents = std::mem::take(&mut paths);
                spawn_children(&trellis, parents, &cands, &mut paths);
            }
        }
        renormalize(&mut paths, cfg.precision);
    }
    finish(code, paths)
}

fn finish(code: &CodeSpec, mut paths: Vec<DecoderPath>) -> Result<DecodeOutput> {
    // Stable sort keeps the list order for equal metrics.
    paths.sort_by(|a, b| b.pm().total_cmp(&a.pm()));
    let list: Vec<ListEntry> = paths
        .iter()
        .map(|p| ListEntry { input: p.decisions().iter().map(|&s| GfElement(s)).collect(), pm: p.pm() })
        .collect();
    let best = list.first().ok_or(Error::EmptyList)?;
    Ok(DecodeOutput {
        input: best.input.clone(),
        message: code.input_to_message(&best.input),
        pm: best.pm,
        list,
    })
}

/// Successive-cancellation list decoding.
pub fn scl_decode(code: &CodeSpec, channel: &[Llrv], cfg: &SclConfig) -> Result<DecodeOutput> {
    let flat = flatten(code, channel)?;
    decode_flat(code, &code.kernel_tables(), &flat, cfg)
}

/// Plain successive-cancellation decoding (a list of one).
pub fn sc_decode(code: &CodeSpec, channel: &[Llrv], precision: Precision) -> Result<DecodeOutput> {
    scl_decode(code, channel, &SclConfig { list_size: 1, precision })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_llrv, frame_rng, noise_variance, transmit_flat};
    use crate::gf::GfContext;
    use crate::llrv::{KernelCoeffs, Quantizer};
    use rand::Rng;

    fn toy_code(n: usize, q: usize, free: &[usize]) -> CodeSpec {
        let f = GfContext::of_order(q).unwrap();
        let k = if q == 2 { KernelCoeffs::binary() } else { KernelCoeffs::new(GfElement(2), GfElement(1)).unwrap() };
        CodeSpec::from_free_set(f, k, n, free).unwrap()
    }

    fn noisy_frame(code: &CodeSpec, ebn0: f64, seed: u64, frame: u64) -> (Vec<GfElement>, Vec<f64>, Vec<Llrv>) {
        let mut rng = frame_rng(seed, frame);
        let msg: Vec<GfElement> = (0..code.k()).map(|_| GfElement(rng.random_range(0..code.q()) as u8)).collect();
        let c = code.encode_message(&msg).unwrap();
        let r = code.field().r();
        let s2 = noise_variance(ebn0, code.rate());
        let y = transmit_flat(&c, r, s2.sqrt(), &mut rng);
        let ch = y.chunks(r as usize).map(|ys| channel_llrv(ys, s2)).collect();
        (msg, y, ch)
    }

    fn all_messages(k: usize, q: usize) -> impl Iterator<Item = Vec<GfElement>> {
        (0..q.pow(k as u32)).map(move |mut x| {
            (0..k)
                .map(|_| {
                    let s = x % q;
                    x /= q;
                    GfElement(s as u8)
                })
                .collect()
        })
    }

    fn correlation(code: &CodeSpec, msg: &[GfElement], y: &[f64]) -> f64 {
        let r = code.field().r() as usize;
        let c = code.encode_message(msg).unwrap();
        c.iter()
            .enumerate()
            .flat_map(|(k, s)| (0..r).map(move |b| (k, b, s.0)))
            .map(|(k, b, s)| if (s >> b) & 1 == 0 { y[k * r + b] } else { -y[k * r + b] })
            .sum()
    }

    #[test]
    fn candidate_order_tie_breaks() {
        let a = Candidate { parent: 1, symbol: 3, pm: -1.0 };
        let b = Candidate { parent: 0, symbol: 9, pm: -1.0 };
        let c = Candidate { parent: 0, symbol: 2, pm: -1.0 };
        let d = Candidate { parent: 5, symbol: 0, pm: -0.5 };
        let mut v = vec![a, b, c, d];
        select_top(&mut v, 3);
        assert_eq!(v, vec![d, c, b]);
    }

    #[test]
    fn empty_list_size_is_rejected() {
        let code = toy_code(4, 4, &[3]);
        let ch = vec![Llrv::uniform(4); 4];
        assert!(matches!(scl_decode(&code, &ch, &SclConfig::new(0)), Err(Error::DecoderConfig(_))));
        assert!(matches!(scl_decode(&code, &ch[..3], &SclConfig::new(1)), Err(Error::Length { .. })));
    }

    #[test]
    fn noiseless_round_trip_all_modes() {
        let code = toy_code(16, 16, &[7, 10, 11, 12, 13, 14, 15]);
        let mut rng = frame_rng(3, 0);
        for _ in 0..30 {
            let msg: Vec<GfElement> = (0..code.k()).map(|_| GfElement(rng.random_range(0..16))).collect();
            let c = code.encode_message(&msg).unwrap();
            let y = transmit_flat(&c, 4, 0.0, &mut rng);
            let ch: Vec<Llrv> = y.chunks(4).map(|ys| channel_llrv(ys, 0.5)).collect();
            for precision in [Precision::Float, Precision::Quantized(Quantizer::default())] {
                assert_eq!(sc_decode(&code, &ch, precision).unwrap().message, msg);
                for l in [1, 2, 4, 8] {
                    assert_eq!(scl_decode(&code, &ch, &SclConfig { list_size: l, precision }).unwrap().message, msg);
                }
            }
        }
    }

    #[test]
    fn exhaustive_list_is_maximum_likelihood() {
        let code = toy_code(4, 4, &[1, 3]);
        for frame in 0..200 {
            let (_, y, ch) = noisy_frame(&code, 0.0, 11, frame);
            let out = scl_decode(&code, &ch, &SclConfig::new(16)).unwrap();
            assert_eq!(out.list.len(), 16);
            let ml = all_messages(2, 4)
                .max_by(|a, b| correlation(&code, a, &y).total_cmp(&correlation(&code, b, &y)))
                .unwrap();
            assert_eq!(out.message, ml);
            // Metrics are log-likelihoods: differences equal correlation differences / sigma^2.
            let s2 = noise_variance(0.0, code.rate());
            let m0 = code.input_to_message(&out.list[0].input);
            let m1 = code.input_to_message(&out.list[1].input);
            let want = (correlation(&code, &m0, &y) - correlation(&code, &m1, &y)) / s2;
            assert!((out.list[0].pm - out.list[1].pm - want).abs() < 1e-9);
        }
    }

    #[test]
    fn list_paths_are_distinct_and_sorted() {
        let code = toy_code(16, 4, &[5, 6, 7, 9, 10, 11, 12, 13, 14, 15]);
        for frame in 0..50 {
            let (_, _, ch) = noisy_frame(&code, -1.0, 2, frame);
            let out = scl_decode(&code, &ch, &SclConfig::new(8)).unwrap();
            assert_eq!(out.list.len(), 8);
            for w in out.list.windows(2) {
                assert!(w[0].pm >= w[1].pm);
                assert_ne!(w[0].input, w[1].input);
            }
            for e in &out.list {
                assert!(code.encode(&e.input).is_ok());
            }
        }
    }

    #[test]
    fn larger_list_never_lowers_best_metric_on_toy_code() {
        // With an exhaustive list the best metric is the ML metric, an upper bound for any list.
        let code = toy_code(8, 4, &[3, 5, 6, 7]);
        for frame in 0..100 {
            let (_, _, ch) = noisy_frame(&code, 0.0, 5, frame);
            let full = scl_decode(&code, &ch, &SclConfig::new(256)).unwrap().pm;
            for l in [1, 2, 4, 16] {
                assert!(scl_decode(&code, &ch, &SclConfig::new(l)).unwrap().pm <= full + 1e-9);
            }
        }
    }

    #[test]
    fn quantized_metrics_stay_on_grid_and_saturate() {
        let code = toy_code(16, 16, &[7, 10, 11, 12, 13, 14, 15]);
        let qz = Quantizer::default();
        for frame in 0..20 {
            let (_, _, ch) = noisy_frame(&code, -2.0, 8, frame);
            let out = scl_decode(&code, &ch, &SclConfig { list_size: 4, precision: Precision::Quantized(qz) }).unwrap();
            assert_eq!(out.pm, 0.0);
            for e in &out.list {
                assert_eq!((e.pm / qz.step).fract(), 0.0);
                assert!(e.pm >= -65535.0 * qz.step);
            }
        }
    }

    #[test]
    fn binary_sc_matches_min_sum_free_reference_on_repetition_code() {
        // N=4 repetition code: the ML decision is the sign of the total LLR.
        let code = toy_code(4, 2, &[3]);
        for frame in 0..200 {
            let (_, _, ch) = noisy_frame(&code, 1.0, 21, frame);
            let total: f64 = ch.iter().map(|l| l[0] - l[1]).sum();
            let out = sc_decode(&code, &ch, Precision::Float).unwrap();
            if total.abs() > 1e-9 {
                assert_eq!(out.message[0].0, u8::from(total < 0.0));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn select_top_matches_full_sort(pms in proptest::collection::vec(-20i32..0, 1..300), l in 1usize..40) {
                let cands: Vec<Candidate> = pms.iter().enumerate()
                    .map(|(i, &p)| Candidate { parent: i / 7, symbol: (i % 7) as u8, pm: p as f64 * 0.5 })
                    .collect();
                let mut full = cands.clone();
                full.sort_by(candidate_order);
                full.truncate(l);
                let mut top = cands;
                select_top(&mut top, l);
                prop_assert_eq!(top, full);
            }
        }
    }
}
