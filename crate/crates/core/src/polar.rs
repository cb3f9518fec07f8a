//! Code definition, kernel encoding, frozen-set construction and the
//! split of a code into `M` subcodes for split-tree decoding.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_llrvs_flat, frame_rng, noise_variance, transmit_flat};
use crate::error::{Error, Result};
use crate::gf::{GfContext, GfElement};
use crate::llrv::{argmax, log_sum_exp, KernelCoeffs, KernelTables, Precision};
use crate::trellis::Trellis;
use rand::Rng;

/// An (N, K) polar code over GF(q) with kernel `[1 0; alpha beta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    field: GfContext,
    kernel: KernelCoeffs,
    frozen: Vec<Option<GfElement>>,
    k: usize,
}

impl CodeSpec {
    /// `frozen[i]` is `Some(value)` for a frozen index and `None` for a free one.
    pub fn new(field: GfContext, kernel: KernelCoeffs, frozen: Vec<Option<GfElement>>) -> Result<Self> {
        let n = frozen.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidCode(format!("length {n} must be a power of two >= 2")));
        }
        if let Some(v) = frozen.iter().flatten().find(|v| v.0 as usize >= field.q()) {
            return Err(Error::ElementRange { value: v.0 as u32, q: field.q() });
        }
        if kernel.alpha.0 as usize >= field.q() || kernel.beta.0 as usize >= field.q() {
            return Err(Error::InvalidCode("kernel coefficient outside the field".into()));
        }
        KernelCoeffs::new(kernel.alpha, kernel.beta)?;
        let k = frozen.iter().filter(|f| f.is_none()).count();
        Ok(CodeSpec { field, kernel, frozen, k })
    }

    /// Code of length `n` with the given free indices; all other symbols frozen to zero.
    pub fn from_free_set(field: GfContext, kernel: KernelCoeffs, n: usize, free: &[usize]) -> Result<Self> {
        let mut frozen = vec![Some(GfElement::ZERO); n];
        for &i in free {
            if i >= n {
                return Err(Error::InvalidCode(format!("free index {i} outside length {n}")));
            }
            frozen[i] = None;
        }
        Self::new(field, kernel, frozen)
    }

    /// Code length N in symbols.
    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }

    /// Number of free symbols K.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `n = log2 N`.
    pub fn stages(&self) -> usize {
        self.len().trailing_zeros() as usize
    }

    pub fn field(&self) -> &GfContext {
        &self.field
    }

    pub fn q(&self) -> usize {
        self.field.q()
    }

    pub fn kernel(&self) -> KernelCoeffs {
        self.kernel
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.len() as f64
    }

    pub fn frozen(&self) -> &[Option<GfElement>] {
        &self.frozen
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i].is_some()
    }

    pub fn free_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.frozen.iter().enumerate().filter(|(_, f)| f.is_none()).map(|(i, _)| i)
    }

    pub fn kernel_tables(&self) -> KernelTables {
        KernelTables::new(&self.field, self.kernel).expect("kernel validated at construction")
    }

    /// Places message symbols on the free indices and frozen values elsewhere.
    pub fn message_to_input(&self, message: &[GfElement]) -> Result<Vec<GfElement>> {
        if message.len() != self.k {
            return Err(Error::Length { expected: self.k, actual: message.len() });
        }
        let mut it = message.iter();
        Ok(self.frozen.iter().map(|f| f.unwrap_or_else(|| *it.next().expect("count checked"))).collect())
    }

    /// Extracts the free symbols of an input vector.
    pub fn input_to_message(&self, u: &[GfElement]) -> Vec<GfElement> {
        self.free_indices().map(|i| u[i]).collect()
    }

    /// Encodes a full input vector after checking its frozen symbols.
    pub fn encode(&self, u: &[GfElement]) -> Result<Vec<GfElement>> {
        if u.len() != self.len() {
            return Err(Error::Length { expected: self.len(), actual: u.len() });
        }
        for (index, (f, x)) in self.frozen.iter().zip(u).enumerate() {
            if let Some(v) = f {
                if v != x {
                    return Err(Error::FrozenViolation { index, expected: v.0, actual: x.0 });
                }
            }
        }
        if let Some(x) = u.iter().find(|x| x.0 as usize >= self.q()) {
            return Err(Error::ElementRange { value: x.0 as u32, q: self.q() });
        }
        Ok(kernel_transform(u, &self.field, self.kernel))
    }

    pub fn encode_message(&self, message: &[GfElement]) -> Result<Vec<GfElement>> {
        self.encode(&self.message_to_input(message)?)
    }

    /// Same code with a different frozen pattern and values.
    pub fn with_frozen(&self, frozen: Vec<Option<GfElement>>) -> Result<Self> {
        Self::new(self.field.clone(), self.kernel, frozen)
    }

    /// Serializes to the text frozen-set format: a header `N K q alpha beta poly`
    /// followed by one `index value` line per frozen index (all decimal).
    pub fn to_frozen_file(&self) -> String {
        let mut s = format!(
            "{} {} {} {} {} {}\n",
            self.len(),
            self.k,
            self.q(),
            self.kernel.alpha.0,
            self.kernel.beta.0,
            self.field.poly()
        );
        for (i, f) in self.frozen.iter().enumerate() {
            if let Some(v) = f {
                writeln!(s, "{i} {}", v.0).expect("write to string");
            }
        }
        s
    }

    /// Parses the frozen-set format written by [`CodeSpec::to_frozen_file`].
    pub fn from_frozen_file(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let h: Vec<u64> = header.split_whitespace().map(parse_int).collect::<Result<_>>()?;
        let [n, k, q, alpha, beta, poly] = h[..] else {
            return Err(Error::Parse(format!("header needs 6 fields, got {}", h.len())));
        };
        let (n, k, q) = (n as usize, k as usize, q as usize);
        if !q.is_power_of_two() || q < 2 {
            return Err(Error::Parse(format!("field order {q} is not a power of two")));
        }
        let field = GfContext::new(q.trailing_zeros(), poly as u32)?;
        let kernel = KernelCoeffs::new(field.element(alpha as u32)?, field.element(beta as u32)?)?;
        let mut frozen = vec![None; n];
        for line in lines {
            let parts: Vec<u64> = line.split_whitespace().map(parse_int).collect::<Result<_>>()?;
            let [index, value] = parts[..] else {
                return Err(Error::Parse(format!("bad frozen line `{line}`")));
            };
            let index = index as usize;
            if index >= n {
                return Err(Error::Parse(format!("frozen index {index} outside length {n}")));
            }
            if frozen[index].is_some() {
                return Err(Error::Parse(format!("frozen index {index} listed twice")));
            }
            frozen[index] = Some(field.element(value as u32)?);
        }
        let code = Self::new(field, kernel, frozen)?;
        if code.k != k {
            return Err(Error::Parse(format!("header says K={k} but {} indices are free", code.k)));
        }
        Ok(code)
    }
}

fn parse_int(s: &str) -> Result<u64> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| Error::Parse(format!("`{s}` is not an integer")))
}

/// `u * F^{(x)n}` without frozen-symbol checks: n butterfly stages of
/// `(a, b) -> (a + alpha*b, beta*b)`.
pub fn kernel_transform(u: &[GfElement], field: &GfContext, kernel: KernelCoeffs) -> Vec<GfElement> {
    let mut x = u.to_vec();
    let n = x.len();
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                *a = field.add(*a, field.mul(kernel.alpha, *b));
                *b = field.mul(kernel.beta, *b);
            }
        }
        h *= 2;
    }
    x
}

/// Monte-Carlo parameters of the genie-aided construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub design_ebn0: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        ConstructionConfig { design_ebn0: 3.0, trials: 2000, seed: 1 }
    }
}

/// Per-index reliability estimates from genie-aided SC decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct GenieScores {
    /// First-error events: hard decision wrong while every earlier symbol was right.
    pub errors: Vec<u64>,
    /// Sum over trials of `1 - P(true symbol)`.
    pub soft: Vec<f64>,
    pub trials: usize,
}

const GENIE_CHUNK: usize = 64;

/// Runs genie-aided SC decoding of random inputs at `cfg.design_ebn0` (rate `rate`).
pub fn genie_scores(
    n: usize,
    rate: f64,
    field: &GfContext,
    kernel: KernelCoeffs,
    cfg: &ConstructionConfig,
) -> Result<GenieScores> {
    if cfg.trials < 1000 {
        return Err(Error::InvalidCode(format!("{} construction trials, need at least 1000", cfg.trials)));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidCode(format!("length {n} must be a power of two >= 2")));
    }
    let kt = KernelTables::new(field, kernel)?;
    let sigma2 = noise_variance(cfg.design_ebn0, rate);
    let q = field.q();
    let chunks: Vec<(Vec<u64>, Vec<f64>)> = (0..cfg.trials)
        .collect::<Vec<_>>()
        .par_chunks(GENIE_CHUNK)
        .map(|trials| {
            let mut errors = vec![0u64; n];
            let mut soft = vec![0f64; n];
            for &t in trials {
                let mut rng = frame_rng(cfg.seed, t as u64);
                let u: Vec<GfElement> = (0..n).map(|_| GfElement(rng.random_range(0..q) as u8)).collect();
                let c = kernel_transform(&u, field, kernel);
                let y = transmit_flat(&c, field.r(), sigma2.sqrt(), &mut rng);
                let ch = channel_llrvs_flat(&y, field.r(), sigma2);
                let mut trellis = Trellis::new(&kt, &ch, Precision::Float);
                let mut path = trellis.new_path();
                for (i, truth) in u.iter().enumerate() {
                    trellis.evaluate(&mut path, i).expect("in order");
                    let out = path.output();
                    if argmax(out) != truth.0 as usize {
                        errors[i] += 1;
                    }
                    let p_true = (out[truth.0 as usize] - log_sum_exp(out)).exp();
                    soft[i] += 1.0 - p_true;
                    trellis.commit(&mut path, truth.0, 0.0);
                }
            }
            (errors, soft)
        })
        .collect();
    let mut errors = vec![0u64; n];
    let mut soft = vec![0f64; n];
    for (e, s) in chunks {
        for i in 0..n {
            errors[i] += e[i];
            soft[i] += s[i];
        }
    }
    Ok(GenieScores { errors, soft, trials: cfg.trials })
}

/// Genie-aided Monte-Carlo construction: freezes (to zero) the `N-K`
/// indices with the most first-error events, ties broken by the soft score
/// and then by lower index.
pub fn construct_frozen_set(
    n: usize,
    k: usize,
    field: &GfContext,
    kernel: KernelCoeffs,
    cfg: &ConstructionConfig,
) -> Result<CodeSpec> {
    if k > n {
        return Err(Error::InvalidCode(format!("K={k} exceeds N={n}")));
    }
    if k == n || k == 0 {
        if cfg.trials < 1000 {
            return Err(Error::InvalidCode(format!("{} construction trials, need at least 1000", cfg.trials)));
        }
        let frozen = vec![if k == 0 { Some(GfElement::ZERO) } else { None }; n];
        return CodeSpec::new(field.clone(), kernel, frozen);
    }
    let scores = genie_scores(n, k as f64 / n as f64, field, kernel, cfg)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores.errors[b]
            .cmp(&scores.errors[a])
            .then(scores.soft[b].total_cmp(&scores.soft[a]))
            .then(a.cmp(&b))
    });
    let mut frozen = vec![None; n];
    for &i in &order[..n - k] {
        frozen[i] = Some(GfElement::ZERO);
    }
    CodeSpec::new(field.clone(), kernel, frozen)
}

/// Picks the kernel whose genie-aided SC error profile is most polarized:
/// smallest sum of the `k` lowest soft error scores. Returns the winner and every candidate's score.
pub fn search_kernel(
    n: usize,
    k: usize,
    field: &GfContext,
    candidates: &[KernelCoeffs],
    cfg: &ConstructionConfig,
) -> Result<(KernelCoeffs, Vec<(KernelCoeffs, f64)>)> {
    let mut scored = Vec::with_capacity(candidates.len());
    for &kernel in candidates {
        let s = genie_scores(n, k as f64 / n as f64, field, kernel, cfg)?;
        let mut soft = s.soft.clone();
        soft.sort_by(f64::total_cmp);
        let proxy = soft[..k].iter().sum::<f64>() / s.trials as f64;
        scored.push((kernel, proxy));
    }
    let best = scored
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(kc, _)| *kc)
        .ok_or_else(|| Error::InvalidCode("no kernel candidates".into()))?;
    Ok((best, scored))
}

/// Default kernel for GF(q): `[1 0; 1 1]` for q = 2, `[1 0; 7 1]` for
/// GF(256) (the winner of [`search_kernel`] for the (128, 64) code at 2 dB),
/// and `[1 0; 2 1]` otherwise.
pub fn default_kernel(q: usize) -> KernelCoeffs {
    let (alpha, beta) = match q {
        2 => (1, 1),
        256 => (7, 1),
        _ => (2, 1),
    };
    KernelCoeffs { alpha: GfElement(alpha), beta: GfElement(beta) }
}

/// How the code is factored into `M` subcodes.
///
/// Both layouts share the level transform `A`; they differ in which input
/// symbols meet at a level and which channel positions feed a sub-decoder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitLayout {
    /// `F^(n-m) (x) F^m`: level `i` holds the consecutive inputs
    /// `u[M i .. M i + M - 1]` and sub-decoder `j` reads the channel positions
    /// congruent to `j` mod `M`. The joint decisions follow the successive
    /// cancellation order, so no reliability is lost.
    #[default]
    Leaf,
    /// `F^m (x) F^(n-m)`: level `i` holds `u[k N/M + i]` and sub-decoder `j`
    /// reads the contiguous block `j`; the codeword is the concatenation of the
    /// subcode encodings. Each level pairs a symbol with one decided `N/2`
    /// positions later, so short lists break down.
    Root,
}

/// Frozen status of the `M` input symbols of one split level and of the
/// `M` sub-decoder symbols they generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConstraint {
    /// Frozen value of the `k`-th input symbol of the level.
    pub input_frozen: Vec<Option<GfElement>>,
    /// Value of sub-decoder symbol `w_j[i]` when it is fixed by frozen inputs alone.
    pub local_frozen: Vec<Option<GfElement>>,
}

impl LevelConstraint {
    /// Every sub-decoder symbol is fixed, so reconciliation can be skipped.
    pub fn bypass(&self) -> bool {
        self.local_frozen.iter().all(Option::is_some)
    }

    /// Some frozen input is not fixed locally and must be checked on assembly.
    pub fn cross_constrained(&self) -> bool {
        self.input_frozen.iter().any(Option::is_some) && !self.bypass()
    }
}

/// A code split into `M` subcodes of length `N/M`.
///
/// Level `i` couples the inputs `u_k` (placed by the [`SplitLayout`]) with
/// the sub-decoder symbols `w_j` through `w = A u`, where `A` is the
/// Kronecker power of `[1 alpha; 0 beta]` of order `M`. The full codeword is
/// the subcode encodings of the `w_j` sequences placed by
/// [`SplitSpec::merge_blocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    m: usize,
    layout: SplitLayout,
    code: CodeSpec,
    subcodes: Vec<CodeSpec>,
    transform: Vec<Vec<GfElement>>,
    inverse: Vec<Vec<GfElement>>,
    levels: Vec<LevelConstraint>,
    inv_diag: Vec<u8>,
}

impl SplitSpec {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn layout(&self) -> SplitLayout {
        self.layout
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    /// Position in `u` of input `k` of level `level`.
    pub fn input_index(&self, level: usize, k: usize) -> usize {
        input_index(self.layout, self.m, self.sub_len(), level, k)
    }

    /// Codeword position of entry `t` of sub-decoder `j`.
    pub fn channel_position(&self, j: usize, t: usize) -> usize {
        match self.layout {
            SplitLayout::Leaf => self.m * t + j,
            SplitLayout::Root => j * self.sub_len() + t,
        }
    }

    /// Splits a codeword-ordered sequence (symbols or channel LLRVs) into the
    /// `M` sub-decoder sequences.
    pub fn split_blocks<T: Clone>(&self, x: &[T]) -> Vec<Vec<T>> {
        (0..self.m).map(|j| (0..self.sub_len()).map(|t| x[self.channel_position(j, t)].clone()).collect()).collect()
    }

    /// Inverse of [`SplitSpec::split_blocks`].
    pub fn merge_blocks<T: Clone>(&self, blocks: &[Vec<T>]) -> Vec<T> {
        let mut out: Vec<T> = Vec::with_capacity(self.code.len());
        for p in 0..self.code.len() {
            let (j, t) = match self.layout {
                SplitLayout::Leaf => (p % self.m, p / self.m),
                SplitLayout::Root => (p / self.sub_len(), p % self.sub_len()),
            };
            out.push(blocks[j][t].clone());
        }
        out
    }

    pub fn subcodes(&self) -> &[CodeSpec] {
        &self.subcodes
    }

    pub fn sub_len(&self) -> usize {
        self.code.len() / self.m
    }

    /// `A` with `w = A u`.
    pub fn transform(&self) -> &[Vec<GfElement>] {
        &self.transform
    }

    /// `A^-1` with `u = A^-1 w`.
    pub fn inverse(&self) -> &[Vec<GfElement>] {
        &self.inverse
    }

    pub fn levels(&self) -> &[LevelConstraint] {
        &self.levels
    }

    /// Number of levels whose symbols are all frozen.
    pub fn bypass_levels(&self) -> usize {
        self.levels.iter().filter(|l| l.bypass()).count()
    }

    pub fn level_pattern(&self) -> Vec<bool> {
        self.levels.iter().map(LevelConstraint::bypass).collect()
    }

    fn apply(&self, matrix: &[Vec<GfElement>], x: &[GfElement]) -> Vec<GfElement> {
        let f = self.code.field();
        matrix
            .iter()
            .map(|row| row.iter().zip(x).fold(GfElement::ZERO, |acc, (a, v)| f.add(acc, f.mul(*a, *v))))
            .collect()
    }

    /// Sub-decoder symbols of one level from the input symbols.
    pub fn inputs_to_sub(&self, u: &[GfElement]) -> Vec<GfElement> {
        self.apply(&self.transform, u)
    }

    /// Input symbols of one level from the sub-decoder symbols.
    pub fn sub_to_inputs(&self, w: &[GfElement]) -> Vec<GfElement> {
        self.apply(&self.inverse, w)
    }

    /// Whether the sub-decoder symbols `w` of level `level` honour every frozen input.
    pub fn is_valid(&self, level: usize, w: &[u8]) -> bool {
        let c = &self.levels[level];
        let f = self.code.field();
        c.input_frozen.iter().zip(&self.inverse).all(|(fz, row)| match fz {
            None => true,
            Some(theta) => {
                let u = row.iter().zip(w).fold(0u8, |acc, (a, &v)| acc ^ f.mul_raw(a.0, v));
                u == theta.0
            }
        })
    }

    /// Sub-decoder symbol `w_j` forced by the frozen input `u_j` at `level`,
    /// given the symbols `w_k` of every higher sub-decoder `k > j` (entries
    /// `k <= j` of `w` are ignored). `A^-1` is upper triangular, so `u_j`
    /// depends only on `w_j` and higher symbols.
    pub fn resolve(&self, level: usize, j: usize, w: &[u8]) -> Option<u8> {
        let theta = self.levels[level].input_frozen[j]?;
        let f = self.code.field();
        let row = &self.inverse[j];
        let rest = (j + 1..self.m).fold(theta.0, |acc, k| acc ^ f.mul_raw(row[k].0, w[k]));
        Some(f.mul_raw(rest, self.inv_diag[j]))
    }

    /// Splits a full input vector into the `M` sub-decoder sequences.
    pub fn input_to_sub_sequences(&self, u: &[GfElement]) -> Vec<Vec<GfElement>> {
        let s = self.sub_len();
        let mut out = vec![Vec::with_capacity(s); self.m];
        for i in 0..s {
            let level: Vec<GfElement> = (0..self.m).map(|k| u[self.input_index(i, k)]).collect();
            for (j, w) in self.inputs_to_sub(&level).into_iter().enumerate() {
                out[j].push(w);
            }
        }
        out
    }

    /// Rebuilds the full input vector from the sub-decoder sequences.
    pub fn sub_sequences_to_input(&self, w: &[Vec<GfElement>]) -> Vec<GfElement> {
        let s = self.sub_len();
        let mut u = vec![GfElement::ZERO; self.code.len()];
        for i in 0..s {
            let level: Vec<GfElement> = (0..self.m).map(|j| w[j][i]).collect();
            for (k, x) in self.sub_to_inputs(&level).into_iter().enumerate() {
                u[self.input_index(i, k)] = x;
            }
        }
        u
    }
}

fn kron(a: &[Vec<GfElement>], b: &[Vec<GfElement>], f: &GfContext) -> Vec<Vec<GfElement>> {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![GfElement::ZERO; ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = f.mul(a[i][j], b[k][l]);
                }
            }
        }
    }
    out
}

/// Gauss-Jordan inverse over GF(q).
fn invert(m: &[Vec<GfElement>], f: &GfContext) -> Result<Vec<Vec<GfElement>>> {
    let n = m.len();
    let mut a: Vec<Vec<GfElement>> = m.to_vec();
    let mut inv: Vec<Vec<GfElement>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { GfElement::ONE } else { GfElement::ZERO }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::ZeroInverse)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = f.inv(a[col][col])?;
        for j in 0..n {
            a[col][j] = f.mul(a[col][j], p);
            inv[col][j] = f.mul(inv[col][j], p);
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col];
                for j in 0..n {
                    let (x, y) = (f.mul(factor, a[col][j]), f.mul(factor, inv[col][j]));
                    a[r][j] = f.add(a[r][j], x);
                    inv[r][j] = f.add(inv[r][j], y);
                }
            }
        }
    }
    Ok(inv)
}

fn input_index(layout: SplitLayout, m: usize, s: usize, level: usize, k: usize) -> usize {
    match layout {
        SplitLayout::Leaf => m * level + k,
        SplitLayout::Root => k * s + level,
    }
}

/// Splits `code` into `m` subcodes (m in {2, 4}) with the default layout.
pub fn split_code(code: &CodeSpec, m: usize) -> Result<SplitSpec> {
    split_code_with_layout(code, m, SplitLayout::default())
}

/// Splits `code` into `m` subcodes (m in {2, 4}) linked by per-level constraints.
pub fn split_code_with_layout(code: &CodeSpec, m: usize, layout: SplitLayout) -> Result<SplitSpec> {
    if !matches!(m, 2 | 4) || m >= code.len() {
        return Err(Error::SplitFactor(m));
    }
    let f = code.field();
    let kc = code.kernel();
    let base = vec![vec![GfElement::ONE, kc.alpha], vec![GfElement::ZERO, kc.beta]];
    let mut transform = base.clone();
    while transform.len() < m {
        transform = kron(&base, &transform, f);
    }
    let inverse = invert(&transform, f)?;
    let s = code.len() / m;
    let mut levels = Vec::with_capacity(s);
    for i in 0..s {
        let input_frozen: Vec<Option<GfElement>> = (0..m).map(|k| code.frozen()[input_index(layout, m, s, i, k)]).collect();
        let local_frozen = transform
            .iter()
            .map(|row| {
                row.iter().zip(&input_frozen).try_fold(GfElement::ZERO, |acc, (a, fz)| {
                    if a.is_zero() {
                        Some(acc)
                    } else {
                        fz.map(|v| f.add(acc, f.mul(*a, v)))
                    }
                })
            })
            .collect();
        levels.push(LevelConstraint { input_frozen, local_frozen });
    }
    let subcodes = (0..m)
        .map(|j| CodeSpec::new(f.clone(), kc, levels.iter().map(|l| l.local_frozen[j]).collect()))
        .collect::<Result<Vec<_>>>()?;
    debug_assert!((0..m).all(|j| (0..j).all(|k| inverse[j][k].is_zero())));
    let inv_diag = (0..m).map(|j| f.inv(inverse[j][j]).map(|x| x.0)).collect::<Result<Vec<_>>>()?;
    Ok(SplitSpec { m, layout, code: code.clone(), subcodes, transform, inverse, levels, inv_diag })
}
