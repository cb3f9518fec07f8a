//! Log-likelihood vectors and the trellis node functions.
//!
//! An [`Llrv`] holds `log p(theta)` for every symbol `theta` of GF(q),
//! normalized so that its largest entry is zero. The check-type node (F)
//! is an XOR convolution; the variable-type node (G) is two index
//! permutations and an elementwise sum.
//!
//! The convolution is summed directly rather than through the Walsh-Hadamard
//! transform: the transform spreads rounding error of the order of the
//! largest probability over every output, so entries far below the maximum
//! lose all relative precision, while a direct sum of positive terms keeps
//! every entry accurate across the whole clamp range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{GfContext, GfElement};

/// Floor of the log domain after normalization (natural-log units).
pub const CLAMP: f64 = 80.0;

/// Probabilities below this are floored before taking the logarithm.
pub const PROB_FLOOR: f64 = 1e-30;

/// Length-q vector of normalized log-likelihoods for one code symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Llrv(Vec<f64>);

impl Llrv {
    /// Wraps raw values without normalizing them.
    pub fn from_raw(values: Vec<f64>) -> Self {
        Llrv(values)
    }

    /// All-zero vector: every symbol equally likely.
    pub fn uniform(q: usize) -> Self {
        Llrv(vec![0.0; q])
    }

    /// Symbol `symbol` is certain; every other entry sits at the clamp.
    pub fn certain(q: usize, symbol: GfElement) -> Self {
        let mut v = vec![-CLAMP; q];
        v[symbol.0 as usize] = 0.0;
        Llrv(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most likely symbol; ties go to the smallest symbol.
    pub fn argmax(&self) -> GfElement {
        GfElement(argmax(&self.0) as u8)
    }

    /// `log p(theta)` with the probabilities rescaled to sum to one.
    pub fn log_probs(&self) -> Vec<f64> {
        let lse = log_sum_exp(&self.0);
        self.0.iter().map(|v| v - lse).collect()
    }
}

impl std::ops::Index<usize> for Llrv {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Kernel coefficients of `F = [1 0; alpha beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCoeffs {
    pub alpha: GfElement,
    pub beta: GfElement,
}

impl KernelCoeffs {
    pub fn new(alpha: GfElement, beta: GfElement) -> Result<Self> {
        if alpha.is_zero() || beta.is_zero() {
            return Err(Error::ZeroMultiplier);
        }
        Ok(KernelCoeffs { alpha, beta })
    }

    /// The binary kernel `[1 0; 1 1]`.
    pub fn binary() -> Self {
        KernelCoeffs { alpha: GfElement::ONE, beta: GfElement::ONE }
    }
}

/// Index tables derived from a kernel, shared by every node evaluation.
#[derive(Debug, Clone)]
pub struct KernelTables {
    q: usize,
    pub(crate) mul_alpha: Vec<u8>,
    pub(crate) mul_beta: Vec<u8>,
    /// `w -> (beta / alpha) * w`, aligning the F-node partner to an XOR convolution.
    pub(crate) f_perm: Vec<u8>,
}

impl KernelTables {
    pub fn new(field: &GfContext, kernel: KernelCoeffs) -> Result<Self> {
        let inv_alpha = field.inv(kernel.alpha).map_err(|_| Error::ZeroMultiplier)?;
        if kernel.beta.is_zero() {
            return Err(Error::ZeroMultiplier);
        }
        let ratio = field.mul(kernel.beta, inv_alpha);
        Ok(KernelTables {
            q: field.q(),
            mul_alpha: field.mul_row(kernel.alpha),
            mul_beta: field.mul_row(kernel.beta),
            f_perm: field.mul_row(ratio),
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }
}

/// Reusable buffers for F-node evaluation.
#[derive(Debug, Clone, Default)]
pub struct NodeScratch {
    a: Vec<f64>,
    b: Vec<f64>,
    /// Blocks of `a` with permuted lanes; see [`xor_convolve`].
    shifted: Vec<[f64; LANES]>,
}

impl NodeScratch {
    pub fn new(q: usize) -> Self {
        NodeScratch { a: vec![0.0; q], b: vec![0.0; q], shifted: vec![[0.0; LANES]; q] }
    }
}

const LANES: usize = 8;

/// `out[u] = sum_w a[u ^ w] * b[w]`.
///
/// With `u = 8j + t` and `w = 8h + l`, output block `j` is the sum over `h`
/// of 8-point XOR convolutions of block `j ^ h` of `a` with block `h` of `b`;
/// `shifted[l * blocks + x][t] = a[8x + (t ^ l)]` makes each of those a run
/// of contiguous 8-lane multiply-adds.
fn xor_convolve(a: &[f64], b: &[f64], out: &mut [f64], shifted: &mut Vec<[f64; LANES]>) {
    let q = a.len();
    if q < LANES {
        for (u, o) in out.iter_mut().enumerate() {
            *o = b.iter().enumerate().map(|(w, y)| a[u ^ w] * y).sum();
        }
        return;
    }
    let blocks = q / LANES;
    shifted.resize(q, [0.0; LANES]);
    for l in 0..LANES {
        for x in 0..blocks {
            let block = &mut shifted[l * blocks + x];
            for (t, v) in block.iter_mut().enumerate() {
                *v = a[x * LANES + (t ^ l)];
            }
        }
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        unsafe { accumulate_avx2(b, shifted, out) };
        return;
    }
    accumulate(b, shifted, out);
}

/// Wider registers only; no fused multiply-add, so results are bit-identical
/// to [`accumulate`].
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn accumulate_avx2(b: &[f64], shifted: &[[f64; LANES]], out: &mut [f64]) {
    accumulate(b, shifted, out)
}

#[inline(always)]
fn accumulate(b: &[f64], shifted: &[[f64; LANES]], out: &mut [f64]) {
    let blocks = b.len() / LANES;
    for (j, dst) in out.chunks_exact_mut(LANES).enumerate() {
        let mut acc = [0.0; LANES];
        for (h, bb) in b.chunks_exact(LANES).enumerate() {
            let x = j ^ h;
            for (l, &c) in bb.iter().enumerate() {
                let s = &shifted[l * blocks + x];
                for t in 0..LANES {
                    acc[t] += c * s[t];
                }
            }
        }
        dst.copy_from_slice(&acc);
    }
}

/// In-place unnormalized fast Walsh-Hadamard transform.
pub fn wht_in_place(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

/// Unnormalized Walsh-Hadamard transform; applying it twice scales by the length.
pub fn wht(v: &[f64]) -> Result<Vec<f64>> {
    if !v.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(v.len()));
    }
    let mut out = v.to_vec();
    wht_in_place(&mut out);
    Ok(out)
}

/// `out[t] = L[g * t + offset]`.
pub fn affine_permute(
    l: &Llrv,
    g: GfElement,
    offset: GfElement,
    field: &GfContext,
) -> Result<Llrv> {
    if g.is_zero() {
        return Err(Error::ZeroMultiplier);
    }
    if l.len() != field.q() {
        return Err(Error::Length { expected: field.q(), actual: l.len() });
    }
    let row = field.mul_row(g);
    Ok(Llrv(row.iter().map(|&gt| l.0[(gt ^ offset.0) as usize]).collect()))
}

#[inline]
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `ln(sum(exp(v)))`, stable for any finite input.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Shifts so the maximum is zero and clamps the tail. Returns the shift.
#[inline]
pub(crate) fn normalize_in_place(v: &mut [f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for x in v.iter_mut() {
        *x = (*x - m).max(-CLAMP);
    }
    m
}

/// Shift-normalizes a log vector to max 0 and clamps entries at `-CLAMP`.
pub fn normalize(v: &[f64]) -> Result<Llrv> {
    if v.iter().any(|x| x.is_nan()) || !v.iter().any(|x| x.is_finite()) {
        return Err(Error::NoFiniteEntry);
    }
    let mut out = v.to_vec();
    normalize_in_place(&mut out);
    Ok(Llrv(out))
}

/// F node on raw slices: marginalizes the partner symbol of the kernel.
pub(crate) fn f_node_into(
    l1: &[f64],
    l2: &[f64],
    out: &mut [f64],
    kt: &KernelTables,
    scratch: &mut NodeScratch,
) {
    let q = kt.q;
    if scratch.a.len() != q {
        *scratch = NodeScratch::new(q);
    }
    let (a, b) = (&mut scratch.a, &mut scratch.b);
    for t in 0..q {
        a[t] = l1[t].exp();
        b[t] = l2[kt.f_perm[t] as usize].exp();
    }
    xor_convolve(a, b, out, &mut scratch.shifted);
    for o in out.iter_mut() {
        *o = o.max(PROB_FLOOR).ln();
    }
    normalize_in_place(out);
}

/// G node on raw slices: conditions on the decided partial sum `mu`.
#[inline]
pub(crate) fn g_node_into(l1: &[f64], l2: &[f64], mu: u8, out: &mut [f64], kt: &KernelTables) {
    for (t, o) in out.iter_mut().enumerate() {
        *o = l1[(kt.mul_alpha[t] ^ mu) as usize] + l2[kt.mul_beta[t] as usize];
    }
    normalize_in_place(out);
}

/// Check-type node: `p(u0) ~ sum_u1 p1(u0 + alpha*u1) * p2(beta*u1)`.
pub fn f_node(l1: &Llrv, l2: &Llrv, kt: &KernelTables) -> Llrv {
    let mut out = vec![0.0; kt.q];
    f_node_into(&l1.0, &l2.0, &mut out, kt, &mut NodeScratch::new(kt.q));
    Llrv(out)
}

/// Variable-type node: `p(u1) ~ p1(mu + alpha*u1) * p2(beta*u1)`.
pub fn g_node(l1: &Llrv, l2: &Llrv, mu: GfElement, kt: &KernelTables) -> Llrv {
    let mut out = vec![0.0; kt.q];
    g_node_into(&l1.0, &l2.0, mu.0, &mut out, kt);
    Llrv(out)
}

/// Brute-force evaluation of the node functions straight from their
/// defining sums, used as an independent reference.
///
/// `mu = None` evaluates the F node in O(q^2); `Some(mu)` the G node in O(q).
pub fn node_oracle(
    l1: &Llrv,
    l2: &Llrv,
    mu: Option<GfElement>,
    kernel: KernelCoeffs,
    field: &GfContext,
) -> Llrv {
    let q = field.q();
    let p1: Vec<f64> = l1.0.iter().map(|v| v.exp()).collect();
    let p2: Vec<f64> = l2.0.iter().map(|v| v.exp()).collect();
    let mut logs = vec![0.0; q];
    match mu {
        None => {
            for (u0, slot) in logs.iter_mut().enumerate() {
                let mut acc = 0.0;
                for u1 in field.elements() {
                    let x = u0 as u8 ^ field.mul(kernel.alpha, u1).0;
                    let y = field.mul(kernel.beta, u1).0;
                    acc += p1[x as usize] * p2[y as usize];
                }
                *slot = acc.max(PROB_FLOOR).ln();
            }
        }
        Some(mu) => {
            for (u1, slot) in logs.iter_mut().enumerate() {
                let u1 = GfElement(u1 as u8);
                let x = field.add(mu, field.mul(kernel.alpha, u1));
                let y = field.mul(kernel.beta, u1);
                *slot = l1.0[x.0 as usize] + l2.0[y.0 as usize];
            }
        }
    }
    normalize_in_place(&mut logs);
    Llrv(logs)
}

/// Fixed-point emulation: 8-bit LLRV magnitudes and 16-bit path metrics,
/// both in units of `step` natural-log units, with saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub step: f64,
    pub llr_bits: u32,
    pub pm_bits: u32,
}

impl Default for Quantizer {
    fn default() -> Self {
        Quantizer { step: 0.5, llr_bits: 8, pm_bits: 16 }
    }
}

impl Quantizer {
    fn llr_floor(&self) -> f64 {
        -(((1u64 << self.llr_bits) - 1) as f64) * self.step
    }

    fn pm_floor(&self) -> f64 {
        -(((1u64 << self.pm_bits) - 1) as f64) * self.step
    }

    /// Rounds a normalized LLRV onto the grid and saturates its magnitude.
    pub fn quantize_llrv(&self, v: &mut [f64]) {
        let floor = self.llr_floor();
        for x in v.iter_mut() {
            *x = ((*x / self.step).round() * self.step).max(floor);
        }
    }

    /// Saturates a path metric held relative to the best survivor.
    pub fn saturate_pm(&self, pm: f64) -> f64 {
        pm.max(self.pm_floor())
    }
}

/// Arithmetic mode of the decoders.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Precision {
    /// Double-precision reference; metrics are exact log-probabilities.
    #[default]
    Float,
    /// Fixed-point emulation with max-normalized metric increments.
    Quantized(Quantizer),
}
