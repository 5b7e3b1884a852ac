//! Unbiased compression operators.
//!
//! A compressor `C` in the class U(ω) satisfies `E[C(x)] = x` and
//! `E‖C(x) − x‖² ≤ ω‖x‖²`. The operators here are the identity, rand-K
//! sparsification, natural (power-of-two) quantization, and compositions of
//! these. Each produces a sparse [`CompressedMessage`] whose `bit_length` is
//! the exact size of its fixed-width encoding (see [`codec`]).
//!
//! Compression is information-theoretically limited: squeezing vectors of
//! R^d into `b` bits forces `b(1 + ω) = Ω(d)`, so no operator here can beat
//! rand-K combined with natural quantization by more than a constant factor.

pub mod codec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Bits for an unquantized real on the wire.
pub const FLOAT_BITS: u64 = 32;
/// Bits for a natural-compressed real: sign plus 8-bit exponent.
pub const NATURAL_BITS: u64 = 9;

/// Smallest and largest binary exponents representable by the natural code.
pub const NATURAL_MIN_EXP: i32 = -127;
pub const NATURAL_MAX_EXP: i32 = 127;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressorKind {
    Identity,
    RandK {
        k: usize,
    },
    Natural,
    /// `outer ∘ inner`: the inner operator is applied first.
    Composed {
        outer: Box<CompressorKind>,
        inner: Box<CompressorKind>,
    },
}

/// Whether a family of per-machine compressors draws independent randomness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Independence {
    #[default]
    MutuallyIndependent,
    SharedRandomness,
}

/// How carried values are represented on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueCoding {
    Float32,
    Natural,
}

impl ValueCoding {
    pub fn bits(self) -> u64 {
        match self {
            ValueCoding::Float32 => FLOAT_BITS,
            ValueCoding::Natural => NATURAL_BITS,
        }
    }
}

impl CompressorKind {
    pub fn rand_k(k: usize) -> Self {
        CompressorKind::RandK { k }
    }

    pub fn composed(outer: CompressorKind, inner: CompressorKind) -> Self {
        CompressorKind::Composed { outer: Box::new(outer), inner: Box::new(inner) }
    }

    /// Relative variance when acting on a vector of `dim` coordinates.
    pub fn omega_on(&self, dim: usize) -> f64 {
        match self {
            CompressorKind::Identity => 0.0,
            CompressorKind::Natural => 1.0 / 8.0,
            CompressorKind::RandK { k } => dim as f64 / *k as f64 - 1.0,
            CompressorKind::Composed { outer, inner } => {
                (1.0 + outer.omega_on(dim)) * (1.0 + inner.omega_on(dim)) - 1.0
            }
        }
    }

    pub fn value_coding(&self) -> ValueCoding {
        if self.contains_natural() {
            ValueCoding::Natural
        } else {
            ValueCoding::Float32
        }
    }

    fn contains_natural(&self) -> bool {
        match self {
            CompressorKind::Natural => true,
            CompressorKind::Identity | CompressorKind::RandK { .. } => false,
            CompressorKind::Composed { outer, inner } => outer.contains_natural() || inner.contains_natural(),
        }
    }

    fn check_domain(&self, dim: usize) -> Result<()> {
        match self {
            CompressorKind::RandK { k } if *k == 0 || *k > dim => {
                Err(Error::Contract(format!("rand-K needs 1 <= K <= {dim}, got K = {k}")))
            }
            CompressorKind::Composed { outer, inner } => {
                outer.check_domain(dim)?;
                inner.check_domain(dim)
            }
            _ => Ok(()),
        }
    }
}

/// A declared unbiased compressor on R^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub kind: CompressorKind,
    pub dim: usize,
    #[serde(default)]
    pub independence: Independence,
}

impl CompressorSpec {
    pub fn new(kind: CompressorKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Contract("compressor dimension must be positive".into()));
        }
        kind.check_domain(dim)?;
        Ok(Self { kind, dim, independence: Independence::MutuallyIndependent })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CompressorKind::Identity, dim)
    }

    pub fn rand_k(dim: usize, k: usize) -> Result<Self> {
        Self::new(CompressorKind::rand_k(k), dim)
    }

    pub fn natural(dim: usize) -> Result<Self> {
        Self::new(CompressorKind::Natural, dim)
    }

    /// rand-K followed by natural quantization of the kept values.
    pub fn rand_k_natural(dim: usize, k: usize) -> Result<Self> {
        Self::new(CompressorKind::composed(CompressorKind::Natural, CompressorKind::rand_k(k)), dim)
    }

    pub fn with_independence(mut self, independence: Independence) -> Self {
        self.independence = independence;
        self
    }

    pub fn omega(&self) -> f64 {
        self.kind.omega_on(self.dim)
    }

    /// Relative variance when only `k` coordinates are compressed.
    pub fn omega_restricted(&self, k: usize) -> f64 {
        self.kind.omega_on(k)
    }
}

/// A sparse compressed vector in R^d together with its encoded size.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedMessage {
    pub dim: usize,
    /// Strictly increasing coordinates carried by the message.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub coding: ValueCoding,
    pub bit_length: u64,
}

impl CompressedMessage {
    pub fn empty(dim: usize, coding: ValueCoding) -> Self {
        Self { dim, indices: Vec::new(), values: Vec::new(), coding, bit_length: 0 }
    }

    fn from_entries(dim: usize, entries: Vec<(usize, f64)>, coding: ValueCoding) -> Self {
        let (indices, values): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let bit_length = bits_for(coding, indices.len(), dim);
        Self { dim, indices, values, coding, bit_length }
    }

    pub fn support(&self) -> &[usize] {
        &self.indices
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.add_to(1.0, &mut out);
        out
    }

    /// `out += scale * C(x)`
    pub fn add_to(&self, scale: f64, out: &mut [f64]) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] += scale * v;
        }
    }

    /// Rounds float-coded payload values to single precision, modelling the
    /// 32-bit transmission that the bit count charges for.
    pub fn quantize_to_f32(&mut self) {
        if self.coding == ValueCoding::Float32 {
            self.values.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }
}

/// `⌈log₂ d⌉`, with `⌈log₂ 1⌉ = 0`.
pub fn ceil_log2(d: usize) -> u32 {
    if d <= 1 {
        0
    } else {
        usize::BITS - (d - 1).leading_zeros()
    }
}

fn bits_for(coding: ValueCoding, support_size: usize, dim: usize) -> u64 {
    let values = support_size as u64 * coding.bits();
    let index_overhead = if support_size < dim { support_size as u64 * ceil_log2(dim) as u64 } else { 0 };
    values + index_overhead
}

/// Payload bits of a message with `support_size` carried coordinates in
/// R^d: a fixed per-value cost plus `⌈log₂ d⌉` bits per index whenever the
/// support is a strict subset. Composition charges the quantizer's value
/// cost on the sparsifier's support.
pub fn encoded_bits(spec: &CompressorSpec, support_size: usize, dim: usize) -> u64 {
    debug_assert!(support_size <= dim);
    bits_for(spec.kind.value_coding(), support_size, dim)
}

/// Averaged relative variance of a family of uplink compressors: `ω/n`
/// under mutual independence, `ω` otherwise.
pub fn omega_av(specs: &[CompressorSpec]) -> Result<f64> {
    let dim = specs.first().map_or(0, |s| s.dim);
    omega_av_on(specs, dim)
}

/// [`omega_av`] for compressors acting on `dim` coordinates (a shared
/// subset of size `dim`).
pub fn omega_av_on(specs: &[CompressorSpec], dim: usize) -> Result<f64> {
    let first =
        specs.first().ok_or_else(|| Error::Contract("omega_av needs at least one compressor".into()))?;
    let omega = first.omega_restricted(dim);
    for s in &specs[1..] {
        if s.dim != first.dim || (s.omega_restricted(dim) - omega).abs() > 1e-12 * (1.0 + omega) {
            return Err(Error::Contract("omega_av needs compressors sharing dimension and variance".into()));
        }
    }
    let independent = specs.iter().all(|s| s.independence == Independence::MutuallyIndependent);
    Ok(if independent { omega / specs.len() as f64 } else { omega })
}

/// Applies `spec` to the whole vector.
pub fn compress<R: Rng + ?Sized>(spec: &CompressorSpec, x: &[f64], rng: &mut R) -> Result<CompressedMessage> {
    check_dim(spec.dim, x.len())?;
    let domain: Vec<usize> = (0..spec.dim).collect();
    compress_on(spec, x, &domain, rng)
}

/// Applies `spec` to `x` restricted to the coordinate subset `omega_set`;
/// everything outside the subset is zero in the output.
pub fn compress_restricted<R: Rng + ?Sized>(
    spec: &CompressorSpec,
    x: &[f64],
    omega_set: &[usize],
    rng: &mut R,
) -> Result<CompressedMessage> {
    check_dim(spec.dim, x.len())?;
    if omega_set.is_empty() {
        return Err(Error::Contract("coordinate subset is empty".into()));
    }
    let mut domain = omega_set.to_vec();
    domain.sort_unstable();
    if domain.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Contract("coordinate subset has duplicates".into()));
    }
    if let Some(&last) = domain.last() {
        if last >= spec.dim {
            return Err(Error::Contract(format!("coordinate {last} outside [0, {})", spec.dim)));
        }
    }
    spec.kind.check_domain(domain.len())?;
    compress_on(spec, x, &domain, rng)
}

fn compress_on<R: Rng + ?Sized>(
    spec: &CompressorSpec,
    x: &[f64],
    domain: &[usize],
    rng: &mut R,
) -> Result<CompressedMessage> {
    let coding = spec.kind.value_coding();
    if domain.iter().all(|&i| x[i] == 0.0) {
        return Ok(CompressedMessage::empty(spec.dim, coding));
    }
    let entries: Vec<(usize, f64)> = domain.iter().map(|&i| (i, x[i])).collect();
    let entries = apply(&spec.kind, domain, entries, rng)?;
    Ok(CompressedMessage::from_entries(spec.dim, entries, coding))
}

/// One stage of a (possibly composed) compressor acting on sorted sparse
/// entries whose coordinates lie in `domain`.
fn apply<R: Rng + ?Sized>(
    kind: &CompressorKind,
    domain: &[usize],
    entries: Vec<(usize, f64)>,
    rng: &mut R,
) -> Result<Vec<(usize, f64)>> {
    match kind {
        CompressorKind::Identity => Ok(entries),
        CompressorKind::Natural => {
            entries.into_iter().map(|(i, v)| natural_round(v, rng).map(|r| (i, r))).collect()
        }
        CompressorKind::RandK { k } => {
            let mut chosen: Vec<usize> =
                sample_subset(domain.len(), *k, rng).into_iter().map(|j| domain[j]).collect();
            chosen.sort_unstable();
            let scale = domain.len() as f64 / *k as f64;
            // both lists are sorted: merge-intersect
            let mut out = Vec::with_capacity(chosen.len());
            let mut it = entries.into_iter().peekable();
            for c in chosen {
                while it.peek().is_some_and(|&(i, _)| i < c) {
                    it.next();
                }
                if let Some(&(i, v)) = it.peek() {
                    if i == c {
                        out.push((i, v * scale));
                    }
                }
            }
            Ok(out)
        }
        CompressorKind::Composed { outer, inner } => {
            let mid = apply(inner, domain, entries, rng)?;
            apply(outer, domain, mid, rng)
        }
    }
}

/// Uniform `k`-subset of `0..m` by a partial Fisher–Yates shuffle. The
/// returned positions are in draw order.
pub fn sample_subset<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Vec<usize> {
    assert!(k <= m, "cannot draw {k} of {m}");
    let mut pool: Vec<usize> = (0..m).collect();
    for j in 0..k {
        let r = rng.random_range(j..m);
        pool.swap(j, r);
    }
    pool.truncate(k);
    pool
}

fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Unbiased stochastic rounding of `v` to one of the two powers of two
/// bracketing `|v|`, keeping the sign. Exact powers of two are returned
/// unchanged without consuming randomness. Magnitudes below `2^-127` round
/// to `0` or `2^-127`.
pub fn natural_round<R: Rng + ?Sized>(v: f64, rng: &mut R) -> Result<f64> {
    if v == 0.0 {
        return Ok(0.0);
    }
    if !v.is_finite() {
        return Err(Error::OutOfRange(v));
    }
    let a = v.abs();
    let floor = pow2(NATURAL_MIN_EXP);
    if a < floor {
        let up = rng.random::<f64>() < a / floor;
        return Ok(if up { floor.copysign(v) } else { 0.0 });
    }
    let e = binary_exponent(a);
    if e > NATURAL_MAX_EXP || (e == NATURAL_MAX_EXP && a > pow2(e)) {
        return Err(Error::OutOfRange(v));
    }
    let lo = pow2(e);
    if a == lo {
        return Ok(v);
    }
    let p_up = (a - lo) / lo;
    let r = if rng.random::<f64>() < p_up { 2.0 * lo } else { lo };
    Ok(r.copysign(v))
}

/// `⌊log₂ a⌋` for a normal positive double.
pub(crate) fn binary_exponent(a: f64) -> i32 {
    ((a.to_bits() >> 52) & 0x7ff) as i32 - 1023
}
