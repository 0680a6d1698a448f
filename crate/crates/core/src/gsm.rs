//! Generalized spatial modulation link model.
//!
//! A frame carries `K` data symbols on `K` of the `N_t` transmit antennas; the
//! activation pattern (AP) chosen from a codebook of `Q` patterns carries
//! `log2 Q` extra bits. The receiver sees `y = H·A·s + n` over i.i.d. Rayleigh
//! fading and the classical detector scans all `L^K·Q` candidates.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Modulation alphabet with the 5G NR bit-to-symbol mappings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constellation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl Constellation {
    /// Constellation size `L`.
    pub fn size(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }

    pub fn from_size(l: usize) -> Result<Self> {
        match l {
            2 => Ok(Constellation::Bpsk),
            4 => Ok(Constellation::Qpsk),
            16 => Ok(Constellation::Qam16),
            _ => Err(Error::Config(format!("unsupported constellation size {l}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constellation::Bpsk => "bpsk",
            Constellation::Qpsk => "qpsk",
            Constellation::Qam16 => "qam16",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" | "2" => Ok(Constellation::Bpsk),
            "qpsk" | "4" => Ok(Constellation::Qpsk),
            "qam16" | "16qam" | "16-qam" | "16" => Ok(Constellation::Qam16),
            other => Err(Error::Config(format!("unknown constellation {other:?}"))),
        }
    }

    /// All points indexed by their bit pattern read MSB-first (`b0` is the MSB).
    pub fn points(self) -> Vec<Complex64> {
        let bps = self.bits_per_symbol();
        (0..self.size())
            .map(|v| map_symbol(&index_to_bits(v, bps), self).expect("width matches"))
            .collect()
    }
}

/// Maps `b = (b0, b1, …)` to a unit-average-energy symbol.
pub fn map_symbol(bits: &[u8], constellation: Constellation) -> Result<Complex64> {
    let bps = constellation.bits_per_symbol();
    if bits.len() != bps {
        return Err(Error::BitCount {
            expected: bps,
            got: bits.len(),
        });
    }
    let pm = |b: u8| 1.0 - 2.0 * f64::from(b);
    Ok(match constellation {
        Constellation::Bpsk => {
            let v = pm(bits[0]) * std::f64::consts::FRAC_1_SQRT_2;
            Complex64::new(v, v)
        }
        Constellation::Qpsk => {
            Complex64::new(pm(bits[0]), pm(bits[1])) * std::f64::consts::FRAC_1_SQRT_2
        }
        Constellation::Qam16 => {
            let re = pm(bits[0]) * (2.0 - pm(bits[2]));
            let im = pm(bits[1]) * (2.0 - pm(bits[3]));
            Complex64::new(re, im) / 10f64.sqrt()
        }
    })
}

/// Inverse of [`map_symbol`]; the point must match a constellation point to 1e-9.
pub fn demap_symbol(point: Complex64, constellation: Constellation) -> Result<Vec<u8>> {
    let bps = constellation.bits_per_symbol();
    constellation
        .points()
        .iter()
        .position(|p| (p - point).norm() < 1e-9)
        .map(|v| index_to_bits(v, bps))
        .ok_or_else(|| Error::NotAConstellationPoint(format!("{point}")))
}

/// MSB-first bits of `value` in a `width`-bit field.
pub fn index_to_bits(value: usize, width: usize) -> Vec<u8> {
    (0..width)
        .map(|i| ((value >> (width - 1 - i)) & 1) as u8)
        .collect()
}

/// Inverse of [`index_to_bits`].
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter()
        .fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
}

/// Binomial coefficient `C(n, k)`; exact up to the u128 range.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsmConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub k_active: usize,
    pub q_aps: usize,
    pub constellation: Constellation,
    /// SNR ρ in dB; `f64::INFINITY` means a noiseless link.
    pub snr_db: f64,
}

impl GsmConfig {
    /// The evaluation setup: 4×4 MIMO, three active antennas, four APs, QPSK, 0 dB.
    pub fn paper() -> Self {
        GsmConfig {
            n_tx: 4,
            n_rx: 4,
            k_active: 3,
            q_aps: 4,
            constellation: Constellation::Qpsk,
            snr_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 {
            return Err(Error::Config("n_rx must be at least 1".into()));
        }
        if self.k_active == 0 || self.k_active > self.n_tx {
            return Err(Error::Config(format!(
                "k_active must lie in 1..={}, got {}",
                self.n_tx, self.k_active
            )));
        }
        let max_q = max_codebook_size(self.n_tx, self.k_active);
        if !self.q_aps.is_power_of_two() || self.q_aps < 2 || self.q_aps as u128 > max_q {
            return Err(Error::Config(format!(
                "q_aps must be a power of two in 2..={max_q}, got {}",
                self.q_aps
            )));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("snr_db is NaN".into()));
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.constellation.bits_per_symbol()
    }

    pub fn ap_bits(&self) -> usize {
        self.q_aps.trailing_zeros() as usize
    }

    /// σ_n² under unit per-symbol transmit power: `1/ρ`.
    pub fn noise_var(&self) -> f64 {
        1.0 / 10f64.powf(self.snr_db / 10.0)
    }

    /// Number of classical candidates `L^K·Q`.
    pub fn n_candidates(&self) -> usize {
        self.constellation.size().pow(self.k_active as u32) * self.q_aps
    }
}

/// `2^⌊log2 C(N_t, K)⌋`, the largest legal codebook size.
pub fn max_codebook_size(n_tx: usize, k: usize) -> u128 {
    let c = binomial(n_tx as u64, k as u64);
    if c == 0 {
        0
    } else {
        1u128 << (127 - c.leading_zeros())
    }
}

/// How the codebook is generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodebookRule {
    /// Pattern `q` activates antennas `q, q+1, …, q+K−1` (mod N_t) in that column order.
    Cyclic,
    /// First `Q` K-combinations in lexicographic order.
    Lex,
    /// Explicit rows of antenna indices in column order.
    Explicit(Vec<Vec<usize>>),
}

/// Ordered activation patterns; row `q` is selected by AP bits encoding `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApCodebook {
    n_tx: usize,
    patterns: Vec<Vec<usize>>,
}

impl ApCodebook {
    pub fn build(n_tx: usize, k_active: usize, q_aps: usize, rule: &CodebookRule) -> Result<Self> {
        if k_active == 0 || k_active > n_tx {
            return Err(Error::Config(format!(
                "k_active must lie in 1..={n_tx}, got {k_active}"
            )));
        }
        let max_q = max_codebook_size(n_tx, k_active);
        if !q_aps.is_power_of_two() || q_aps < 2 || q_aps as u128 > max_q {
            return Err(Error::Config(format!(
                "q_aps must be a power of two in 2..={max_q}, got {q_aps}"
            )));
        }
        let patterns = match rule {
            CodebookRule::Cyclic => (0..q_aps)
                .map(|q| (0..k_active).map(|c| (q + c) % n_tx).collect())
                .collect(),
            CodebookRule::Lex => lex_combinations(n_tx, k_active)
                .into_iter()
                .take(q_aps)
                .collect(),
            CodebookRule::Explicit(rows) => {
                if rows.len() != q_aps {
                    return Err(Error::InvalidTable(format!(
                        "expected {q_aps} patterns, got {}",
                        rows.len()
                    )));
                }
                rows.clone()
            }
        };
        Self::from_patterns(n_tx, k_active, patterns)
    }

    /// Validates column-sum-1 membership and distinct active sets.
    pub fn from_patterns(n_tx: usize, k_active: usize, patterns: Vec<Vec<usize>>) -> Result<Self> {
        if patterns.len() < 2 || !patterns.len().is_power_of_two() {
            return Err(Error::InvalidTable(format!(
                "pattern count {} is not a power of two ≥ 2",
                patterns.len()
            )));
        }
        let mut seen: Vec<Vec<usize>> = Vec::with_capacity(patterns.len());
        for (q, p) in patterns.iter().enumerate() {
            if p.len() != k_active {
                return Err(Error::InvalidTable(format!(
                    "pattern {q} has {} antennas, expected {k_active}",
                    p.len()
                )));
            }
            if let Some(&bad) = p.iter().find(|&&i| i >= n_tx) {
                return Err(Error::InvalidTable(format!(
                    "pattern {q} uses antenna {bad} ≥ {n_tx}"
                )));
            }
            let mut set = p.clone();
            set.sort_unstable();
            set.dedup();
            if set.len() != p.len() {
                return Err(Error::InvalidTable(format!(
                    "pattern {q} repeats an antenna"
                )));
            }
            if seen.contains(&set) {
                return Err(Error::InvalidTable(format!(
                    "pattern {q} duplicates an earlier active set"
                )));
            }
            seen.push(set);
        }
        Ok(ApCodebook { n_tx, patterns })
    }

    /// Parses one pattern per line in codebook order: comma-separated antenna
    /// indices in column order, or a [`table_text`](Self::table_text) row, whose
    /// parenthesized list is used. `#` starts a comment.
    pub fn from_table_text(text: &str, n_tx: usize, k_active: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let mut line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((_, rest)) = line.split_once('(') {
                line = rest.split_once(')').map_or(rest, |(inner, _)| inner);
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no + 1,
                        msg: format!("bad antenna index {:?}", f.trim()),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let q = rows.len();
        let max_q = max_codebook_size(n_tx, k_active);
        if q as u128 > max_q {
            return Err(Error::InvalidTable(format!(
                "{q} patterns exceeds the maximum {max_q}"
            )));
        }
        Self::from_patterns(n_tx, k_active, rows)
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn k_active(&self) -> usize {
        self.patterns[0].len()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn bit_width(&self) -> usize {
        self.patterns.len().trailing_zeros() as usize
    }

    /// Antenna indices of pattern `q`, in column order.
    pub fn pattern(&self, q: usize) -> &[usize] {
        &self.patterns[q]
    }

    pub fn patterns(&self) -> &[Vec<usize>] {
        &self.patterns
    }

    /// The `N_t × K` 0/1 matrix of pattern `q`.
    pub fn matrix(&self, q: usize) -> DMatrix<u8> {
        let p = &self.patterns[q];
        DMatrix::from_fn(self.n_tx, p.len(), |i, k| u8::from(p[k] == i))
    }

    /// Pattern index selected by an MSB-first AP bit sequence.
    pub fn index_of_bits(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bit_width() {
            return Err(Error::BitCount {
                expected: self.bit_width(),
                got: bits.len(),
            });
        }
        Ok(bits_to_index(bits))
    }

    pub fn bits_of(&self, q: usize) -> Vec<u8> {
        index_to_bits(q, self.bit_width())
    }

    /// Pattern whose active set (ignoring column order) equals `active`.
    pub fn find_active_set(&self, active: &[usize]) -> Option<usize> {
        let mut want = active.to_vec();
        want.sort_unstable();
        self.patterns.iter().position(|p| {
            let mut s = p.clone();
            s.sort_unstable();
            s == want
        })
    }

    /// Text rendering: `bits (i, j, k) [row; row; …]` per pattern.
    pub fn table_text(&self) -> String {
        let mut out = String::new();
        for q in 0..self.len() {
            let bits: String = self
                .bits_of(q)
                .iter()
                .map(|b| char::from(b'0' + b))
                .collect();
            let idx: Vec<String> = self.patterns[q].iter().map(|i| i.to_string()).collect();
            let m = self.matrix(q);
            let rows: Vec<String> = (0..m.nrows())
                .map(|r| {
                    (0..m.ncols())
                        .map(|c| m[(r, c)].to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            let _ = writeln!(out, "{bits} ({}) [{}]", idx.join(", "), rows.join("; "));
        }
        out
    }
}

fn lex_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// All K-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    lex_combinations(n, k)
}

/// One transmitted GSM frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitFrame {
    /// `K·log2 L` bits, symbol 0 first, each symbol MSB-first.
    pub bits_symbols: Vec<u8>,
    /// `log2 Q` bits selecting the AP, MSB-first.
    pub bits_ap: Vec<u8>,
    pub symbols: Vec<Complex64>,
    pub ap_index: usize,
}

impl TransmitFrame {
    pub fn from_bits(
        bits_symbols: Vec<u8>,
        bits_ap: Vec<u8>,
        cfg: &GsmConfig,
        codebook: &ApCodebook,
    ) -> Result<Self> {
        let bps = cfg.bits_per_symbol();
        if bits_symbols.len() != cfg.k_active * bps {
            return Err(Error::BitCount {
                expected: cfg.k_active * bps,
                got: bits_symbols.len(),
            });
        }
        let ap_index = codebook.index_of_bits(&bits_ap)?;
        let symbols = bits_symbols
            .chunks(bps)
            .map(|b| map_symbol(b, cfg.constellation))
            .collect::<Result<Vec<_>>>()?;
        Ok(TransmitFrame {
            bits_symbols,
            bits_ap,
            symbols,
            ap_index,
        })
    }

    /// Codeword `c = A·s` of length `N_t`.
    pub fn codeword(&self, codebook: &ApCodebook) -> DVector<Complex64> {
        codeword(codebook, self.ap_index, &self.symbols)
    }
}

/// `c = A_q·s`: symbol `k` lands on antenna `pattern(q)[k]`.
pub fn codeword(
    codebook: &ApCodebook,
    ap_index: usize,
    symbols: &[Complex64],
) -> DVector<Complex64> {
    let mut c = DVector::from_element(codebook.n_tx(), Complex64::new(0.0, 0.0));
    for (k, &ant) in codebook.pattern(ap_index).iter().enumerate() {
        c[ant] = symbols[k];
    }
    c
}

/// One channel use: fading matrix, noise level, received vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `N_r × N_t`, entries i.i.d. CN(0, 1).
    pub h: DMatrix<Complex64>,
    pub noise_var: f64,
    /// `y = H·A·s + n`.
    pub y: DVector<Complex64>,
}

impl ChannelRealization {
    /// `‖y − H·c‖²` for an arbitrary codeword.
    pub fn metric(&self, c: &DVector<Complex64>) -> f64 {
        (&self.y - &self.h * c).norm_squared()
    }
}

fn complex_normal<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    if var == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let d = Normal::new(0.0, (var / 2.0).sqrt()).expect("finite variance");
    Complex64::new(d.sample(rng), d.sample(rng))
}

/// Draws uniform bits, an i.i.d. Rayleigh channel and AWGN, deterministically from `seed`.
pub fn synthesize(
    cfg: &GsmConfig,
    codebook: &ApCodebook,
    seed: u64,
) -> Result<(TransmitFrame, ChannelRealization)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits_symbols: Vec<u8> = (0..cfg.k_active * cfg.bits_per_symbol())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let bits_ap: Vec<u8> = (0..cfg.ap_bits())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let frame = TransmitFrame::from_bits(bits_symbols, bits_ap, cfg, codebook)?;

    let h = DMatrix::from_fn(cfg.n_rx, cfg.n_tx, |_, _| complex_normal(&mut rng, 1.0));
    let noise_var = cfg.noise_var();
    let n = DVector::from_fn(cfg.n_rx, |_, _| complex_normal(&mut rng, noise_var));
    let y = &h * frame.codeword(codebook) + n;
    Ok((frame, ChannelRealization { h, noise_var, y }))
}

/// Result of the exhaustive classical detector.
#[derive(Debug, Clone, PartialEq)]
pub struct MldEstimate {
    pub symbols: Vec<Complex64>,
    pub bits_symbols: Vec<u8>,
    pub ap_index: usize,
    pub metric: f64,
    pub n_evaluations: usize,
}

/// Scans all `L^K·Q` candidates; ties go to the smallest `(ap_index, symbol bits)`.
pub fn classical_mld(
    chan: &ChannelRealization,
    cfg: &GsmConfig,
    codebook: &ApCodebook,
) -> MldEstimate {
    let points = cfg.constellation.points();
    let l = points.len();
    let k = cfg.k_active;
    let bps = cfg.bits_per_symbol();
    let per_ap = l.pow(k as u32);

    let mut best: Option<(usize, usize, f64)> = None;
    let mut evaluations = 0;
    let mut symbols = vec![Complex64::new(0.0, 0.0); k];
    for q in 0..codebook.len() {
        for v in 0..per_ap {
            for (j, s) in symbols.iter_mut().enumerate() {
                *s = points[(v >> (bps * (k - 1 - j))) & (l - 1)];
            }
            let metric = chan.metric(&codeword(codebook, q, &symbols));
            evaluations += 1;
            if best.is_none_or(|(_, _, m)| metric < m) {
                best = Some((q, v, metric));
            }
        }
    }
    let (ap_index, v, metric) = best.expect("codebook is non-empty");
    let bits_symbols = index_to_bits(v, k * bps);
    let symbols = bits_symbols
        .chunks(bps)
        .map(|b| map_symbol(b, cfg.constellation).expect("width matches"))
        .collect();
    MldEstimate {
        symbols,
        bits_symbols,
        ap_index,
        metric,
        n_evaluations: evaluations,
    }
}

/// Recovers `(bits_symbols, bits_ap)` from estimated symbols and an AP given by its antenna list.
pub fn demap(
    symbols: &[Complex64],
    active: &[usize],
    codebook: &ApCodebook,
    cfg: &GsmConfig,
) -> Result<(Vec<u8>, Vec<u8>)> {
    let q = codebook
        .patterns()
        .iter()
        .position(|p| p.as_slice() == active)
        .ok_or_else(|| Error::PatternNotInCodebook(active.to_vec()))?;
    let mut bits = Vec::with_capacity(symbols.len() * cfg.bits_per_symbol());
    for &s in symbols {
        bits.extend(demap_symbol(s, cfg.constellation)?);
    }
    Ok((bits, codebook.bits_of(q)))
}
