//! Compiles one GSM detection instance into a binary polynomial objective.
//!
//! Variables are laid out as `N_t·log2 L` symbol bits (antenna-major, bit-minor)
//! followed by `N_t` activation bits. Every antenna gets a candidate symbol;
//! the activation bit decides whether it is transmitted. The objective is
//!
//! ```text
//! E(x) = Σ_r |y_r − Σ_i H_ri·s(x_s^(i))·x_A^(i)|²
//!      + λ1·(Σ_i x_A^(i) − K)²
//!      + λ2·Σ_{P excluded} Π_{i∈P} x_A^(i)
//! ```
//!
//! where the excluded sets are the K-subsets of antennas that no codebook
//! pattern activates.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gsm::{self, ApCodebook, ChannelRealization, Constellation, GsmConfig};
use crate::polynomial::{BinaryPolynomial, ComplexPolynomial, IntegerPolynomial};

/// Default weight of the cardinality penalty.
pub const DEFAULT_LAMBDA1: f64 = 15.0;
/// Default quantization precision for the integer objective.
pub const DEFAULT_PRECISION_BITS: u32 = 8;

/// Largest imaginary coefficient left by the norm expansion that is dropped as rounding noise.
pub const MAX_IMAG_RESIDUE: f64 = 1e-12;

/// Mapping between (antenna, bit) pairs and polynomial variable indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    n_tx: usize,
    bits_per_symbol: usize,
}

impl VariableLayout {
    pub fn new(n_tx: usize, constellation: Constellation) -> Self {
        VariableLayout {
            n_tx,
            bits_per_symbol: constellation.bits_per_symbol(),
        }
    }

    /// Total variable count `N_t·log2 L + N_t`.
    pub fn n_vars(&self) -> usize {
        self.n_tx * self.bits_per_symbol + self.n_tx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn symbol_var(&self, antenna: usize, bit: usize) -> usize {
        debug_assert!(antenna < self.n_tx && bit < self.bits_per_symbol);
        antenna * self.bits_per_symbol + bit
    }

    pub fn activation_var(&self, antenna: usize) -> usize {
        debug_assert!(antenna < self.n_tx);
        self.n_tx * self.bits_per_symbol + antenna
    }

    /// Human-readable layout, one variable per line.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_tx {
            for b in 0..self.bits_per_symbol {
                out.push_str(&format!(
                    "x{} = symbol bit {b} of antenna {i}\n",
                    self.symbol_var(i, b)
                ));
            }
        }
        for i in 0..self.n_tx {
            out.push_str(&format!(
                "x{} = activation of antenna {i}\n",
                self.activation_var(i)
            ));
        }
        out
    }
}

/// Symbol `s(b)` of antenna `antenna` as a polynomial in its symbol bits.
fn symbol_polynomial(
    layout: &VariableLayout,
    antenna: usize,
    constellation: Constellation,
) -> ComplexPolynomial {
    let n = layout.n_vars();
    // 1 − 2·b
    let pm = |bit: usize| {
        ComplexPolynomial::from_terms(
            n,
            [
                (vec![], Complex64::new(1.0, 0.0)),
                (
                    vec![layout.symbol_var(antenna, bit)],
                    Complex64::new(-2.0, 0.0),
                ),
            ],
        )
        .expect("layout indices are in range")
    };
    let j = Complex64::new(0.0, 1.0);
    let two = ComplexPolynomial::constant(n, Complex64::new(2.0, 0.0));
    match constellation {
        Constellation::Bpsk => {
            pm(0).scale(Complex64::new(1.0, 1.0) * std::f64::consts::FRAC_1_SQRT_2)
        }
        Constellation::Qpsk => pm(0)
            .add(&pm(1).scale(j))
            .expect("same layout")
            .scale(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
        Constellation::Qam16 => {
            let re = pm(0)
                .mul(&two.sub(&pm(2)).expect("same layout"))
                .expect("same layout");
            let im = pm(1)
                .mul(&two.sub(&pm(3)).expect("same layout"))
                .expect("same layout");
            re.add(&im.scale(j))
                .expect("same layout")
                .scale(Complex64::new(1.0 / 10f64.sqrt(), 0.0))
        }
    }
}

/// Entry `i` is `s(x_s^(i))·x_A^(i)`, the codeword as a vector of polynomials.
pub fn codeword_polynomials(
    layout: &VariableLayout,
    constellation: Constellation,
) -> Vec<ComplexPolynomial> {
    let n = layout.n_vars();
    (0..layout.n_tx())
        .map(|i| {
            let a = ComplexPolynomial::var(n, layout.activation_var(i)).expect("in range");
            symbol_polynomial(layout, i, constellation)
                .mul(&a)
                .expect("same layout")
        })
        .collect()
}

/// Penalty weights and quantization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderParams {
    pub lambda1: f64,
    /// Weight of the excluded-pattern penalty; `None` means "same as `lambda1`".
    pub lambda2: Option<f64>,
    pub precision_bits: u32,
}

impl Default for EncoderParams {
    fn default() -> Self {
        EncoderParams {
            lambda1: DEFAULT_LAMBDA1,
            lambda2: None,
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }
}

/// One detection instance compiled to a polynomial.
#[derive(Debug, Clone)]
pub struct MldProblem {
    pub objective: BinaryPolynomial,
    pub quantized: IntegerPolynomial,
    pub layout: VariableLayout,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Antenna sets punished by the third penalty term.
    pub excluded_sets: Vec<Vec<usize>>,
    /// Largest imaginary coefficient discarded after expanding the norm.
    pub max_imag_residue: f64,
    pub cfg: GsmConfig,
    pub codebook: ApCodebook,
    pub chan: ChannelRealization,
}

/// Decoded view of an assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAssignment {
    /// Codebook row whose active set matches, if any.
    pub ap_index: Option<usize>,
    /// Symbols in codebook column order (empty when invalid).
    pub symbols: Vec<Complex64>,
    pub bits_symbols: Vec<u8>,
    pub valid: bool,
}

/// The norm part `Σ_r |y_r − Σ_i H_ri c_i(x)|²` and the largest dropped imaginary coefficient.
pub fn norm_polynomial(
    chan: &ChannelRealization,
    layout: &VariableLayout,
    constellation: Constellation,
) -> (BinaryPolynomial, f64) {
    let n = layout.n_vars();
    let c = codeword_polynomials(layout, constellation);
    let mut total = ComplexPolynomial::zero(n);
    for r in 0..chan.h.nrows() {
        let mut residual = ComplexPolynomial::constant(n, chan.y[r]);
        for (i, ci) in c.iter().enumerate() {
            residual = residual
                .sub(&ci.scale(chan.h[(r, i)]))
                .expect("same layout");
        }
        let sq = residual.mul(&residual.conj()).expect("same layout");
        total = total.add(&sq).expect("same layout");
    }
    let (re, im) = total.re_im();
    let residue = im.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    (re, residue)
}

/// Compiles the detection objective with both penalty terms.
pub fn build_objective(
    chan: &ChannelRealization,
    cfg: &GsmConfig,
    codebook: &ApCodebook,
    params: &EncoderParams,
) -> Result<MldProblem> {
    cfg.validate()?;
    if params.lambda1.is_nan() || params.lambda1 <= 0.0 {
        return Err(Error::Config(format!(
            "lambda1 must be positive, got {}",
            params.lambda1
        )));
    }
    let lambda2 = params.lambda2.unwrap_or(params.lambda1);
    if lambda2.is_nan() || lambda2 < 0.0 {
        return Err(Error::Config(format!(
            "lambda2 must be non-negative, got {lambda2}"
        )));
    }
    if codebook.n_tx() != cfg.n_tx
        || codebook.k_active() != cfg.k_active
        || codebook.len() != cfg.q_aps
    {
        return Err(Error::Config(
            "codebook does not match the link configuration".into(),
        ));
    }
    let layout = VariableLayout::new(cfg.n_tx, cfg.constellation);
    let n = layout.n_vars();

    let (norm, max_imag_residue) = norm_polynomial(chan, &layout, cfg.constellation);
    if max_imag_residue > MAX_IMAG_RESIDUE {
        return Err(Error::ImaginaryResidue(max_imag_residue));
    }

    // λ1·(Σ x_A − K)²
    let mut count = BinaryPolynomial::constant(n, -(cfg.k_active as f64));
    for i in 0..cfg.n_tx {
        count = count.add(&BinaryPolynomial::var(n, layout.activation_var(i))?)?;
    }
    let cardinality = count.mul(&count)?.scale(params.lambda1);

    let excluded_sets: Vec<Vec<usize>> = gsm::k_subsets(cfg.n_tx, cfg.k_active)
        .into_iter()
        .filter(|s| codebook.find_active_set(s).is_none())
        .collect();
    let exclusion = BinaryPolynomial::from_terms(
        n,
        excluded_sets.iter().map(|s| {
            (
                s.iter()
                    .map(|&i| layout.activation_var(i))
                    .collect::<Vec<_>>(),
                lambda2,
            )
        }),
    )?;

    let objective = norm.add(&cardinality)?.add(&exclusion)?;
    let quantized = objective.quantize(params.precision_bits)?;
    Ok(MldProblem {
        objective,
        quantized,
        layout,
        lambda1: params.lambda1,
        lambda2,
        excluded_sets,
        max_imag_residue,
        cfg: cfg.clone(),
        codebook: codebook.clone(),
        chan: chan.clone(),
    })
}

impl MldProblem {
    pub fn n_vars(&self) -> usize {
        self.layout.n_vars()
    }

    /// Bit assignment of a legal `(s, A)`; inactive antennas get all-zero symbol bits.
    pub fn encode(&self, bits_symbols: &[u8], ap_index: usize) -> Result<Vec<u8>> {
        let bps = self.layout.bits_per_symbol();
        let k = self.cfg.k_active;
        if bits_symbols.len() != k * bps {
            return Err(Error::BitCount {
                expected: k * bps,
                got: bits_symbols.len(),
            });
        }
        let mut x = vec![0u8; self.n_vars()];
        for (col, &ant) in self.codebook.pattern(ap_index).iter().enumerate() {
            x[self.layout.activation_var(ant)] = 1;
            for b in 0..bps {
                x[self.layout.symbol_var(ant, b)] = bits_symbols[col * bps + b];
            }
        }
        Ok(x)
    }

    /// Reads an assignment back as (symbols, AP); invalid unless exactly K antennas
    /// are active and their set is a codebook pattern.
    pub fn decode_assignment(&self, x: &[u8]) -> Result<DecodedAssignment> {
        if x.len() != self.n_vars() {
            return Err(Error::LengthMismatch {
                expected: self.n_vars(),
                got: x.len(),
            });
        }
        let active: Vec<usize> = (0..self.cfg.n_tx)
            .filter(|&i| x[self.layout.activation_var(i)] != 0)
            .collect();
        let ap_index = if active.len() == self.cfg.k_active {
            self.codebook.find_active_set(&active)
        } else {
            None
        };
        let Some(q) = ap_index else {
            return Ok(DecodedAssignment {
                ap_index: None,
                symbols: Vec::new(),
                bits_symbols: Vec::new(),
                valid: false,
            });
        };
        let bps = self.layout.bits_per_symbol();
        let mut bits_symbols = Vec::with_capacity(self.cfg.k_active * bps);
        let mut symbols = Vec::with_capacity(self.cfg.k_active);
        for &ant in self.codebook.pattern(q) {
            let bits: Vec<u8> = (0..bps)
                .map(|b| x[self.layout.symbol_var(ant, b)])
                .collect();
            symbols.push(gsm::map_symbol(&bits, self.cfg.constellation)?);
            bits_symbols.extend(bits);
        }
        Ok(DecodedAssignment {
            ap_index: Some(q),
            symbols,
            bits_symbols,
            valid: true,
        })
    }

    /// Same as [`decode_assignment`](Self::decode_assignment) for a packed index.
    pub fn decode_index(&self, x: u64) -> DecodedAssignment {
        let bits = index_bits(x, self.n_vars());
        self.decode_assignment(&bits).expect("length matches")
    }

    /// Exact objective at a packed assignment.
    pub fn value(&self, x: u64) -> f64 {
        self.objective.eval_index(x)
    }

    /// Quantized objective at a packed assignment.
    pub fn value_int(&self, x: u64) -> i64 {
        self.quantized.eval_index(x)
    }

    /// Debug dump: layout description followed by the polynomial text form.
    pub fn dump(&self) -> String {
        format!(
            "# variables {}\n{}# objective\n{}",
            self.n_vars(),
            self.layout
                .describe()
                .lines()
                .map(|l| format!("# {l}\n"))
                .collect::<String>(),
            self.objective.to_text()
        )
    }
}

/// Unpacks `x` into `n` bits, variable 0 first.
pub fn index_bits(x: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((x >> i) & 1) as u8).collect()
}

/// Packs a bit slice, variable 0 as the least significant bit.
pub fn bits_index(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (u64::from(b & 1) << i))
}
