//! Gate-level reference simulator for the GAS circuit on `n + m` qubits.
//!
//! Qubit `q` is bit `q` of the basis-state index. Qubits `0..n` hold the
//! variables; qubits `n..n+m` hold the value register with qubit `n + j`
//! carrying weight `2^j`, so the sign (most significant) qubit is `n + m − 1`.
//! Multi-controlled phases and the diffusion reflection are applied directly
//! as diagonal operations rather than decomposed into elementary gates.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gas::{Sampler, TrialRng};
use crate::polynomial::{BinaryPolynomial, IntegerPolynomial};
use crate::sim::structured::sample_index;

/// Refuse states larger than this many qubits.
pub const MAX_QUBITS: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    /// `R(θ) = diag(1, e^{jθ})`.
    Phase(usize, f64),
    /// `R(θ)` on `target`, active only when every control is 1.
    ControlledPhase {
        controls: Vec<usize>,
        target: usize,
        theta: f64,
    },
    Swap(usize, usize),
    PauliZ(usize),
    /// `2|0⟩⟨0| − I` on the full register.
    Diffusion,
}

impl Gate {
    fn inverse(&self) -> Gate {
        match self {
            Gate::Phase(q, t) => Gate::Phase(*q, -t),
            Gate::ControlledPhase {
                controls,
                target,
                theta,
            } => Gate::ControlledPhase {
                controls: controls.clone(),
                target: *target,
                theta: -theta,
            },
            g => g.clone(),
        }
    }

    fn max_qubit(&self) -> Option<usize> {
        match self {
            Gate::Hadamard(q) | Gate::Phase(q, _) | Gate::PauliZ(q) => Some(*q),
            Gate::ControlledPhase {
                controls, target, ..
            } => controls.iter().copied().chain([*target]).max(),
            Gate::Swap(a, b) => Some(*a.max(b)),
            Gate::Diffusion => None,
        }
    }
}

/// Ordered gate list on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSequence {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(n_qubits: usize) -> Self {
        GateSequence {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        if let Some(q) = g.max_qubit() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn extend(&mut self, other: &GateSequence) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: other.n_qubits,
                n_qubits: self.n_qubits,
            });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// Adjoint: reversed order, phases negated.
    pub fn inverse(&self) -> GateSequence {
        GateSequence {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }
}

/// Dense amplitude vector over `2^n_qubits` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::Config(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits,
                limit: MAX_QUBITS,
            });
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, seq: &GateSequence) -> Result<()> {
        if seq.n_qubits != self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: seq.n_qubits,
                n_qubits: self.n_qubits,
            });
        }
        for g in &seq.gates {
            self.apply_gate(g);
        }
        Ok(())
    }

    fn apply_gate(&mut self, g: &Gate) {
        match g {
            Gate::Hadamard(q) => {
                let bit = 1usize << q;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let (a, b) = (self.amps[i], self.amps[i | bit]);
                        self.amps[i] = (a + b) * h;
                        self.amps[i | bit] = (a - b) * h;
                    }
                }
            }
            Gate::Phase(q, theta) => self.phase_on_mask(1 << q, *theta),
            Gate::ControlledPhase {
                controls,
                target,
                theta,
            } => {
                let mask = controls.iter().fold(1usize << target, |m, &c| m | (1 << c));
                self.phase_on_mask(mask, *theta);
            }
            Gate::Swap(a, b) => {
                let (ba, bb) = (1usize << a, 1usize << b);
                for i in 0..self.amps.len() {
                    if i & ba != 0 && i & bb == 0 {
                        self.amps.swap(i, (i & !ba) | bb);
                    }
                }
            }
            Gate::PauliZ(q) => {
                let bit = 1usize << q;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            Gate::Diffusion => {
                for a in self.amps.iter_mut().skip(1) {
                    *a = -*a;
                }
            }
        }
    }

    fn phase_on_mask(&mut self, mask: usize, theta: f64) {
        let ph = Complex64::from_polar(1.0, theta);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *a *= ph;
            }
        }
    }

    /// Marginal distribution of the low `n_vars` qubits.
    pub fn x_marginal(&self, n_vars: usize) -> Vec<f64> {
        let mask = (1usize << n_vars) - 1;
        let mut out = vec![0.0; 1 << n_vars];
        for (i, a) in self.amps.iter().enumerate() {
            out[i & mask] += a.norm_sqr();
        }
        out
    }
}

/// Two's-complement reading of the value register in basis index `index`.
pub fn register_value(index: usize, n_vars: usize, m: u32) -> i64 {
    let raw = ((index >> n_vars) & ((1usize << m) - 1)) as i64;
    if raw >= 1 << (m - 1) {
        raw - (1 << m)
    } else {
        raw
    }
}

/// Inverse QFT on `m` qubits starting at `offset`, qubit `offset + j` of weight `2^j`.
pub fn iqft(n_qubits: usize, offset: usize, m: usize) -> Result<GateSequence> {
    Ok(qft(n_qubits, offset, m)?.inverse())
}

/// Forward QFT, `|v⟩ → 2^{-m/2} Σ_k e^{2πi·vk/2^m} |k⟩`, including the reversal swaps.
pub fn qft(n_qubits: usize, offset: usize, m: usize) -> Result<GateSequence> {
    let mut seq = GateSequence::new(n_qubits);
    for t in (0..m).rev() {
        seq.push(Gate::Hadamard(offset + t))?;
        for c in (0..t).rev() {
            seq.push(Gate::ControlledPhase {
                controls: vec![offset + c],
                target: offset + t,
                theta: 2.0 * PI / (1u64 << (t - c + 1)) as f64,
            })?;
        }
    }
    for j in 0..m / 2 {
        seq.push(Gate::Swap(offset + j, offset + m - 1 - j))?;
    }
    Ok(seq)
}

fn state_preparation<'a, I>(n_vars: usize, m: u32, terms: I) -> Result<GateSequence>
where
    I: IntoIterator<Item = (&'a [usize], f64)>,
{
    let m_us = m as usize;
    let n_qubits = n_vars + m_us;
    if m == 0 {
        return Err(Error::Config("register width m must be at least 1".into()));
    }
    let mut seq = GateSequence::new(n_qubits);
    for q in 0..n_qubits {
        seq.push(Gate::Hadamard(q))?;
    }
    let full_turn = 2f64.powi(m as i32);
    for (vars, a) in terms {
        if a == 0.0 {
            continue;
        }
        let theta = 2.0 * PI * a / full_turn;
        // U_G(θ): qubit of weight 2^j gets R(2^j θ)
        for j in 0..m_us {
            let angle = theta * (1u64 << j) as f64;
            let target = n_vars + j;
            if vars.is_empty() {
                seq.push(Gate::Phase(target, angle))?;
            } else {
                seq.push(Gate::ControlledPhase {
                    controls: vars.to_vec(),
                    target,
                    theta: angle,
                })?;
            }
        }
    }
    seq.extend(&iqft(n_qubits, n_vars, m_us)?)?;
    Ok(seq)
}

/// `A_y` for an integer objective: Hadamard wall, one `U_G` block per term
/// (the threshold folded into the constant), inverse QFT on the register.
pub fn build_a_y(p: &IntegerPolynomial, threshold: i64, m: u32) -> Result<GateSequence> {
    let n = p.n_vars();
    let constant = p.poly().constant_term() - threshold;
    let terms = p
        .poly()
        .terms()
        .filter(|(mono, _)| !mono.is_constant())
        .map(|(mono, &c)| (mono.vars(), c as f64))
        .chain(std::iter::once((&[][..], constant as f64)));
    state_preparation(n, m, terms)
}

/// Same construction with real coefficients; the register is then only
/// approximately a basis state.
pub fn encode_real_coefficients(
    p: &BinaryPolynomial,
    threshold: f64,
    m: u32,
) -> Result<GateSequence> {
    let n = p.n_vars();
    let constant = p.constant_term() - threshold;
    let terms = p
        .terms()
        .filter(|(mono, _)| !mono.is_constant())
        .map(|(mono, &c)| (mono.vars(), c))
        .chain(std::iter::once((&[][..], constant)));
    state_preparation(n, m, terms)
}

/// `G = A_y D A_y† O`, with `O` a Pauli-Z on the register's sign qubit.
pub fn grover_operator(a_y: &GateSequence, m: u32) -> Result<GateSequence> {
    let n_qubits = a_y.n_qubits();
    let mut g = GateSequence::new(n_qubits);
    g.push(Gate::PauliZ(n_qubits - 1))?;
    debug_assert!(m as usize <= n_qubits);
    g.extend(&a_y.inverse())?;
    g.push(Gate::Diffusion)?;
    g.extend(a_y)?;
    Ok(g)
}

/// `G^L A_y |0⟩` for an integer objective.
pub fn evolve(
    p: &IntegerPolynomial,
    threshold: i64,
    m: u32,
    rotations: usize,
) -> Result<StateVector> {
    let n_qubits = p.n_vars() + m as usize;
    let mut state = StateVector::zero(n_qubits)?;
    let a_y = build_a_y(p, threshold, m)?;
    state.apply(&a_y)?;
    if rotations > 0 {
        let g = grover_operator(&a_y, m)?;
        for _ in 0..rotations {
            state.apply(&g)?;
        }
    }
    Ok(state)
}

/// Oracle error rates of an approximate register encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignErrorRates {
    /// Mean over improving states of P(sign qubit reads 0).
    pub false_negative: f64,
    /// Mean over non-improving states of P(sign qubit reads 1).
    pub false_positive: f64,
    /// Mean over all states of P(sign qubit disagrees with `E(x) − y < 0`).
    pub misclassification: f64,
}

/// Sign-qubit misclassification after `A_y` with real coefficients.
pub fn sign_error_rates(p: &BinaryPolynomial, threshold: f64, m: u32) -> Result<SignErrorRates> {
    let n = p.n_vars();
    let mut state = StateVector::zero(n + m as usize)?;
    state.apply(&encode_real_coefficients(p, threshold, m)?)?;
    let sign_bit = 1usize << (n + m as usize - 1);
    let n_x = 1usize << n;
    // P(sign = 1 | x), conditioned on the uniform 1/2^n weight of each x
    let mut p_neg = vec![0.0; n_x];
    for (i, a) in state.amplitudes().iter().enumerate() {
        if i & sign_bit != 0 {
            p_neg[i & (n_x - 1)] += a.norm_sqr() * n_x as f64;
        }
    }
    let (mut fneg, mut n_neg, mut fpos, mut n_pos) = (0.0, 0usize, 0.0, 0usize);
    for (x, &pn) in p_neg.iter().enumerate() {
        if p.eval_index(x as u64) - threshold < 0.0 {
            fneg += 1.0 - pn;
            n_neg += 1;
        } else {
            fpos += pn;
            n_pos += 1;
        }
    }
    let mean = |s: f64, k: usize| if k == 0 { 0.0 } else { s / k as f64 };
    Ok(SignErrorRates {
        false_negative: mean(fneg, n_neg),
        false_positive: mean(fpos, n_pos),
        misclassification: (fneg + fpos) / n_x as f64,
    })
}

/// Writes `x,register,probability` for every basis state (n + m ≤ 16).
pub fn write_debug_csv<W: Write>(
    out: &mut W,
    state: &StateVector,
    n_vars: usize,
    m: u32,
) -> Result<()> {
    if state.n_qubits() > 16 {
        return Err(Error::TooManyQubits {
            n_qubits: state.n_qubits(),
            limit: 16,
        });
    }
    writeln!(out, "x,register,probability")?;
    let mask = (1usize << n_vars) - 1;
    for (i, a) in state.amplitudes().iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            i & mask,
            register_value(i, n_vars, m),
            a.norm_sqr()
        )?;
    }
    Ok(())
}

/// Gate-level back-end. Checks that the measured register equals `E(x) − y`.
#[derive(Debug, Clone)]
pub struct StateVectorSampler {
    objective: IntegerPolynomial,
    m: u32,
}

impl StateVectorSampler {
    pub fn new(objective: &IntegerPolynomial, m: u32) -> Result<Self> {
        let n_qubits = objective.n_vars() + m as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits,
                limit: MAX_QUBITS,
            });
        }
        Ok(StateVectorSampler {
            objective: objective.clone(),
            m,
        })
    }
}

impl Sampler for StateVectorSampler {
    fn n_vars(&self) -> usize {
        self.objective.n_vars()
    }

    fn measure(&mut self, threshold: i64, rotations: usize, rng: &mut TrialRng) -> Result<u64> {
        let n = self.objective.n_vars();
        let state = evolve(&self.objective, threshold, self.m, rotations)?;
        let idx = sample_index(state.amplitudes().iter().map(|a| a.norm_sqr()), rng);
        let x = (idx & ((1usize << n) - 1)) as u64;
        let got = register_value(idx, n, self.m);
        let expected = self.objective.eval_index(x) - threshold;
        if got != expected {
            return Err(Error::RegisterMismatch { expected, got });
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Polynomial;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn hadamard_twice_is_identity() {
        let mut s =
            StateVector::from_amplitudes(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)])
                .unwrap();
        let before = s.clone();
        let mut seq = GateSequence::new(1);
        seq.push(Gate::Hadamard(0)).unwrap();
        seq.push(Gate::Hadamard(0)).unwrap();
        s.apply(&seq).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn phase_leaves_zero_state_alone() {
        let mut s = StateVector::zero(1).unwrap();
        let mut seq = GateSequence::new(1);
        seq.push(Gate::Phase(0, 1.234)).unwrap();
        s.apply(&seq).unwrap();
        assert_eq!(s, StateVector::zero(1).unwrap());
    }

    #[test]
    fn out_of_range_qubit_is_rejected() {
        let mut seq = GateSequence::new(2);
        assert!(seq.push(Gate::Hadamard(2)).is_err());
        assert!(seq
            .push(Gate::ControlledPhase {
                controls: vec![5],
                target: 0,
                theta: 0.1
            })
            .is_err());
        let mut s = StateVector::zero(3).unwrap();
        assert!(s.apply(&GateSequence::new(2)).is_err());
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            StateVector::zero(27),
            Err(Error::TooManyQubits { .. })
        ));
    }

    #[test]
    fn unit_coefficient_block_angles() {
        let p = Polynomial::<i64>::from_terms(1, [(vec![0usize], 1i64)]).unwrap();
        let seq = build_a_y(&IntegerPolynomial::from_poly(p), 0, 3).unwrap();
        let angles: Vec<(usize, f64)> = seq
            .gates()
            .iter()
            .filter_map(|g| match g {
                Gate::ControlledPhase {
                    controls,
                    target,
                    theta,
                } if controls == &vec![0] && *target >= 1 => Some((*target, *theta)),
                _ => None,
            })
            .take(3)
            .collect();
        // θ = 2π/8 = π/4; weights 1, 2, 4 get θ, 2θ, 4θ
        assert_eq!(angles.len(), 3);
        assert!((angles[0].1 - PI / 4.0).abs() < 1e-15 && angles[0].0 == 1);
        assert!((angles[1].1 - PI / 2.0).abs() < 1e-15 && angles[1].0 == 2);
        assert!((angles[2].1 - PI).abs() < 1e-15 && angles[2].0 == 3);
    }

    #[test]
    fn three_term_objective_has_three_blocks() {
        let m = 4u32;
        let p =
            Polynomial::<i64>::from_terms(2, [(vec![0usize, 1], 3i64), (vec![0], -2), (vec![], 1)])
                .unwrap();
        let seq = build_a_y(&IntegerPolynomial::from_poly(p), 0, m).unwrap();
        let phases: Vec<&Gate> = seq
            .gates()
            .iter()
            .filter(|g| match g {
                Gate::Phase(q, _) => *q >= 2,
                Gate::ControlledPhase { controls, .. } => controls.iter().all(|&c| c < 2),
                _ => false,
            })
            .collect();
        let doubly = phases
            .iter()
            .filter(|g| matches!(g, Gate::ControlledPhase { controls, .. } if controls.len() == 2))
            .count();
        let singly = phases
            .iter()
            .filter(|g| matches!(g, Gate::ControlledPhase { controls, .. } if controls.len() == 1))
            .count();
        let free = phases
            .iter()
            .filter(|g| matches!(g, Gate::Phase(..)))
            .count();
        assert_eq!((doubly, singly, free), (4, 4, 4));
    }

    #[test]
    fn register_readout_is_twos_complement() {
        // −3 at m = 4 is register 13
        let n = 2;
        assert_eq!(register_value(13 << n, n, 4), -3);
        assert_eq!(register_value(7 << n, n, 4), 7);
        assert_eq!(register_value(8 << n, n, 4), -8);
    }

    #[test]
    fn a_y_encodes_value_deterministically() {
        let p = Polynomial::<i64>::from_terms(
            2,
            [
                (vec![0usize, 1], 3i64),
                (vec![0], -2),
                (vec![1], 1),
                (vec![], 1),
            ],
        )
        .unwrap();
        let p = IntegerPolynomial::from_poly(p);
        let (m, y) = (4u32, 2i64);
        let s = evolve(&p, y, m, 0).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            let x = (i & 3) as u64;
            let want = p.eval_index(x) - y;
            if register_value(i, 2, m) == want {
                assert!((a.norm_sqr() - 0.25).abs() < 1e-12);
            } else {
                assert!(a.norm_sqr() < 1e-20);
            }
        }
    }

    #[test]
    fn debug_csv_has_one_row_per_basis_state() {
        let p = IntegerPolynomial::from_poly(
            Polynomial::<i64>::from_terms(1, [(vec![0usize], 1i64)]).unwrap(),
        );
        let s = evolve(&p, 0, 2, 0).unwrap();
        let mut buf = Vec::new();
        write_debug_csv(&mut buf, &s, 1, 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
        assert!(text.contains("\n1,1,0.5"));
    }
}
