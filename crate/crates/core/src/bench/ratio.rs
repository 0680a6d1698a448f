//! Query-complexity ratio between the Grover search and the classical detector.
//!
//! `f = √(2^(N_t·log2 L + N_t))` counts Grover queries over the full binary
//! search space; `g = L^K·Q` counts classical candidates, with `Q = C(N_t, K)`
//! taken exactly (not rounded to a power of two).

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gsm::binomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub n_tx: usize,
    pub k: usize,
    pub l: usize,
    pub q: u128,
    pub f: f64,
    pub g: f64,
    pub ratio: f64,
}

/// `f/g` for one parameter point.
pub fn complexity_ratio(n_tx: usize, k: usize, l: usize) -> Result<RatioRow> {
    if n_tx == 0 || k == 0 || k > n_tx {
        return Err(Error::Config(format!(
            "need 1 ≤ K ≤ N_t, got K = {k}, N_t = {n_tx}"
        )));
    }
    if l < 2 || !l.is_power_of_two() {
        return Err(Error::Config(format!(
            "constellation size {l} is not a power of two ≥ 2"
        )));
    }
    let q = binomial(n_tx as u64, k as u64);
    let bits = l.trailing_zeros() as u64;
    // log2 f = (N_t·log2 L + N_t) / 2
    let twice_log2_f = n_tx as u64 * (bits + 1);
    let f = pow2_half(twice_log2_f);
    // g = 2^(K·log2 L) · Q
    let log2_lk = k as u64 * bits;
    let g = 2f64.powi(log2_lk as i32) * q as f64;
    // ratio computed in the log domain first so huge f and g cannot overflow
    let log2_ratio = twice_log2_f as f64 / 2.0 - log2_lk as f64 - (q as f64).log2();
    let ratio = if f.is_finite() && g.is_finite() {
        f / g
    } else {
        2f64.powf(log2_ratio)
    };
    Ok(RatioRow {
        n_tx,
        k,
        l,
        q,
        f,
        g,
        ratio,
    })
}

/// `2^(e/2)`, exact when `e` is even.
fn pow2_half(e: u64) -> f64 {
    let whole = 2f64.powi((e / 2) as i32);
    if e.is_multiple_of(2) {
        whole
    } else {
        whole * std::f64::consts::SQRT_2
    }
}

/// Every combination of the given `K` and `L` values at fixed `N_t`, skipping `K > N_t`.
pub fn ratio_table(n_tx: usize, ks: &[usize], ls: &[usize]) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for &l in ls {
        for &k in ks {
            if k > n_tx {
                continue;
            }
            rows.push(complexity_ratio(n_tx, k, l)?);
        }
    }
    Ok(rows)
}

pub const RATIO_HEADER: &str = "n_tx,k,l,q,f,g,ratio";

pub fn write_ratio_csv<W: Write>(out: &mut W, rows: &[RatioRow]) -> std::io::Result<()> {
    writeln!(out, "{RATIO_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n_tx, r.k, r.l, r.q, r.f, r.g, r.ratio
        )?;
    }
    Ok(())
}

/// Parses `a..b` (inclusive), `a-b`, or a comma list.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("bad range {s:?}"));
    let s = s.trim();
    let bounds = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .or_else(|| s.split_once('-'));
    if let Some((a, b)) = bounds {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| bad()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_antenna_bpsk_point() {
        let r = complexity_ratio(16, 1, 2).unwrap();
        assert_eq!(r.q, 16);
        assert_eq!(r.f, 65536.0);
        assert_eq!(r.g, 32.0);
        assert_eq!(r.ratio, 2048.0);
    }

    #[test]
    fn eight_active_qam16_point() {
        let r = complexity_ratio(16, 8, 16).unwrap();
        assert_eq!(r.q, 12870);
        assert!((r.ratio - 0.0199).abs() / 0.0199 < 1e-3);
        assert!(r.ratio < 1.0);
    }

    #[test]
    fn odd_exponent_uses_sqrt_two() {
        // N_t = 3, L = 2: f = √(2^6) = 8; N_t = 1, L = 4: f = √(2^3)
        assert_eq!(complexity_ratio(3, 1, 2).unwrap().f, 8.0);
        assert!((complexity_ratio(1, 1, 4).unwrap().f - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(complexity_ratio(4, 5, 4).is_err());
        assert!(complexity_ratio(4, 0, 4).is_err());
        assert!(complexity_ratio(4, 2, 3).is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_range("2-3").unwrap(), vec![2, 3]);
        assert_eq!(parse_range("2,4,16").unwrap(), vec![2, 4, 16]);
        assert!(parse_range("4..1").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = ratio_table(16, &[1], &[2]).unwrap();
        let mut buf = Vec::new();
        write_ratio_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n_tx,k,l,q,f,g,ratio\n16,1,2,16,65536,32,2048\n"
        );
    }
}
