//! Capacity, conditioning, receiver SNRs and MCS-mapped link rates.

mod mcs;

pub use mcs::{map_rate, McsClass, McsRow, McsTable, Phy};

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};

/// Relative singular-value floor below which a matrix counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

fn check_finite(h: &DMatrix<Complex64>) -> Result<()> {
    if h.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("channel matrix".into()))
    }
}

fn check_snr(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("SNR must be positive and finite, got {rho}")))
    }
}

/// `log2 det(A)` for Hermitian positive definite `A`, by Cholesky.
fn log2_det_hpd(a: &DMatrix<Complex64>) -> Option<f64> {
    let n = a.nrows();
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let mut acc = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        acc += djj.log2();
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(2.0 * acc)
}

/// Shannon capacity `log2 det(I + rho / N_tx H H^H)` in bits/s/Hz, with equal
/// power per transmit port.
pub fn capacity(h: &DMatrix<Complex64>, rho: f64) -> Result<f64> {
    check_finite(h)?;
    check_snr(rho)?;
    let n_tx = h.ncols() as f64;
    let m = DMatrix::<Complex64>::identity(h.nrows(), h.nrows()) + h * h.adjoint() * Complex64::new(rho / n_tx, 0.0);
    log2_det_hpd(&m)
        .map(|c| c.max(0.0))
        .ok_or_else(|| Error::NonFinite("capacity determinant".into()))
}

/// Same quantity as [`capacity`], summed over the singular values of `h`.
pub fn capacity_svd(h: &DMatrix<Complex64>, rho: f64) -> Result<f64> {
    check_finite(h)?;
    check_snr(rho)?;
    let n_tx = h.ncols() as f64;
    let sv = h.clone().svd(false, false).singular_values;
    Ok(sv.iter().map(|s| (1.0 + rho * s * s / n_tx).log2()).sum())
}

/// Largest capacity of any single (rx, tx) entry used alone.
pub fn best_siso_capacity(h: &DMatrix<Complex64>, rho: f64) -> Result<f64> {
    check_finite(h)?;
    check_snr(rho)?;
    Ok(h.iter().map(|z| (1.0 + rho * z.norm_sqr()).log2()).fold(0.0, f64::max))
}

/// `sigma_max / sigma_min`; infinite when `h` is numerically singular.
pub fn condition_number(h: &DMatrix<Complex64>) -> Result<f64> {
    check_finite(h)?;
    let sv = h.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return Err(Error::UndefinedCondition);
    }
    if min <= max * SINGULAR_TOL {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Maximal ratio combining: branch SNRs add.
pub fn mrc_combine(branch_snrs: &[f64]) -> Result<f64> {
    if branch_snrs.is_empty() {
        return Err(Error::Domain("MRC needs at least one branch".into()));
    }
    Ok(branch_snrs.iter().sum())
}

/// Post-combining SNR of one transmit column at full power.
pub fn mrc_snr(column: &[Complex64], rho: f64) -> Result<f64> {
    let branches: Vec<f64> = column.iter().map(|h| rho * h.norm_sqr()).collect();
    mrc_combine(&branches)
}

/// Per-stream SNRs of a zero-forcing receiver with `rho / N_tx` per stream.
pub fn zf_stream_snrs(h: &DMatrix<Complex64>, rho: f64) -> Result<Vec<f64>> {
    check_finite(h)?;
    check_snr(rho)?;
    let n_tx = h.ncols();
    if h.nrows() < n_tx {
        return Err(Error::Singular(format!(
            "{} receive ports cannot separate {n_tx} streams",
            h.nrows()
        )));
    }
    let sv = h.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > max * SINGULAR_TOL) {
        return Err(Error::Singular("channel matrix is rank deficient".into()));
    }
    let gram = h.adjoint() * h;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Singular("H^H H is not invertible".into()))?;
    let per = rho / n_tx as f64;
    (0..n_tx)
        .map(|k| {
            let d = inv[(k, k)].re;
            if d > 0.0 && d.is_finite() {
                Ok(per / d)
            } else {
                Err(Error::Singular(format!("stream {k} has no usable energy")))
            }
        })
        .collect()
}

/// Exponential effective SNR, `-b ln(mean(exp(-snr_i / b)))`, in linear units.
pub fn effective_snr(snrs: &[f64], beta_esm: f64) -> Result<f64> {
    if snrs.is_empty() {
        return Err(Error::Domain("effective SNR needs at least one value".into()));
    }
    if !(beta_esm.is_finite() && beta_esm > 0.0) {
        return Err(Error::Domain(format!("ESM beta {beta_esm}")));
    }
    let m = snrs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = snrs.iter().map(|s| (-(s - m) / beta_esm).exp()).sum::<f64>() / snrs.len() as f64;
    Ok(m - beta_esm * mean.ln())
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Siso,
    Mimo2x2,
    Mimo3x3,
    Mimo { rx: usize, tx: usize },
}

impl Mode {
    pub fn from_dims(n_rx: usize, n_tx: usize) -> Self {
        match (n_rx, n_tx) {
            (1, 1) => Mode::Siso,
            (2, 2) => Mode::Mimo2x2,
            (3, 3) => Mode::Mimo3x3,
            (rx, tx) => Mode::Mimo { rx, tx },
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Siso => f.write_str("SISO"),
            Mode::Mimo2x2 => f.write_str("MIMO-2x2"),
            Mode::Mimo3x3 => f.write_str("MIMO-3x3"),
            Mode::Mimo { rx, tx } => write!(f, "MIMO-{rx}x{tx}"),
        }
    }
}

/// Inputs of link evaluation besides the channel itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkParams {
    /// Transmit power over receiver noise power, in dB; channel gains apply
    /// on top.
    pub snr_db: f64,
    pub phy: Phy,
    pub bandwidth_mhz: u32,
    pub beta_esm: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            snr_db: 100.0,
            phy: Phy::Ht,
            bandwidth_mhz: 40,
            beta_esm: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub mode: Mode,
    /// Mean Shannon capacity over subcarriers times the bandwidth.
    pub capacity_bps: f64,
    /// Mean over subcarriers; infinite if any subcarrier is singular.
    pub condition_number: f64,
    /// Effective SNR of each transmitted stream.
    pub stream_snrs_db: Vec<f64>,
    pub n_streams: usize,
    pub phy_rate_bps: f64,
}

struct Candidate {
    rate: f64,
    streams: Vec<f64>,
}

/// Chooses the best stream configuration for a link and maps it to a rate.
///
/// One stream sends from the strongest transmit port at full power with MRC
/// across receive ports. `k >= 2` streams use the best `k`-subset of transmit
/// ports with ZF reception and power split evenly. All streams share one MCS,
/// chosen from the effective SNR pooled over streams and subcarriers.
pub fn evaluate_link(csi: &[ChannelMatrix], params: &LinkParams, table: &McsTable) -> Result<LinkResult> {
    let first = csi
        .first()
        .ok_or_else(|| Error::Domain("no subcarriers to evaluate".into()))?;
    let (n_rx, n_tx) = (first.n_rx(), first.n_tx());
    if csi.iter().any(|m| m.n_rx() != n_rx || m.n_tx() != n_tx) {
        return Err(Error::Domain("subcarrier matrices differ in shape".into()));
    }
    let class = table.class(params.phy, params.bandwidth_mhz)?;
    let rho = from_db(params.snr_db);
    check_snr(rho)?;
    let bw = params.bandwidth_mhz as f64 * 1e6;

    let mut cap = 0.0;
    let mut cond = 0.0;
    for m in csi {
        cap += capacity(&m.entries, rho)?;
        cond += match condition_number(&m.entries) {
            Ok(c) => c,
            Err(Error::UndefinedCondition) => f64::INFINITY,
            Err(e) => return Err(e),
        };
    }
    let n = csi.len() as f64;

    let mut best: Option<Candidate> = None;
    let mut consider = |c: Candidate| {
        if best.as_ref().is_none_or(|b| c.rate > b.rate) {
            best = Some(c);
        }
    };

    for j in 0..n_tx {
        let snrs: Vec<f64> = csi
            .iter()
            .map(|m| mrc_snr(m.entries.column(j).as_slice(), rho))
            .collect::<Result<_>>()?;
        let esnr = effective_snr(&snrs, params.beta_esm)?;
        consider(Candidate {
            rate: map_rate(to_db(esnr), class, 1),
            streams: vec![to_db(esnr)],
        });
    }
    for k in 2..=n_tx.min(n_rx) {
        for subset in combinations(n_tx, k) {
            let mut per_stream = vec![Vec::with_capacity(csi.len()); k];
            let mut ok = true;
            for m in csi {
                let sub = m.entries.select_columns(subset.iter());
                match zf_stream_snrs(&sub, rho) {
                    Ok(s) => {
                        for (dst, v) in per_stream.iter_mut().zip(s) {
                            dst.push(v);
                        }
                    }
                    Err(Error::Singular(_)) => {
                        ok = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if !ok {
                continue;
            }
            let pooled: Vec<f64> = per_stream.iter().flatten().copied().collect();
            let esnr = effective_snr(&pooled, params.beta_esm)?;
            let streams = per_stream
                .iter()
                .map(|s| effective_snr(s, params.beta_esm).map(to_db))
                .collect::<Result<_>>()?;
            consider(Candidate {
                rate: map_rate(to_db(esnr), class, k),
                streams,
            });
        }
    }
    let best = best.expect("at least one transmit port");
    Ok(LinkResult {
        mode: Mode::from_dims(n_rx, n_tx),
        capacity_bps: cap / n * bw,
        condition_number: cond / n,
        n_streams: best.streams.len(),
        stream_snrs_db: best.streams,
        phy_rate_bps: best.rate,
    })
}

/// `k`-element subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PortKind;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(rows: usize, cols: usize, v: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(rows, cols, &v.iter().map(|&x| c(x)).collect::<Vec<_>>())
    }

    #[test]
    fn identity_capacity() {
        let h = DMatrix::<Complex64>::identity(2, 2);
        let cap = capacity(&h, 3.0).unwrap();
        assert!((cap - 2.0 * 2.5f64.log2()).abs() < 1e-12);
        assert!((cap - 2.643_856_189_774_724).abs() < 1e-9);
        assert_eq!(capacity(&DMatrix::zeros(2, 2), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn capacity_rejects_bad_input() {
        let mut h = DMatrix::<Complex64>::identity(2, 2);
        assert!(capacity(&h, 0.0).is_err());
        h[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(capacity(&h, 1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn condition_numbers() {
        let i = DMatrix::<Complex64>::identity(3, 3) * c(4.2);
        assert_eq!(condition_number(&i).unwrap(), 1.0);
        assert_eq!(condition_number(&real(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap(), 2.0);
        assert_eq!(
            condition_number(&real(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            condition_number(&DMatrix::zeros(2, 2)),
            Err(Error::UndefinedCondition)
        ));
    }

    #[test]
    fn mrc_examples() {
        assert_eq!(mrc_combine(&[10.0]).unwrap(), 10.0);
        let four = mrc_combine(&[2.0; 4]).unwrap();
        assert!((to_db(four) - to_db(2.0) - 6.0206).abs() < 1e-4);
        assert_eq!(mrc_combine(&[1.0, 3.0]).unwrap(), 4.0);
        assert!(mrc_combine(&[]).is_err());
    }

    #[test]
    fn zf_examples() {
        let s = zf_stream_snrs(&DMatrix::identity(2, 2), 10.0).unwrap();
        assert_eq!(s, vec![5.0, 5.0]);
        let s = zf_stream_snrs(&real(2, 2, &[1.0, 0.0, 0.0, 0.5]), 10.0).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-12 && (s[1] - 1.25).abs() < 1e-12);
        assert!(matches!(
            zf_stream_snrs(&real(2, 2, &[1.0, 1.0, 1.0, 1.0]), 10.0),
            Err(Error::Singular(_))
        ));
        assert!(zf_stream_snrs(&real(1, 2, &[1.0, 1.0]), 10.0).is_err());
    }

    #[test]
    fn esm_examples() {
        assert!((effective_snr(&[7.0; 5], 1.0).unwrap() - 7.0).abs() < 1e-12);
        let flat = effective_snr(&[10.0, 10.0], 3.0).unwrap();
        let spread = effective_snr(&[1.0, 19.0], 3.0).unwrap();
        assert!(spread < flat);
        // large values do not underflow
        let big = effective_snr(&[1e6, 2e6], 1.0).unwrap();
        assert!((big - (1e6 + 2f64.ln())).abs() < 1e-6);
    }

    fn csi_of(mats: Vec<DMatrix<Complex64>>) -> Vec<ChannelMatrix> {
        mats.into_iter()
            .map(|m| {
                let (r, t) = (m.nrows(), m.ncols());
                ChannelMatrix::new(m, 2.4e9, vec![PortKind::Contact; r], vec![PortKind::Contact; t]).unwrap()
            })
            .collect()
    }

    #[test]
    fn link_picks_two_streams_on_strong_identity() {
        let table = McsTable::builtin();
        let p = LinkParams {
            snr_db: 40.0,
            ..LinkParams::default()
        };
        let r = evaluate_link(&csi_of(vec![DMatrix::identity(2, 2); 4]), &p, &table).unwrap();
        assert_eq!(r.mode, Mode::Mimo2x2);
        assert_eq!(r.n_streams, 2);
        assert_eq!(r.phy_rate_bps, 300e6);
        assert_eq!(r.condition_number, 1.0);
    }

    #[test]
    fn link_falls_back_to_one_stream_when_rank_one() {
        let table = McsTable::builtin();
        let p = LinkParams {
            snr_db: 40.0,
            ..LinkParams::default()
        };
        let h = real(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = evaluate_link(&csi_of(vec![h]), &p, &table).unwrap();
        assert_eq!(r.n_streams, 1);
        assert_eq!(r.phy_rate_bps, 150e6);
        assert_eq!(r.condition_number, f64::INFINITY);
    }

    #[test]
    fn subsets() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 2), vec![vec![0, 1]]);
    }
}
