//! The reducible function attached to a large average.
//!
//! For `A = A_N[f_1, ..., f_{j-1}, u]` put
//! `h = E_{n in [N]} g_j(n)^{-1} (A prod_{i<j} g_i(n) f_i)`, so that
//! `<u, h> = ||A||²`. Shifting `[N]` by `l` moves `h` by `O(l / N)`, which is
//! what makes `σ = h / 3C` reducible for every `l <= c_1 N`.

use crate::error::{Error, Result};
use crate::hahnbanach::{default_delta, default_eta, schedule_length};

use super::{l2, MeasurePreservingMap, Observable, RealizedSystem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducibleParams {
    pub epsilon: f64,
    /// `1 <= C <= C*`, with `||u||_∞ <= 3C`.
    pub c: f64,
    pub c_star: f64,
}

impl ReducibleParams {
    /// `c_1 = ε / (96 C*²)`.
    pub fn c1(&self) -> f64 {
        self.epsilon / (96.0 * self.c_star * self.c_star)
    }

    /// `ε / (16 C*)`.
    pub fn defect_bound(&self) -> f64 {
        self.epsilon / (16.0 * self.c_star)
    }

    /// `η(C) = ε² / (216 C)`.
    pub fn eta(&self) -> f64 {
        default_eta(self.epsilon)(self.c)
    }
}

/// `log10` of the largest entry of the `C` schedule for `δ = ε/96` and
/// `η(x) = ε²/(216x)`. The entry itself is far beyond `f64` for every `ε`
/// of practical size, which is why [`ReducibleParams`] takes `C*` as input.
pub fn proof_c_star_log10(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    let len = schedule_length(default_delta(epsilon))?;
    // log10 (2 / η(x)) = log10 (432 / ε²) + log10 x.
    let step = (432.0 / (epsilon * epsilon)).log10();
    let mut l = 0.0f64;
    for _ in 1..len {
        l = l.max(l + step);
    }
    Ok(l)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducibleReport {
    /// `||A_N||₂²`.
    pub norm_sq: f64,
    /// `<u, h>`.
    pub inner_uh: f64,
    pub identity_gap: f64,
    /// `||A_N||₂ > ε/6`.
    pub hypothesis: bool,
    pub c1: f64,
    /// Every `l` with `1 <= l <= c_1 N`.
    pub l_max: u64,
    pub defects: Vec<f64>,
    pub defect_bound: f64,
    pub defects_ok: bool,
    /// `<u, σ>` and `2η(C)`; the first exceeds the second whenever the
    /// hypothesis holds.
    pub inner_u_sigma: f64,
    pub two_eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reducible {
    pub h: Vec<f64>,
    pub sigma: Vec<f64>,
    pub report: ReducibleReport,
}

/// Builds `h`, `σ = h / 3C` and checks the reducibility defects
/// `||g_j(l)σ - E_{m in [N]} (<g_j|1>_m(l) b_0) prod_{i<j} <g_j|g_i>_m(l) b_i||_∞`
/// with `b_0 = A / 3C` and `b_i = f_i`.
pub fn reducible_construct(
    r: &RealizedSystem,
    fs: &[Observable],
    u: &Observable,
    n: u64,
    params: &ReducibleParams,
) -> Result<Reducible> {
    let j = r.len();
    if fs.len() + 1 != j {
        return Err(Error::SizeMismatch {
            expected: j - 1,
            got: fs.len(),
        });
    }
    let ReducibleParams { epsilon, c, c_star } = *params;
    if !(epsilon > 0.0 && c >= 1.0 && c <= c_star) {
        return Err(Error::InvalidParameter(format!(
            "need ε > 0 and 1 <= C <= C*, got ε = {epsilon}, C = {c}, C* = {c_star}"
        )));
    }
    if u.sup_norm() > 3.0 * c {
        return Err(Error::InvalidParameter(format!(
            "||u||_∞ = {} exceeds 3C = {}",
            u.sup_norm(),
            3.0 * c
        )));
    }
    if let Some(f) = fs.iter().find(|f| f.sup_norm() > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "||f_i||_∞ = {} exceeds 1",
            f.sup_norm()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    let size = r.space_size();
    let mut inputs: Vec<Observable> = fs.to_vec();
    inputs.push(u.clone());
    let a = super::average(r, &inputs, n)?;
    let a = a.values();

    let c1 = params.c1();
    let l_max = (c1 * n as f64).floor() as u64;
    let maps: Vec<std::sync::Arc<Vec<MeasurePreservingMap>>> = (1..=n + l_max)
        .map(|t| r.maps_at(t as i64))
        .collect::<Result<_>>()?;
    let at = |t: u64| &maps[(t - 1) as usize];

    let mut h = vec![0.0; size];
    let mut v = vec![0.0; size];
    for t in 1..=n {
        let g = at(t);
        for (y, slot) in v.iter_mut().enumerate() {
            let mut p = a[y];
            for (gi, f) in g.iter().zip(fs) {
                p *= f.values()[gi.apply_inverse(y)];
            }
            *slot = p;
        }
        // (g_j(t)^{-1} v)(x) = v(g_j(t) x).
        let gj = &g[j - 1];
        for (x, slot) in h.iter_mut().enumerate() {
            *slot += v[gj.apply(x)];
        }
    }
    for s in h.iter_mut() {
        *s /= n as f64;
    }
    let sigma: Vec<f64> = h.iter().map(|x| x / (3.0 * c)).collect();
    let b0: Vec<f64> = a.iter().map(|x| x / (3.0 * c)).collect();

    let mut defects = Vec::with_capacity(l_max as usize);
    let mut rhs = vec![0.0; size];
    for l in 1..=l_max {
        let gjl = &at(l)[j - 1];
        rhs.iter_mut().for_each(|s| *s = 0.0);
        for m in 1..=n {
            let g = at(l + m);
            let gj = &g[j - 1];
            for (x, slot) in rhs.iter_mut().enumerate() {
                // z = g_j(l+m) g_j(l)^{-1} x
                let z = gj.apply(gjl.apply_inverse(x));
                let mut p = b0[z];
                for (gi, f) in g.iter().zip(fs) {
                    p *= f.values()[gi.apply_inverse(z)];
                }
                *slot += p;
            }
        }
        let defect = (0..size)
            .map(|x| (sigma[gjl.apply_inverse(x)] - rhs[x] / n as f64).abs())
            .fold(0.0f64, f64::max);
        defects.push(defect);
    }

    let norm_sq = l2(a).powi(2);
    let inner_uh = u.values().iter().zip(&h).map(|(x, y)| x * y).sum::<f64>() / size as f64;
    let defect_bound = params.defect_bound();
    let report = ReducibleReport {
        norm_sq,
        inner_uh,
        identity_gap: (inner_uh - norm_sq).abs(),
        hypothesis: norm_sq.sqrt() > epsilon / 6.0,
        c1,
        l_max,
        defects_ok: defects.iter().all(|d| *d < defect_bound),
        defects,
        defect_bound,
        inner_u_sigma: inner_uh / (3.0 * c),
        two_eta: 2.0 * params.eta(),
    };
    Ok(Reducible { h, sigma, report })
}
