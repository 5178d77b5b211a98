//! Extended affine Weyl group action on parameters, frames and states, and
//! the randomized checkers for its defining relations and for invariance
//! of the time evolution.
//!
//! Words of generators are applied left to right: `[Pi, Reflection(1)]`
//! means "apply π, then r₁" as point maps. In that reading
//! `π rᵢ = rᵢ₊₁ π` (indices mod 2n+2) and `π ∘ forward = backward ∘ π`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coords::fg_to_xy;
use crate::dynamics::Snapshot;
use crate::error::{Error, Result};
use crate::harness::{run_trials, RelationReport};
use crate::model::{derive_seed, Params, SampleOptions, StateFG, TRegime, XYFrame};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorId {
    /// `r_k` for `k` in `0..=2n+1`.
    Reflection(usize),
    Pi,
    /// Applied as `π^{2n+1}`.
    PiInverse,
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorId::Reflection(k) => write!(f, "r{k}"),
            GeneratorId::Pi => write!(f, "pi"),
            GeneratorId::PiInverse => write!(f, "pi^-1"),
        }
    }
}

impl FromStr for GeneratorId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi" => Ok(GeneratorId::Pi),
            "pi^-1" => Ok(GeneratorId::PiInverse),
            _ => s
                .strip_prefix('r')
                .and_then(|k| k.parse().ok())
                .map(GeneratorId::Reflection)
                .ok_or_else(|| Error::Parse(format!("unknown generator {s:?}"))),
        }
    }
}

fn check_index(k: usize, n: usize) -> Result<()> {
    if k > 2 * n + 1 {
        return Err(Error::InvalidParams(format!("reflection r{k} out of range for n = {n}")));
    }
    Ok(())
}

fn singular(what: impl Into<String>) -> Error {
    Error::SingularAction { quantity: what.into() }
}

fn div(num: Scalar, den: &Scalar, what: &str) -> Result<Scalar> {
    num.checked_div(den).map_err(|_| singular(what))
}

/// Parameter part of `r_k`.
pub fn reflect_params(k: usize, p: &Params) -> Result<Params> {
    let n = p.n();
    check_index(k, n)?;
    let mut a = p.a_values().to_vec();
    let mut b = p.b_values().to_vec();
    if k.is_multiple_of(2) {
        // a_j <-> b_{j-1}; at j = 1 this is a_1 <-> b_0 = q b_{n+1}.
        let j = k / 2 + 1;
        if j == 1 {
            a[0] = p.b(0);
            b[n] = p.a(1) / p.q();
        } else {
            a[j - 1] = p.b(j - 1);
            b[j - 2] = p.a(j).clone();
        }
    } else {
        let j = k.div_ceil(2);
        std::mem::swap(&mut a[j - 1], &mut b[j - 1]);
    }
    p.with_ab(a, b, p.w().clone(), p.t().clone())
}

/// Parameter part of `π`: `a_i -> b_i/w`, `b_i -> a_{i+1}/w`,
/// `b_{n+1} -> a_1/(q w)`, `t -> q^2/t`, `w -> 1/(w u^2)`.
pub fn pi_params(p: &Params) -> Result<Params> {
    let n = p.n();
    let w = p.w();
    let a = (1..=n + 1).map(|i| p.b(i) / w).collect();
    let mut b: Vec<Scalar> = (1..=n).map(|i| p.a(i + 1) / w).collect();
    b.push(p.a(1) / (w * p.q()));
    let t = p.q() * p.q() / p.t();
    let w2 = (w * p.q_root()).inv().expect("w and u are nonzero");
    p.with_ab(a, b, w2, t)
}

fn t_pow_rho1(p: &Params) -> Result<Scalar> {
    if !p.w_invariant_holds() {
        return Err(Error::IrrationalPower);
    }
    p.t_pow_rho1()
        .ok_or_else(|| Error::UnsupportedRegime("π needs t = q^m for an integer m".into()))
}

/// `R_j^{α,β,γ}` for one `j` in all eight selections, plus `R_i^*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymHelpers {
    /// `r[j-1][sel]` with `sel` bits `(α, β, γ)` = (4, 2, 1); a set bit selects `b_j`.
    pub r: Vec<[Scalar; 8]>,
    /// `R_0^*..R_n^*`.
    pub rstar: Vec<Scalar>,
}

/// Selection of `(α, β, γ)` among `a_j` (`'a'`) and `b_j` (`'b'`).
pub fn selection(pattern: &str) -> usize {
    pattern
        .bytes()
        .fold(0, |acc, c| (acc << 1) | usize::from(c == b'b'))
}

struct FgView<'a> {
    p: &'a Params,
    st: &'a StateFG,
    g0: Scalar,
}

impl<'a> FgView<'a> {
    fn new(st: &'a StateFG, p: &'a Params) -> Result<Self> {
        let g0 = st.g0(p).map_err(|_| singular("g_0"))?;
        Ok(FgView { p, st, g0 })
    }
    fn f(&self, i: usize) -> Scalar {
        self.st.f_at(i, self.p)
    }
    fn g(&self, i: usize) -> &Scalar {
        if i == 0 {
            &self.g0
        } else {
            &self.st.g[i - 1]
        }
    }
}

/// `R_j = (g_j - α_j)/f_j + (β_j b_{j-1}/g_{j-1} - γ_j)/f_{j-1}`; for `j = n+1`
/// the first term reads `(g_0 - q α_{n+1})/q`.
fn r_ratio(v: &FgView, j: usize, sel: usize) -> Result<Scalar> {
    let p = v.p;
    let pick = |bit: usize| if sel & bit != 0 { p.b(j) } else { p.a(j).clone() };
    let (alpha, beta, gamma) = (pick(4), pick(2), pick(1));
    let head = if j == p.n() + 1 {
        (&v.g0 - p.q() * alpha) / p.q()
    } else {
        div(v.g(j) - alpha, &v.f(j), "f_j")?
    };
    let tail = div(beta * p.b(j - 1), v.g(j - 1), "g_{j-1}")? - gamma;
    Ok(head + div(tail, &v.f(j - 1), "f_{j-1}")?)
}

fn rstar_sum(v: &FgView, rb: &[Scalar]) -> Result<Vec<Scalar>> {
    let p = v.p;
    let n = p.n();
    let tq = p.t() / p.q();
    let total: Scalar = rb.iter().sum();
    let mut below = Scalar::zero();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        if i >= 1 {
            below += &rb[i - 1];
        }
        let above = &total - &below;
        let scale = div(-v.f(i), &(p.b(i) - v.g(i)), "b_i - g_i")?;
        out.push(scale * (&tq * &below + above));
    }
    Ok(out)
}

/// Explicit three-part form of `R_i^*`; agrees with the sum form.
pub fn rstar_explicit(st: &StateFG, p: &Params) -> Result<Vec<Scalar>> {
    let v = FgView::new(st, p)?;
    let n = p.n();
    let tq = p.t() / p.q();
    let one = Scalar::one();
    let piece = |j: usize, lead: &Scalar| -> Result<Scalar> {
        let a = div(p.a(j + 1).clone(), v.g(j), "g_j")?;
        div((lead - a) * (p.b(j) - v.g(j)), &v.f(j), "f_j")
    };
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut s = Scalar::zero();
        for j in 0..i {
            s += &tq * piece(j, &one)?;
        }
        s += piece(i, &tq)?;
        for j in i + 1..=n {
            s += piece(j, &one)?;
        }
        out.push(div(v.f(i) * s, &(p.b(i) - v.g(i)), "b_i - g_i")?);
    }
    Ok(out)
}

pub fn sym_helpers(st: &StateFG, p: &Params) -> Result<SymHelpers> {
    let v = FgView::new(st, p)?;
    let n = p.n();
    let mut r = Vec::with_capacity(n + 1);
    for j in 1..=n + 1 {
        let mut row: [Scalar; 8] = Default::default();
        for (sel, slot) in row.iter_mut().enumerate() {
            *slot = r_ratio(&v, j, sel)?;
        }
        r.push(row);
    }
    let baa = selection("baa");
    let rb: Vec<Scalar> = r.iter().map(|row| row[baa].clone()).collect();
    let rstar = rstar_sum(&v, &rb)?;
    Ok(SymHelpers { r, rstar })
}

fn odd_reflection_fg(j: usize, st: &StateFG, p: &Params) -> Result<StateFG> {
    let n = p.n();
    let v = FgView::new(st, p)?;
    let r = |pat: &str| r_ratio(&v, j, selection(pat));
    let ratio = |num: &str, den: &str| -> Result<Scalar> {
        let d = r(den)?;
        div(r(num)?, &d, &format!("R_{j}^{den}"))
    };
    let mut f = st.f.clone();
    let mut g = st.g.clone();
    let mut h = st.h.clone();
    if j == 1 {
        f[0] = &st.f[0] * ratio("aaa", "bab")?;
        g[0] = &st.g[0] * ratio("baa", "bbb")?;
        let others = ratio("baa", "bab")?;
        for fi in f.iter_mut().skip(1) {
            *fi *= &others;
        }
        h *= ratio("bab", "baa")?;
    } else if j == n + 1 {
        f[n - 1] = &st.f[n - 1] * ratio("bab", "aaa")?;
        g[n - 1] = &st.g[n - 1] * ratio("bbb", "baa")?;
        let others = ratio("baa", "aaa")?;
        for fi in f.iter_mut().take(n - 1) {
            *fi *= &others;
        }
        h *= ratio("aaa", "baa")?;
    } else {
        f[j - 2] = &st.f[j - 2] * ratio("bab", "baa")?;
        g[j - 2] = &st.g[j - 2] * ratio("bbb", "baa")?;
        f[j - 1] = &st.f[j - 1] * ratio("aaa", "baa")?;
        g[j - 1] = &st.g[j - 1] * ratio("baa", "bbb")?;
    }
    Ok(StateFG { f, g, h })
}

/// `π` on `(f, g)` and parameters; valid for any `t` because `h` is left out.
pub fn pi_fg_projective(st: &StateFG, p: &Params) -> Result<(Vec<Scalar>, Vec<Scalar>, Params)> {
    let n = p.n();
    let v = FgView::new(st, p)?;
    let helpers = sym_helpers(st, p)?;
    let rs = &helpers.rstar;
    let (q, t, w) = (p.q(), p.t(), p.w());
    let one = Scalar::one();
    let tq = t / q;
    let factor = |i: usize, k: usize| -> Scalar {
        // (g_i R_i - b_{i+1} R_k)(b_{i+1} - g_{i+1})(R_k + 1 - t/q), with index i+1 read mod n+1.
        let next = (i + 1) % (n + 1);
        (v.g(i) * &rs[i] - p.b(i + 1) * &rs[k]) * (p.b(next) - v.g(next)) * (&rs[k] + &one - &tq)
    };
    let d = factor(0, 1 % (n + 1));
    let f1 = v.f(1);
    let mut nf = Vec::with_capacity(n);
    let mut ng = Vec::with_capacity(n);
    for i in 1..n {
        let num = q * q / t * factor(i, i + 1) * &f1;
        nf.push(div(num, &(&d * v.f(i + 1)), "π(f_i) denominator")?);
        let num = p.a(i + 1) / w * p.b(i + 1) * &rs[i + 1];
        ng.push(div(num, &(v.g(i) * &rs[i]), "g_i R_i^*")?);
    }
    let num = q * factor(n, 0) * &f1;
    nf.push(div(num, &(&d * t), "π(f_n) denominator")?);
    let num = p.a(n + 1) / w * p.b(n + 1) * &rs[0];
    ng.push(div(num, &(v.g(n) * &rs[n]), "g_n R_n^*")?);
    Ok((nf, ng, pi_params(p)?))
}

fn pi_h(frame: &XYFrame, p: &Params, c: &Scalar) -> Result<Scalar> {
    let w = p.w();
    let d = lower_y_difference(frame, p, 1)?;
    Ok(c / (w * w) * d)
}

/// `y̲_{j-1} - y̲_j` from the second q-P equation, explicit in the frame.
pub fn lower_y_difference(frame: &XYFrame, p: &Params, j: usize) -> Result<Scalar> {
    let xl = frame.xprev_at(j, p);
    let (y0, y1) = (frame.y_at(j - 1, p), frame.y_at(j, p));
    let d0 = Scalar::one() + &xl * &y0;
    let d1 = Scalar::one() + &xl * &y1;
    Ok(div(p.a(j) * y0, &d0, "1 + x̲_j y_{j-1}")? - div(p.b(j) * y1, &d1, "1 + x̲_j y_j")?)
}

fn apply_fg_one(gen: GeneratorId, st: &StateFG, p: &Params) -> Result<(StateFG, Params)> {
    let n = p.n();
    match gen {
        GeneratorId::Reflection(k) => {
            check_index(k, n)?;
            let np = reflect_params(k, p)?;
            let ns = if k.is_multiple_of(2) {
                st.clone()
            } else {
                odd_reflection_fg(k.div_ceil(2), st, p)?
            };
            Ok((ns, np))
        }
        GeneratorId::Pi => {
            let c = t_pow_rho1(p)?;
            let (f, g, np) = pi_fg_projective(st, p)?;
            let frame = fg_to_xy(st, p).map_err(|e| singular(e.to_string()))?;
            let h = pi_h(&frame, p, &c)?;
            Ok((StateFG { f, g, h }, np))
        }
        GeneratorId::PiInverse => {
            let mut cur = (st.clone(), p.clone());
            for _ in 0..2 * n + 1 {
                cur = apply_fg_one(GeneratorId::Pi, &cur.0, &cur.1)?;
            }
            Ok(cur)
        }
    }
}

/// Applies one generator to an `(f, g, h)` state.
pub fn apply_fg(gen: GeneratorId, st: &StateFG, p: &Params) -> Result<(StateFG, Params)> {
    apply_fg_one(gen, st, p)
}

/// Applies a word left to right.
pub fn apply_word_fg(word: &[GeneratorId], st: &StateFG, p: &Params) -> Result<(StateFG, Params)> {
    word.iter()
        .try_fold((st.clone(), p.clone()), |(s, q), g| apply_fg_one(*g, &s, &q))
}

/// Applies one generator to a frame.
///
/// Odd reflections move `x_j`, and also `x̲_j` by the same rule one step
/// down, using `y̲_{j-1} - y̲_j` from the second q-P equation. `π` recovers
/// the `y̲` layer from the same equation, so no extra data is needed.
pub fn apply_xy(gen: GeneratorId, frame: &XYFrame, p: &Params) -> Result<(XYFrame, Params)> {
    let n = p.n();
    let (q, t) = (p.q(), p.t());
    match gen {
        GeneratorId::Reflection(k) => {
            check_index(k, n)?;
            let np = reflect_params(k, p)?;
            let mut out = frame.clone();
            if k.is_multiple_of(2) {
                let j = k / 2 + 1;
                let dx = frame.x_at(j - 1, p) - frame.x_at(j, p);
                let shift = div(p.b(j - 1) - p.a(j), &dx, "x_{j-1} - x_j")?;
                let new_y = frame.y_at(j - 1, p) - shift;
                if j == 1 {
                    out.y[n] = t * new_y / q;
                } else {
                    out.y[j - 2] = new_y;
                }
            } else {
                let j = k.div_ceil(2);
                let gap = p.a(j) - p.b(j);
                let dy = frame.y_at(j - 1, p) - frame.y_at(j, p);
                out.x[j - 1] = frame.x_at(j, p) - div(gap.clone(), &dy, "y_{j-1} - y_j")?;
                let dyl = lower_y_difference(frame, p, j)?;
                out.xprev[j - 1] = frame.xprev_at(j, p) - div(gap, &dyl, "y̲_{j-1} - y̲_j")?;
            }
            Ok((out, np))
        }
        GeneratorId::Pi => {
            let c = t_pow_rho1(p)?;
            let w = p.w();
            let yl = lower_y_layer(frame, p)?;
            let cw2 = &c / (w * w);
            let cw = &c / w;
            let wc = w / &c;
            let x = yl.iter().map(|v| &cw2 * v).collect();
            let xprev = frame.y.iter().map(|v| &cw * v).collect();
            let mut y: Vec<Scalar> = (1..=n).map(|i| &wc * &frame.xprev[i]).collect();
            y.push(w * q / (&c * t) * &frame.xprev[0]);
            Ok((XYFrame { x, xprev, y }, pi_params(p)?))
        }
        GeneratorId::PiInverse => {
            let mut cur = (frame.clone(), p.clone());
            for _ in 0..2 * n + 1 {
                cur = apply_xy(GeneratorId::Pi, &cur.0, &cur.1)?;
            }
            Ok(cur)
        }
    }
}

/// `y̲_1..y̲_{n+1}` with `y̲_0 = (q^2/t) y̲_{n+1}`.
fn lower_y_layer(frame: &XYFrame, p: &Params) -> Result<Vec<Scalar>> {
    let n = p.n();
    let diffs = (1..=n + 1)
        .map(|j| lower_y_difference(frame, p, j))
        .collect::<Result<Vec<_>>>()?;
    let ratio = p.q() * p.q() / p.t();
    let total: Scalar = diffs.iter().sum();
    let last = div(total, &(&ratio - Scalar::one()), "q^2/t - 1")?;
    let mut cur = &ratio * &last;
    let mut out = Vec::with_capacity(n + 1);
    for d in &diffs {
        cur -= d;
        out.push(cur.clone());
    }
    Ok(out)
}

/// One relation: two words that must act identically.
#[derive(Clone, Debug)]
pub struct Relation {
    pub name: String,
    pub lhs: Vec<GeneratorId>,
    pub rhs: Vec<GeneratorId>,
    pub needs_pi: bool,
}

fn adjacent(i: usize, j: usize, m: usize) -> bool {
    (i + 1) % m == j || (j + 1) % m == i
}

/// The defining relations of the extended affine Weyl group of type
/// `A^{(1)}_{2n+1}`.
pub fn fundamental_relations(n: usize) -> Vec<Relation> {
    use GeneratorId::{Pi, Reflection as R};
    let m = 2 * n + 2;
    let mut out = Vec::new();
    for i in 0..m {
        out.push(Relation {
            name: format!("r{i}^2"),
            lhs: vec![R(i), R(i)],
            rhs: vec![],
            needs_pi: false,
        });
    }
    for i in 0..m {
        for j in i + 1..m {
            let (reps, label) = if adjacent(i, j, m) { (3, "^3") } else { (2, "^2") };
            let word: Vec<_> = (0..reps).flat_map(|_| [R(i), R(j)]).collect();
            out.push(Relation {
                name: format!("(r{i} r{j}){label}"),
                lhs: word,
                rhs: vec![],
                needs_pi: false,
            });
        }
    }
    out.push(Relation {
        name: format!("pi^{m}"),
        lhs: vec![Pi; m],
        rhs: vec![],
        needs_pi: true,
    });
    for i in 0..m {
        out.push(Relation {
            name: format!("pi r{i} = r{} pi", (i + 1) % m),
            lhs: vec![Pi, R(i)],
            rhs: vec![R((i + 1) % m), Pi],
            needs_pi: true,
        });
    }
    out
}

/// π-related checks need `t = q^m` so that `t^{rho_1}` is rational.
fn options_for(base: &SampleOptions, needs_pi: bool) -> SampleOptions {
    if needs_pi {
        SampleOptions {
            t_regime: TRegime::QPower,
            ..*base
        }
    } else {
        *base
    }
}

fn same_action(rel: &Relation, s: &Snapshot) -> Result<bool> {
    let l = apply_word_fg(&rel.lhs, &s.state, &s.params)?;
    let r = apply_word_fg(&rel.rhs, &s.state, &s.params)?;
    Ok(l == r)
}

/// Checks every fundamental relation on `trials` random states.
pub fn check_relations(n: usize, seed: u64, trials: usize) -> Vec<RelationReport> {
    check_relations_with(n, seed, trials, &SampleOptions::default())
}

pub fn check_relations_with(n: usize, seed: u64, trials: usize, opts: &SampleOptions) -> Vec<RelationReport> {
    fundamental_relations(n)
        .into_iter()
        .enumerate()
        .map(|(idx, rel)| {
            let sub = derive_seed(seed, idx as u64, 1);
            run_trials(&rel.name, n, sub, trials, &options_for(opts, rel.needs_pi), |s| same_action(&rel, s))
        })
        .collect()
}

/// `forward(r_k(s)) == r_k(forward(s))`.
pub fn reflection_commutes_with_forward(k: usize, s: &Snapshot) -> Result<bool> {
    let gen = GeneratorId::Reflection(k);
    let (rs, rp) = apply_fg(gen, &s.state, &s.params)?;
    let lhs = Snapshot::new(rp, rs).forward()?;
    let fwd = s.forward()?;
    let (fs, fp) = apply_fg(gen, &fwd.state, &fwd.params)?;
    Ok(lhs == Snapshot::new(fp, fs))
}

/// `π(forward(s)) == backward(π(s))`.
pub fn pi_intertwines(s: &Snapshot) -> Result<bool> {
    let fwd = s.forward()?;
    let (a, ap) = apply_fg(GeneratorId::Pi, &fwd.state, &fwd.params)?;
    let (ps, pp) = apply_fg(GeneratorId::Pi, &s.state, &s.params)?;
    let back = Snapshot::new(pp, ps).backward()?;
    Ok(Snapshot::new(ap, a) == back)
}

/// `π(forward(s)) == forward(π(s))`; the rejected composition law.
pub fn pi_commutes_with_forward(s: &Snapshot) -> Result<bool> {
    let fwd = s.forward()?;
    let (a, ap) = apply_fg(GeneratorId::Pi, &fwd.state, &fwd.params)?;
    let (ps, pp) = apply_fg(GeneratorId::Pi, &s.state, &s.params)?;
    let other = Snapshot::new(pp, ps).forward()?;
    Ok(Snapshot::new(ap, a) == other)
}

/// Invariance of the time evolution under every generator.
pub fn check_invariance(n: usize, seed: u64, trials: usize) -> Vec<RelationReport> {
    check_invariance_with(n, seed, trials, &SampleOptions::default())
}

pub fn check_invariance_with(n: usize, seed: u64, trials: usize, opts: &SampleOptions) -> Vec<RelationReport> {
    let m = 2 * n + 2;
    let mut out: Vec<RelationReport> = (0..m)
        .map(|k| {
            let sub = derive_seed(seed, k as u64, 2);
            run_trials(&format!("r{k} forward = forward r{k}"), n, sub, trials, opts, |s| {
                reflection_commutes_with_forward(k, s)
            })
        })
        .collect();
    out.push(run_trials(
        "pi forward = backward pi",
        n,
        derive_seed(seed, m as u64, 2),
        trials,
        &options_for(opts, true),
        pi_intertwines,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::xy_to_fg;
    use crate::model::{check_params, check_state};

    fn snap(n: usize, seed: u64, q_power: bool) -> Snapshot {
        let opts = if q_power {
            SampleOptions::q_power()
        } else {
            SampleOptions::default()
        };
        Snapshot::sample(n, seed, &opts).unwrap()
    }

    #[test]
    fn generator_names_round_trip() {
        for g in [GeneratorId::Reflection(3), GeneratorId::Pi, GeneratorId::PiInverse] {
            assert_eq!(g.to_string().parse::<GeneratorId>().unwrap(), g);
        }
        assert!("x1".parse::<GeneratorId>().is_err());
    }

    #[test]
    fn rstar_forms_agree() {
        for n in 1..=4 {
            for seed in 0..5 {
                let s = snap(n, seed, false);
                let h = sym_helpers(&s.state, &s.params).unwrap();
                assert_eq!(h.rstar, rstar_explicit(&s.state, &s.params).unwrap());
            }
        }
    }

    #[test]
    fn even_reflection_fixes_state() {
        let s = snap(2, 1, false);
        let (st, p) = apply_fg(GeneratorId::Reflection(2), &s.state, &s.params).unwrap();
        assert_eq!(st, s.state);
        assert_eq!(p.a(2), &s.params.b(1));
        assert_eq!(p.b(1), s.params.a(2).clone());
        let (_, p0) = apply_fg(GeneratorId::Reflection(0), &s.state, &s.params).unwrap();
        assert_eq!(p0.a(1), &s.params.b(0));
        assert_eq!(p0.b(0), s.params.a(1).clone());
    }

    #[test]
    fn involutions_and_validity() {
        for n in 1..=3 {
            let s = snap(n, 4, false);
            for k in 0..2 * n + 2 {
                let g = GeneratorId::Reflection(k);
                let (st, p) = apply_fg(g, &s.state, &s.params).unwrap();
                assert!(check_state(&st, &p).passed, "r{k}");
                assert!(check_params(&p).passed);
                let back = apply_fg(g, &st, &p).unwrap();
                assert_eq!(back, (s.state.clone(), s.params.clone()), "r{k}");
            }
        }
    }

    #[test]
    fn odd_reflection_on_its_wall_is_identity() {
        let s = snap(2, 7, false);
        let p = &s.params;
        for j in 1..=3usize {
            let mut a = p.a_values().to_vec();
            a[j - 1] = p.b(j);
            let walled = p.with_ab(a, p.b_values().to_vec(), p.w().clone(), p.t().clone()).unwrap();
            // The w-invariant is irrelevant for reflections; only the wall matters here.
            let (st, np) = apply_fg(GeneratorId::Reflection(2 * j - 1), &s.state, &walled).unwrap();
            assert_eq!(st, s.state);
            assert_eq!(np, walled);
        }
    }

    #[test]
    fn xy_and_fg_actions_agree() {
        for n in 1..=3 {
            let s = snap(n, 9, true);
            let frame = s.frame().unwrap();
            let mut gens: Vec<_> = (0..2 * n + 2).map(GeneratorId::Reflection).collect();
            gens.push(GeneratorId::Pi);
            for g in gens {
                let (fr, p) = apply_xy(g, &frame, &s.params).unwrap();
                assert!(crate::model::check_state(&fr, &p).passed, "{g}");
                let via_xy = xy_to_fg(&fr, &p).unwrap();
                let (via_fg, p2) = apply_fg(g, &s.state, &s.params).unwrap();
                assert_eq!(p, p2);
                assert_eq!(via_xy, via_fg, "n={n} {g}");
            }
        }
    }

    #[test]
    fn pi_parameter_map_keeps_w_invariant() {
        let s = snap(3, 2, false);
        let p = pi_params(&s.params).unwrap();
        assert!(p.w_invariant_holds());
        assert_eq!(p.t(), &(s.params.q() * s.params.q() / s.params.t()));
    }

    #[test]
    fn pi_outside_q_power_regime() {
        let mut s = snap(1, 3, false);
        s.params = s.params.with_t(Scalar::ratio(2, 7).unwrap());
        let e = apply_fg(GeneratorId::Pi, &s.state, &s.params).unwrap_err();
        assert!(matches!(e, Error::UnsupportedRegime(_)));
        // The projective action still works and has order 2n+2 on (f, g).
        let mut cur = (s.state.f.clone(), s.state.g.clone(), s.params.clone());
        for _ in 0..4 {
            let st = StateFG::new(cur.0, cur.1, s.state.h.clone());
            cur = pi_fg_projective(&st, &cur.2).unwrap();
        }
        assert_eq!((cur.0, cur.1, cur.2), (s.state.f.clone(), s.state.g.clone(), s.params.clone()));
    }

    #[test]
    fn pi_inverse_undoes_pi() {
        let s = snap(2, 5, true);
        let w = [GeneratorId::Pi, GeneratorId::PiInverse];
        assert_eq!(apply_word_fg(&w, &s.state, &s.params).unwrap(), (s.state.clone(), s.params.clone()));
    }

    #[test]
    fn relations_small() {
        for r in check_relations(1, 11, 3) {
            assert!(r.passed(), "{}: {:?}", r.relation, r.failures.first().map(|f| &f.error));
        }
        let names: Vec<_> = fundamental_relations(2).into_iter().map(|r| r.name).collect();
        assert!(names.contains(&"(r0 r2)^2".to_string()));
        assert!(names.contains(&"(r5 r0)^3".to_string()) || names.contains(&"(r0 r5)^3".to_string()));
    }

    #[test]
    fn invariance_small() {
        for r in check_invariance(1, 3, 2) {
            assert!(r.passed(), "{}: {:?}", r.relation, r.failures.first().map(|f| &f.error));
        }
        let s = snap(1, 8, true);
        assert!(!pi_commutes_with_forward(&s).unwrap());
    }
}
