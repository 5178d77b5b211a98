//! Time evolution `t -> qt` of the `(f, g, h)` system and its inverse.

use serde::{Deserialize, Serialize};

use crate::coords::fg_to_xy;
use crate::error::{singular_step, Error, Result};
use crate::linalg::Matrix;
use crate::model::{sample_state, Params, SampleOptions, StateFG, XYFrame};
use crate::scalar::Scalar;

fn div(num: Scalar, den: &Scalar, what: &str) -> Result<Scalar> {
    num.checked_div(den).map_err(|_| singular_step(what))
}

/// The auxiliary sums `F_1..F_{n+1}` and `G_1..G_{n+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxFG {
    #[serde(rename = "F")]
    pub big_f: Vec<Scalar>,
    #[serde(rename = "G")]
    pub big_g: Vec<Scalar>,
}

/// `F_i = sum_{j<i} f_j + t sum_{j>=i} f_j + t`.
pub fn eval_f_aux(f: &[Scalar], t: &Scalar) -> Vec<Scalar> {
    let mut below = Scalar::zero();
    let mut above: Scalar = f.iter().sum();
    let mut out = Vec::with_capacity(f.len() + 1);
    for i in 0..=f.len() {
        out.push(&below + t * &above + t);
        if i < f.len() {
            below += &f[i];
            above -= &f[i];
        }
    }
    out
}

/// Evaluates `F_i` and `G_i`.
///
/// `G_i` is a double sum over `j` and products of `b_k a_{k+1}`. Writing
/// `P_j = prod_{k<j} b_k a_{k+1}` and `T_j = P_j (prod_{l>j} g_l / prod_{l<j} g_l) f_j`,
/// `G_i P_i = sum_{j>=i} T_j + q^{n/2} t P_{n+1} + q^n t b_{n+1} a_1 P_{n+1} sum_{j<i} T_j`,
/// so everything is assembled from prefix products and one running sum.
pub fn eval_aux(state: &StateFG, p: &Params) -> Result<AuxFG> {
    let n = p.n();
    let t = p.t();
    let (f, g) = (&state.f, &state.g);
    let big_f = eval_f_aux(f, t);

    // prefix[j] = P_{j+1}, i.e. prefix[0] = 1 = P_1.
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = Scalar::one();
    prefix.push(acc.clone());
    for k in 1..=n {
        acc = acc * p.b(k) * p.a(k + 1);
        prefix.push(acc.clone());
    }
    let total = &prefix[n];

    let mut g_after = vec![Scalar::one(); n + 1];
    for j in (1..n).rev() {
        g_after[j - 1] = &g_after[j] * &g[j];
    }
    let mut terms = Vec::with_capacity(n);
    let mut g_before = Scalar::one();
    for j in 1..=n {
        let ratio = div(g_after[j - 1].clone(), &g_before, "g_l in G_i")?;
        terms.push(&prefix[j - 1] * ratio * &f[j - 1]);
        g_before *= &g[j - 1];
    }

    let head = p.q_half_pow(n as i64) * t * total;
    let wrap = p.q().powu(n as u32) * t * p.b(n + 1) * p.a(1) * total;
    let mut below = Scalar::zero();
    let mut above: Scalar = terms.iter().sum();
    let mut big_g = Vec::with_capacity(n + 1);
    for i in 1..=n + 1 {
        let v = &above + &head + &wrap * &below;
        big_g.push(v / &prefix[i - 1]);
        if i <= n {
            below += &terms[i - 1];
            above -= &terms[i - 1];
        }
    }
    Ok(AuxFG { big_f, big_g })
}

/// One step `t -> qt`.
///
/// `ḡ` comes first since the `f̄` update needs it, then `f̄`, then `h̄`.
pub fn forward_step(state: &StateFG, p: &Params) -> Result<(StateFG, Params)> {
    let n = p.n();
    let (q, t) = (p.q(), p.t());
    let (f, g, h) = (&state.f, &state.g, &state.h);
    let AuxFG { big_f, big_g } = eval_aux(state, p)?;
    for i in 0..=n {
        if big_f[i].is_zero() {
            return Err(singular_step(format!("F_{}", i + 1)));
        }
        if big_g[i].is_zero() {
            return Err(singular_step(format!("G_{}", i + 1)));
        }
    }
    let mut gb = Vec::with_capacity(n);
    for i in 0..n {
        let den = &g[i] * &big_f[i] * &big_g[i + 1];
        gb.push(div(&big_f[i + 1] * &big_g[i], &den, &format!("g_{}", i + 1))?);
    }
    let gb_prod: Scalar = gb.iter().product();
    let gb0 = div(Scalar::one(), &(p.q_half_pow(n as i64) * t * &gb_prod), "new g_0")?;
    let wrap = &big_f[n] * &big_f[0] * (p.b(0) - &gb0) * (&gb0 - p.a(1));
    if wrap.is_zero() {
        return Err(singular_step("F_{n+1} F_1 (b_0 - new g_0)(new g_0 - a_1)"));
    }
    let mut fb = Vec::with_capacity(n);
    for i in 0..n {
        let num = q * t * &big_f[i] * &big_f[i + 1] * &gb0 * (p.b(i + 1) - &gb[i]) * (&gb[i] - p.a(i + 2));
        let den = &f[i] * &wrap * &gb[i];
        fb.push(div(num, &den, &format!("f_{} new g_{}", i + 1, i + 1))?);
    }
    let t_minus_one = t - Scalar::one();
    let hb = div(-(&wrap * h), &(t * &t_minus_one * &t_minus_one * &gb0), "t (t - 1)^2 new g_0")?;
    let next = p.with_t(q * t);
    let out = StateFG { f: fb, g: gb, h: hb };
    debug_assert_eq!(out.g0(&next).ok(), Some(gb0));
    Ok((out, next))
}

/// A root of the backward closing equation and how it fared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackwardCandidate {
    pub g0: Scalar,
    pub state: Option<StateFG>,
    pub product_relation: bool,
    pub round_trip: bool,
}

type Mobius = [[Scalar; 2]; 2];

fn compose(a: &Mobius, b: &Mobius) -> Mobius {
    [
        [
            &a[0][0] * &b[0][0] + &a[0][1] * &b[1][0],
            &a[0][0] * &b[0][1] + &a[0][1] * &b[1][1],
        ],
        [
            &a[1][0] * &b[0][0] + &a[1][1] * &b[1][0],
            &a[1][0] * &b[0][1] + &a[1][1] * &b[1][1],
        ],
    ]
}

/// Candidate previous states for `backward_step`, in increasing order of `g̲_0`.
pub fn backward_candidates(state: &StateFG, p: &Params) -> Result<Vec<BackwardCandidate>> {
    let n = p.n();
    let q = p.q();
    let frame = fg_to_xy(state, p).map_err(|e| singular_step(e.to_string()))?;
    let xl = &frame.xprev;
    let tau = p.t() / q;
    let prev = p.with_t(tau.clone());
    let hb = &tau * &xl[n] - &xl[0];
    if hb.is_zero() {
        return Err(singular_step("previous h"));
    }
    let fb: Vec<Scalar> = (0..n).map(|i| &tau * (&xl[i] - &xl[i + 1]) / &hb).collect();
    let big_f = eval_f_aux(&fb, &tau);
    if let Some(i) = big_f.iter().position(Scalar::is_zero) {
        return Err(singular_step(format!("previous F_{}", i + 1)));
    }
    if let Some(i) = fb.iter().position(Scalar::is_zero) {
        return Err(singular_step(format!("previous f_{}", i + 1)));
    }
    let g0 = state.g0(p).map_err(|_| singular_step("g_0"))?;
    let gc = |i: usize| if i == 0 { g0.clone() } else { state.g[i - 1].clone() };
    let ba = |i: usize| p.b(i) * p.a(i + 1);

    // Each line of the linear system gives g̲_i as a Möbius function of g̲_{i-1}.
    let mut links: Vec<Mobius> = Vec::with_capacity(n);
    let l1 = &fb[0] * &big_f[n] / &big_f[0] * &g0 + div(ba(1) * &big_f[1] / &big_f[0], &gc(1), "g_1")?;
    let c1 = q * p.b(n + 1) * p.a(1) * &fb[0] / &tau;
    links.push([[l1, -c1], [Scalar::one(), Scalar::zero()]]);
    for i in 2..=n {
        let li = &fb[i - 1] * &big_f[i - 2] / &big_f[i - 1] * gc(i - 1)
            + div(ba(i) * &fb[i - 2] * &big_f[i] / &big_f[i - 1], &gc(i), "g_i")?;
        let ki = ba(i - 1) * &fb[i - 1];
        links.push([[li, -ki], [fb[i - 2].clone(), Scalar::zero()]]);
    }
    let chain = links
        .iter()
        .skip(1)
        .fold(links[0].clone(), |acc, m| compose(m, &acc));
    let last = &tau * &big_f[n - 1] / &big_f[n] * gc(n)
        + div(p.b(n + 1) * p.a(1) * &fb[n - 1] * &big_f[0] / &big_f[n], &g0, "g_0")?;
    let k = &tau / q * &fb[n - 1];
    let m = ba(n) * &tau;
    let [[ca, cb], [cc, cd]] = &chain;
    let c2 = &k * ca;
    let c1 = &k * cb + &m * cc - &last * ca;
    let c0 = &m * cd - &last * cb;

    let mut roots = Vec::new();
    if c2.is_zero() {
        if !c1.is_zero() {
            roots.push(-c0 / &c1);
        }
    } else {
        let disc = &c1 * &c1 - Scalar::from_int(4) * &c2 * &c0;
        if let Some(r) = disc.sqrt_exact() {
            let two_a = Scalar::from_int(2) * &c2;
            let mut rs = vec![(-&c1 + &r) / &two_a, (-&c1 - &r) / &two_a];
            rs.sort();
            rs.dedup();
            roots = rs;
        }
    }

    Ok(roots
        .into_iter()
        .map(|r0| {
            let candidate = evaluate_chain(&links, &r0).map(|g| StateFG {
                f: fb.clone(),
                g,
                h: hb.clone(),
            });
            let product_relation = candidate
                .as_ref()
                .and_then(|s| s.g0(&prev).ok())
                .is_some_and(|v| v == r0);
            let round_trip = candidate
                .as_ref()
                .and_then(|s| forward_step(s, &prev).ok())
                .is_some_and(|(s, np)| &s == state && np.t() == p.t());
            BackwardCandidate {
                g0: r0,
                state: candidate,
                product_relation,
                round_trip,
            }
        })
        .collect())
}

fn evaluate_chain(links: &[Mobius], g0: &Scalar) -> Option<Vec<Scalar>> {
    let mut out = Vec::with_capacity(links.len());
    let mut cur = g0.clone();
    for m in links {
        let num = &m[0][0] * &cur + &m[0][1];
        let den = &m[1][0] * &cur + &m[1][1];
        cur = num.checked_div(&den).ok()?;
        if cur.is_zero() {
            return None;
        }
        out.push(cur.clone());
    }
    Some(out)
}

/// One step `t -> t/q`; inverse of [`forward_step`].
pub fn backward_step(state: &StateFG, p: &Params) -> Result<(StateFG, Params)> {
    let candidates = backward_candidates(state, p)?;
    candidates
        .into_iter()
        .find(|c| c.product_relation && c.round_trip)
        .and_then(|c| c.state)
        .map(|s| (s, p.with_t(p.t() / p.q())))
        .ok_or(Error::NoConsistentRoot)
}

fn require_det_order(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::UnsupportedRegime(format!(
            "the tridiagonal coefficient matrix needs n >= 2, got n = {n}"
        )));
    }
    Ok(())
}

/// `alpha_1..alpha_n` and `beta_1..beta_n` of the backward linear system.
pub fn tridiag_coefficients(state: &StateFG, p: &Params) -> Result<(Vec<Scalar>, Vec<Scalar>)> {
    let n = p.n();
    let (f, g) = (&state.f, &state.g);
    let g0 = state.g0(p)?;
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for i in 1..n {
        let core = div(&f[i - 1] * &g[i - 1] * &g[i], &f[i], "f_{i+1}")?;
        alpha.push(&core + p.b(i) * p.a(i + 1));
        beta.push(p.b(i + 1) * p.a(i + 2) * core);
    }
    let tail = &f[n - 1] * &g[n - 1] * &g0;
    alpha.push(&tail / p.q() + p.b(n) * p.a(n + 1));
    beta.push(p.q().powu(n as u32 - 1) * p.b(n + 1) * p.a(1) * p.t() * tail);
    Ok((alpha, beta))
}

/// The coefficient matrix: unit diagonal, `-alpha_i` above it, `beta_i` two
/// above it, and `beta_n` in the bottom-left corner.
pub fn tridiag_matrix(state: &StateFG, p: &Params) -> Result<Matrix> {
    let n = p.n();
    require_det_order(n)?;
    let (alpha, beta) = tridiag_coefficients(state, p)?;
    let mut m = Matrix::identity(n);
    for i in 0..n - 1 {
        m[(i, i + 1)] = -alpha[i].clone();
    }
    for i in 0..n.saturating_sub(2) {
        m[(i, i + 2)] = beta[i].clone();
    }
    m[(n - 1, 0)] = beta[n - 1].clone();
    Ok(m)
}

pub fn tridiag_det_bruteforce(state: &StateFG, p: &Params) -> Result<Scalar> {
    Ok(tridiag_matrix(state, p)?.det())
}

/// `1 + q^{n/2} sum_j b_{n+1} a_1 prod_{k<j} b_k a_{k+1} (prod_{l>j} g_l / prod_{l<j} g_l) f_j`.
pub fn tridiag_det_closed(state: &StateFG, p: &Params) -> Result<Scalar> {
    let n = p.n();
    require_det_order(n)?;
    let (f, g) = (&state.f, &state.g);
    let mut g_after = vec![Scalar::one(); n];
    for j in (1..n).rev() {
        g_after[j - 1] = &g_after[j] * &g[j];
    }
    let mut sum = Scalar::zero();
    let mut ba = Scalar::one();
    let mut g_before = Scalar::one();
    for j in 1..=n {
        sum += div(&ba * &g_after[j - 1] * &f[j - 1], &g_before, "g_l")?;
        ba = ba * p.b(j) * p.a(j + 1);
        g_before *= &g[j - 1];
    }
    Ok(Scalar::one() + p.q_half_pow(n as i64) * p.b(n + 1) * p.a(1) * sum)
}

/// `Delta_0..Delta_{n-1}` from `Delta_i = -alpha_i Delta_{i-1} - beta_{i-1} Delta_{i-2}`.
pub fn delta_recurrence(state: &StateFG, p: &Params) -> Result<Vec<Scalar>> {
    let n = p.n();
    require_det_order(n)?;
    let (alpha, beta) = tridiag_coefficients(state, p)?;
    let mut d = vec![Scalar::one(), -alpha[0].clone()];
    for i in 2..n {
        let v = -(&alpha[i - 1] * &d[i - 1]) - &beta[i - 2] * &d[i - 2];
        d.push(v);
    }
    d.truncate(n);
    Ok(d)
}

/// `Delta_i = (-1)^i sum_{j=1}^{i+1} prod_{k<j} b_k a_{k+1} prod_{l=j}^{i} g_l g_{l+1} f_j / f_{i+1}`.
pub fn delta_closed(state: &StateFG, p: &Params) -> Result<Vec<Scalar>> {
    let n = p.n();
    require_det_order(n)?;
    let (f, g) = (&state.f, &state.g);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = Scalar::zero();
        let mut ba = Scalar::one();
        for j in 1..=i + 1 {
            let gg: Scalar = (j..=i).map(|l| &g[l - 1] * &g[l]).product();
            sum += &ba * gg * &f[j - 1];
            ba = ba * p.b(j) * p.a(j + 1);
        }
        let v = div(sum, &f[i], "f_{i+1}")?;
        out.push(if i % 2 == 0 { v } else { -v });
    }
    Ok(out)
}

/// A state together with the parameters (in particular the time) it lives at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub params: Params,
    pub state: StateFG,
}

impl Snapshot {
    pub fn new(params: Params, state: StateFG) -> Self {
        Snapshot { params, state }
    }

    pub fn sample(n: usize, seed: u64, opts: &SampleOptions) -> Result<Snapshot> {
        let (params, state) = sample_state(n, seed, opts)?;
        Ok(Snapshot { params, state })
    }

    pub fn forward(&self) -> Result<Snapshot> {
        let (state, params) = forward_step(&self.state, &self.params)?;
        Ok(Snapshot { params, state })
    }

    pub fn backward(&self) -> Result<Snapshot> {
        let (state, params) = backward_step(&self.state, &self.params)?;
        Ok(Snapshot { params, state })
    }

    pub fn frame(&self) -> Result<XYFrame> {
        fg_to_xy(&self.state, &self.params)
    }

    pub fn max_bits(&self) -> u64 {
        self.state.max_bits().max(self.params.max_bits())
    }
}

/// Result of iterating [`forward_step`].
#[derive(Clone, Debug)]
pub struct Orbit {
    /// Snapshots at `t, qt, q^2 t, ...`; the first is the initial one.
    pub snapshots: Vec<Snapshot>,
    /// Step index (1-based) and error at which iteration stopped early.
    pub stopped: Option<(usize, Error)>,
}

/// Iterates `steps` forward steps, stopping at the first singular step or
/// once a coefficient exceeds `max_bits`.
pub fn run_orbit(start: Snapshot, steps: usize, max_bits: u64) -> Orbit {
    let mut snapshots = vec![start];
    for k in 1..=steps {
        let next = snapshots[k - 1].forward().and_then(|s| {
            let bits = s.max_bits();
            if bits > max_bits {
                Err(Error::SizeLimit { bits, limit: max_bits })
            } else {
                Ok(s)
            }
        });
        match next {
            Ok(s) => snapshots.push(s),
            Err(e) => {
                return Orbit {
                    snapshots,
                    stopped: Some((k, e)),
                }
            }
        }
    }
    Orbit {
        snapshots,
        stopped: None,
    }
}

/// Coefficients `alpha_1..alpha_4`, `beta_1..beta_4` of q-PVI.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qp6Coefficients {
    pub alpha: [Scalar; 4],
    pub beta: [Scalar; 4],
}

impl Qp6Coefficients {
    /// The list as usually displayed: `beta_3 = 1/(q a_2)`, `beta_4 = 1/b_2`.
    pub fn displayed(p: &Params) -> Self {
        let (s, q) = (p.s(), p.q());
        let (a1, a2, b1, b2) = (p.a(1), p.a(2), p.b(1), p.b(2));
        Qp6Coefficients {
            alpha: [
                Scalar::one(),
                s * a1 * &b1,
                Scalar::one(),
                (s * a2 * &b2).inv().expect("nonzero"),
            ],
            beta: [s * &b1, s * a1, (q * a2).inv().expect("nonzero"), b2.inv().expect("nonzero")],
        }
    }

    /// The list the orbit data satisfies: `beta_3 = 1/(q b_2)`, `beta_4 = 1/a_2`.
    pub fn frozen(p: &Params) -> Self {
        let mut c = Self::displayed(p);
        c.beta[2] = (p.q() * p.b(2)).inv().expect("nonzero");
        c.beta[3] = p.a(2).inv().expect("nonzero");
        c
    }
}

/// Which time enters `(g_bar - t beta_i)` and `(f - t alpha_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimePlacement {
    Current,
    Shifted,
}

/// Constant in the factor `(c + x̲_1 y_2)` of the q-PVI `g` variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GFactor {
    /// `c = t/q`; what the orbit data satisfies.
    TOverQ,
    /// `c = qt`, as usually displayed.
    QT,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qp6Convention {
    pub coefficients: Qp6Coefficients,
    pub time: TimePlacement,
    pub g_factor: GFactor,
}

impl Qp6Convention {
    /// Frozen convention: corrected `g` factor and `beta_3, beta_4`, current time.
    pub fn frozen(p: &Params) -> Self {
        Qp6Convention {
            coefficients: Qp6Coefficients::frozen(p),
            time: TimePlacement::Current,
            g_factor: GFactor::TOverQ,
        }
    }

    pub fn displayed(p: &Params, time: TimePlacement) -> Self {
        Qp6Convention {
            coefficients: Qp6Coefficients::displayed(p),
            time,
            g_factor: GFactor::QT,
        }
    }
}

/// The q-PVI variables `(f, g)` built from an `n = 1` frame.
pub fn qp6_variables(frame: &XYFrame, p: &Params, g_factor: GFactor) -> Result<(Scalar, Scalar)> {
    if p.n() != 1 {
        return Err(Error::WrongOrder { n: p.n() });
    }
    let (t, q, s) = (p.t(), p.q(), p.s());
    let (a1, a2, b1) = (p.a(1), p.a(2), p.b(1));
    let (x1, x2) = (&frame.x[0], &frame.x[1]);
    let (xl1, xl2) = (&frame.xprev[0], &frame.xprev[1]);
    let (y1, y2) = (&frame.y[0], &frame.y[1]);
    let y0 = frame.y_at(0, p);
    let one = Scalar::one();
    let dx = x1 - x2;
    let xi1 = &dx * (&y0 - y1) - (a1 - &b1);
    let xi2 = (t * x2 - x1) * &dx * (&y0 - y1) + (a1 - &b1) * x1 + ((&b1 - a2) * t - (a1 - a2)) * x2;
    let sab = s - a1 * &b1 * t;
    let psi1 = s * &sab * xl2 * y2 + (&one - s * a1 * &b1) * t;
    let psi2 = s * a2 * &sab * xl1 * xl2 * y2 + a1 * (&one - s * &b1 * a2) * t * xl1 - (a1 - a2) * t * xl2;
    let c = match g_factor {
        GFactor::TOverQ => t / q,
        GFactor::QT => q * t,
    };
    let f = div(t * (x2 - x1) * xi1, &xi2, "xi_2")?;
    let g = div(xl2 * (c + xl1 * y2) * psi1, &((&one + xl2 * y2) * psi2), "(1 + x̲_2 y_2) psi_2")?;
    Ok((f, g))
}

/// The two q-PVI residuals on a pair of consecutive snapshots.
pub fn qp6_residual_with(cur: &Snapshot, next: &Snapshot, conv: &Qp6Convention) -> Result<(Scalar, Scalar)> {
    let p = &cur.params;
    if p.n() != 1 {
        return Err(Error::WrongOrder { n: p.n() });
    }
    let (f, g) = qp6_variables(&cur.frame()?, p, conv.g_factor)?;
    let (fb, gb) = qp6_variables(&next.frame()?, &next.params, conv.g_factor)?;
    Ok(qp6_residual_values(&f, &g, &fb, &gb, cur, next, conv))
}

/// Residuals for given variable values; exposed so that tests can perturb them.
pub fn qp6_residual_values(
    f: &Scalar,
    g: &Scalar,
    fb: &Scalar,
    gb: &Scalar,
    cur: &Snapshot,
    next: &Snapshot,
    conv: &Qp6Convention,
) -> (Scalar, Scalar) {
    let tt = match conv.time {
        TimePlacement::Current => cur.params.t(),
        TimePlacement::Shifted => next.params.t(),
    };
    let [a1, a2, a3, a4] = &conv.coefficients.alpha;
    let [b1, b2, b3, b4] = &conv.coefficients.beta;
    let r1 = f * fb * (gb - b3) * (gb - b4) - a3 * a4 * (gb - tt * b1) * (gb - tt * b2);
    let r2 = g * gb * (f - a3) * (f - a4) - b3 * b4 * (f - tt * a1) * (f - tt * a2);
    (r1, r2)
}

/// Residuals under the frozen convention.
pub fn qp6_residual(cur: &Snapshot, next: &Snapshot) -> Result<(Scalar, Scalar)> {
    qp6_residual_with(cur, next, &Qp6Convention::frozen(&cur.params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::xy_to_fg;
    use crate::model::{check_state, rng_for, sample_frame, sample_params, DEFAULT_SAMPLE_BOUND};
    use crate::scalar::sc;

    fn snapshot(n: usize, seed: u64) -> Snapshot {
        let p = sample_params(n, seed).unwrap();
        let mut rng = rng_for(seed, 1);
        let fr = sample_frame(&p, &mut rng, DEFAULT_SAMPLE_BOUND).unwrap();
        let st = xy_to_fg(&fr, &p).unwrap();
        Snapshot::new(p, st)
    }

    fn params_n1(t: Scalar) -> Params {
        // Valid w: w^2 = q a1 b1 a2 b2 with u = 2 (q = 16), a = (1, 1), b = (1, 4) gives w = 8.
        Params::new(1, sc(2, 1), t, vec![sc(1, 1), sc(1, 1)], vec![sc(1, 1), sc(4, 1)], sc(8, 1)).unwrap()
    }

    #[test]
    fn aux_small_examples() {
        let p = params_n1(sc(2, 1));
        let st = StateFG::new(vec![sc(1, 1)], vec![sc(3, 1)], sc(1, 1));
        let aux = eval_aux(&st, &p).unwrap();
        assert_eq!(aux.big_f, vec![sc(4, 1), sc(3, 1)]);
        // G_1 = f_1 + s t b_1 a_2, G_2 = s t + q t b_2 a_1 f_1
        let (s, q, t) = (p.s(), p.q(), p.t());
        assert_eq!(aux.big_g[0], sc(1, 1) + s * t * p.b(1) * p.a(2));
        assert_eq!(aux.big_g[1], s * t + q * t * p.b(2) * p.a(1));
        let degenerate = StateFG::new(vec![Scalar::zero(); 3], vec![sc(1, 1); 3], sc(1, 1));
        assert_eq!(eval_f_aux(&degenerate.f, &sc(7, 3)), vec![sc(7, 3); 4]);
    }

    /// Straight transcription of the triple sum defining `G_i`.
    fn g_aux_direct(st: &StateFG, p: &Params) -> Vec<Scalar> {
        let n = p.n();
        let (f, g, t) = (&st.f, &st.g, p.t());
        let ba = |k: usize| p.b(k) * p.a(k + 1);
        let prod_ba = |lo: usize, hi: usize| (lo..hi).map(ba).product::<Scalar>();
        let gratio = |j: usize| {
            let up: Scalar = (j + 1..=n).map(|l| g[l - 1].clone()).product();
            let down: Scalar = (1..j).map(|l| g[l - 1].clone()).product();
            up / down
        };
        (1..=n + 1)
            .map(|i| {
                let s1: Scalar = (i..=n).map(|j| prod_ba(i, j) * gratio(j) * &f[j - 1]).sum();
                let s2 = p.q_half_pow(n as i64) * t * prod_ba(i, n + 1);
                let s3: Scalar = (1..i)
                    .map(|j| p.b(n + 1) * p.a(1) * prod_ba(1, n + 1) / prod_ba(j, i) * gratio(j) * &f[j - 1])
                    .sum();
                s1 + s2 + p.q().powu(n as u32) * t * s3
            })
            .collect()
    }

    #[test]
    fn aux_matches_direct_sum() {
        for n in 1..=5 {
            for seed in 0..5 {
                let s = snapshot(n, seed);
                let aux = eval_aux(&s.state, &s.params).unwrap();
                assert_eq!(aux.big_g, g_aux_direct(&s.state, &s.params), "n={n}");
            }
        }
    }

    /// Straight-line forward map for n = 1 written from the three update equations.
    #[test]
    fn forward_n1_direct_substitution() {
        let s = snapshot(1, 3);
        let (p, st) = (&s.params, &s.state);
        let (q, t, sq) = (p.q(), p.t(), p.s());
        let (a1, a2, b1, b2) = (p.a(1), p.a(2), p.b(1), p.b(2));
        let (f1, g1, h) = (&st.f[0], &st.g[0], &st.h);
        let big_f1 = t * f1 + t;
        let big_f2 = f1 + t;
        let big_g1 = f1 + sq * t * &b1 * a2;
        let big_g2 = sq * t + q * t * &b2 * a1 * f1;
        let gb1 = &big_f2 * &big_g1 / (g1 * &big_f1 * &big_g2);
        let gb0 = Scalar::one() / (sq * t * &gb1);
        let b0 = q * &b2;
        let fb1 = q * t * &big_f1 * &big_f2 * &gb0 * (&b1 - &gb1) * (&gb1 - a2)
            / (f1 * &big_f2 * &big_f1 * &gb1 * (&b0 - &gb0) * (&gb0 - a1));
        let one = Scalar::one();
        let hb = -(&big_f2 * &big_f1 * (&b0 - &gb0) * (&gb0 - a1) * h) / (t * (t - &one) * (t - &one) * &gb0);
        let (out, np) = forward_step(st, p).unwrap();
        assert_eq!(out, StateFG::new(vec![fb1], vec![gb1], hb));
        assert_eq!(np.t(), &(q * t));
    }

    #[test]
    fn forward_g0_forms_agree() {
        for n in 1..=4 {
            let s = snapshot(n, 8).forward().unwrap();
            let prod: Scalar = s.state.g.iter().product();
            let t_prev = s.params.t() / s.params.q();
            let g0_pre = Scalar::one() / (s.params.q_half_pow(n as i64) * t_prev * &prod);
            assert_eq!(s.state.g0(&s.params).unwrap(), g0_pre);
        }
    }

    #[test]
    fn short_orbit_stays_valid() {
        let orbit = run_orbit(snapshot(1, 3), 5, u64::MAX);
        assert!(orbit.stopped.is_none());
        for s in &orbit.snapshots {
            assert!(check_state(&s.state, &s.params).passed);
        }
    }

    #[test]
    fn orbit_size_limit() {
        let orbit = run_orbit(snapshot(2, 1), 8, 64);
        assert!(matches!(orbit.stopped, Some((_, Error::SizeLimit { .. }))));
    }

    #[test]
    fn new_h_matches_recovered_frame() {
        for n in 1..=3 {
            let s = snapshot(n, 4).forward().unwrap();
            let fr = s.frame().unwrap();
            assert_eq!(s.state.h, s.params.t() * &fr.x[n] - &fr.x[0]);
        }
    }

    #[test]
    fn backward_inverts_forward() {
        for n in 1..=3 {
            for seed in 0..6 {
                let s = snapshot(n, seed);
                let next = s.forward().unwrap();
                let cands = backward_candidates(&next.state, &next.params).unwrap();
                assert_eq!(cands.iter().filter(|c| c.round_trip && c.product_relation).count(), 1);
                assert_eq!(next.backward().unwrap(), s, "n={n} seed={seed}");
            }
        }
    }

    /// For n = 1 the linear system has two lines; eliminating g̲_0 by hand
    /// gives g̲_1 directly from the product relation.
    #[test]
    fn backward_n1_direct_elimination() {
        let s = snapshot(1, 12);
        let next = s.forward().unwrap();
        let (prev, _) = backward_step(&next.state, &next.params).unwrap();
        let tau = s.params.t();
        // product relation at time tau: g̲_0 = s / (tau g̲_1)
        let g0_prev = s.params.s() / (tau * &prev.g[0]);
        assert_eq!(prev.g0(&s.params).unwrap(), g0_prev);
        assert_eq!(prev.g, s.state.g);
    }

    #[test]
    fn determinant_examples() {
        let s = snapshot(2, 2);
        let (p, st) = (&s.params, &s.state);
        let closed = tridiag_det_closed(st, p).unwrap();
        let (f, g) = (&st.f, &st.g);
        let hand = Scalar::one() + p.q() * p.b(3) * p.a(1) * (&g[1] * &f[0] + p.b(1) * p.a(2) * &f[1] / &g[0]);
        assert_eq!(closed, hand);
        let (alpha, beta) = tridiag_coefficients(st, p).unwrap();
        assert_eq!(tridiag_det_bruteforce(st, p).unwrap(), Scalar::one() + &alpha[0] * &beta[1]);
        let zero_f = StateFG::new(vec![Scalar::zero(); 2], g.clone(), st.h.clone());
        assert_eq!(tridiag_det_closed(&zero_f, p).unwrap(), Scalar::one());
        assert!(tridiag_det_closed(&snapshot(1, 0).state, &snapshot(1, 0).params).is_err());
    }

    #[test]
    fn determinant_lemma_and_minors() {
        for n in 2..=6 {
            for seed in 0..5 {
                let s = snapshot(n, seed);
                assert_eq!(
                    tridiag_det_closed(&s.state, &s.params).unwrap(),
                    tridiag_det_bruteforce(&s.state, &s.params).unwrap()
                );
                assert_eq!(
                    delta_recurrence(&s.state, &s.params).unwrap(),
                    delta_closed(&s.state, &s.params).unwrap()
                );
            }
        }
    }

    #[test]
    fn qp6_frozen_convention_vanishes() {
        for seed in 0..4 {
            let orbit = run_orbit(snapshot(1, seed), 3, u64::MAX);
            for w in orbit.snapshots.windows(2) {
                let (r1, r2) = qp6_residual(&w[0], &w[1]).unwrap();
                assert!(r1.is_zero() && r2.is_zero(), "seed={seed}");
            }
        }
    }

    #[test]
    fn qp6_displayed_form_is_refuted() {
        let s = snapshot(1, 5);
        let next = s.forward().unwrap();
        for time in [TimePlacement::Current, TimePlacement::Shifted] {
            let (r1, r2) = qp6_residual_with(&s, &next, &Qp6Convention::displayed(&s.params, time)).unwrap();
            assert!(!(r1.is_zero() && r2.is_zero()));
        }
    }

    #[test]
    fn qp6_perturbation_detected() {
        let s = snapshot(1, 6);
        let next = s.forward().unwrap();
        let conv = Qp6Convention::frozen(&s.params);
        let (f, g) = qp6_variables(&s.frame().unwrap(), &s.params, conv.g_factor).unwrap();
        let (fb, gb) = qp6_variables(&next.frame().unwrap(), &next.params, conv.g_factor).unwrap();
        let (r1, r2) = qp6_residual_values(&f, &(&g + Scalar::one()), &fb, &gb, &s, &next, &conv);
        assert!(r1.is_zero());
        assert!(!r2.is_zero());
        assert_eq!(qp6_residual(&snapshot(2, 0), &snapshot(2, 1)), Err(Error::WrongOrder { n: 2 }));
    }
}
