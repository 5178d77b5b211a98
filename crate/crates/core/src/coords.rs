//! Birational dictionary between `(x, x̲, y)` frames and `(f, g, h)` states.

use crate::error::{Error, Result};
use crate::dynamics::eval_f_aux;
use crate::model::{Checker, Params, StateFG, StateReport, XYFrame};
use crate::scalar::Scalar;

fn degenerate_frame(what: impl Into<String>) -> Error {
    Error::DegenerateFrame { quantity: what.into() }
}

fn degenerate_state(what: impl Into<String>) -> Error {
    Error::DegenerateState { quantity: what.into() }
}

/// `f_i = t (x_i - x_{i+1}) / h`, `g_i = a_{i+1} x̲_{i+1} (1 + x̲_i y_i) / (x̲_i (1 + x̲_{i+1} y_i))`,
/// `h = t x_{n+1} - x_1`.
pub fn xy_to_fg(frame: &XYFrame, p: &Params) -> Result<StateFG> {
    let n = p.n();
    let t = p.t();
    let (x, xl, y) = (&frame.x, &frame.xprev, &frame.y);
    let h = t * &x[n] - &x[0];
    if h.is_zero() {
        return Err(degenerate_frame("h = t x_{n+1} - x_1"));
    }
    let f = (0..n).map(|i| t * (&x[i] - &x[i + 1]) / &h).collect();
    let g = (0..n)
        .map(|i| {
            let num = p.a(i + 2) * &xl[i + 1] * (Scalar::one() + &xl[i] * &y[i]);
            let den = &xl[i] * (Scalar::one() + &xl[i + 1] * &y[i]);
            num.checked_div(&den)
                .map_err(|_| degenerate_frame(format!("denominator of g_{}", i + 1)))
        })
        .collect::<Result<_>>()?;
    Ok(StateFG { f, g, h })
}

/// Inverse of [`xy_to_fg`]: reconstructs `x̲` from the `g`-residues, then
/// `y_1..y_n` from the definition of `g`, `y_{n+1}` from that of `g_0`, and
/// `x` by summing the `f`-differences.
pub fn fg_to_xy(state: &StateFG, p: &Params) -> Result<XYFrame> {
    let n = p.n();
    let (q, t) = (p.q(), p.t());
    let (f, g, h) = (&state.f, &state.g, &state.h);
    if f.len() != n || g.len() != n {
        return Err(degenerate_state("state length"));
    }
    let g0 = state.g0(p)?;
    let q_minus_t = q - t;
    if q_minus_t.is_zero() {
        return Err(degenerate_state("q - t"));
    }
    let hg0 = &g0 * h;
    let term0 = ((p.b(0) - &g0) * (&g0 - p.a(1)))
        .checked_div(&hg0)
        .map_err(|_| degenerate_state("g_0 h"))?;
    let terms = (1..=n)
        .map(|j| {
            let num = t * (p.b(j) - &g[j - 1]) * (&g[j - 1] - p.a(j + 1));
            num.checked_div(&(&f[j - 1] * &g[j - 1] * h))
                .map_err(|_| degenerate_state(format!("f_{j} g_{j} h")))
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = t / &q_minus_t;
    let hi = q / &q_minus_t;
    // 1/x̲_i = lo (term_0 + sum_{j<i} term_j) + hi sum_{j>=i} term_j
    let mut below = term0;
    let mut above: Scalar = terms.iter().sum();
    let mut xprev = Vec::with_capacity(n + 1);
    for i in 1..=n + 1 {
        let inv = &lo * &below + &hi * &above;
        xprev.push(inv.inv().map_err(|_| degenerate_state(format!("1/x̲_{i}")))?);
        if i <= n {
            below += &terms[i - 1];
            above -= &terms[i - 1];
        }
    }
    let mut y = Vec::with_capacity(n + 1);
    for i in 1..=n {
        let gi = &g[i - 1];
        let ai1 = p.a(i + 1);
        let num = gi / &xprev[i] - ai1 / &xprev[i - 1];
        y.push(-num.checked_div(&(gi - ai1)).map_err(|_| degenerate_state(format!("g_{i} - a_{}", i + 1)))?);
    }
    let xl0 = t * &xprev[n] / q;
    let a1 = p.a(1);
    let y0_num = &xl0 * &g0 - a1 * &xprev[0];
    let y0 = -y0_num
        .checked_div(&(&xl0 * &xprev[0] * (&g0 - a1)))
        .map_err(|_| degenerate_state("g_0 - a_1"))?;
    y.push(t * y0 / q);
    // t x_{n+1} - x_1 = h and x_1 - x_{n+1} = sum f_i h / t.
    let steps: Vec<Scalar> = f.iter().map(|fi| fi * h / t).collect();
    let last = (h + steps.iter().sum::<Scalar>())
        .checked_div(&(t - Scalar::one()))
        .map_err(|_| Error::LinearSolveSingular)?;
    let mut x = vec![Scalar::zero(); n + 1];
    x[n] = last;
    for i in (0..n).rev() {
        x[i] = &x[i + 1] + &steps[i];
    }
    Ok(XYFrame { x, xprev, y })
}

/// The differences `y_{i-1} - y_i` for `i = 1..=n+1` expressed through
/// `(f, g, h)` alone.
pub fn y_differences(state: &StateFG, p: &Params) -> Result<Vec<Scalar>> {
    let n = p.n();
    let (q, t) = (p.q(), p.t());
    let (f, g, h) = (&state.f, &state.g, &state.h);
    let g0 = state.g0(p)?;
    let one = Scalar::one();
    let div = |num: Scalar, den: Scalar, what: &str| num.checked_div(&den).map_err(|_| degenerate_state(what));
    let qb = q * p.b(n + 1);
    let mut out = Vec::with_capacity(n + 1);
    let first = div(t * (&g[0] - p.b(1)), &f[0] * h, "f_1 h")?
        + div(p.a(1) * (div(qb.clone(), g0.clone(), "g_0")? - &one), h.clone(), "h")?;
    out.push(first);
    for i in 2..=n {
        let a = div(t * (&g[i - 1] - p.b(i)), &f[i - 1] * h, "f_i h")?;
        let b = div(
            p.a(i) * t * (div(p.b(i - 1), g[i - 2].clone(), "g_{i-1}")? - &one),
            &f[i - 2] * h,
            "f_{i-1} h",
        )?;
        out.push(a + b);
    }
    let last = div(t * (&g0 - &qb), q * h, "q h")?
        + div(
            p.a(n + 1) * t * (div(p.b(n), g[n - 1].clone(), "g_n")? - &one),
            &f[n - 1] * h,
            "f_n h",
        )?;
    out.push(last);
    Ok(out)
}

/// Identities tying a frame to its `(f, g, h)` image, for `i = 0..=n`:
/// `g_i - a_{i+1} = -a_{i+1} (x̲_i - x̲_{i+1}) / (x̲_i (1 + x̲_{i+1} y_i))`,
/// `b_i - g_i = (1 + x̲_i y_i)(x_i - x_{i+1}) / x̲_i`, their product form
/// `(b_i - g_i)(g_i - a_{i+1})/g_i = -(x̲_i - x̲_{i+1})(x_i - x_{i+1})/(x̲_i x̲_{i+1})`,
/// and `F_i = t (t - 1) x_i / h` for `i = 1..=n+1`.
pub fn dictionary_identities(frame: &XYFrame, state: &StateFG, p: &Params) -> StateReport {
    let mut c = Checker::new();
    let n = p.n();
    let g0 = match state.g0(p) {
        Ok(g0) => g0,
        Err(e) => {
            c.fail(e.to_string());
            return c.finish();
        }
    };
    let g = |i: usize| if i == 0 { g0.clone() } else { state.g[i - 1].clone() };
    let one = Scalar::one();
    for i in 0..=n {
        let (xl, xl1) = (frame.xprev_at(i, p), frame.xprev_at(i + 1, p));
        let (x, x1) = (frame.x_at(i, p), frame.x_at(i + 1, p));
        let y = frame.y_at(i, p);
        let gi = g(i);
        let a = p.a(i + 1);
        let b = p.b(i);
        let d_a = &xl * (&one + &xl1 * &y);
        let d_ab = &xl * &xl1;
        if d_a.is_zero() || d_ab.is_zero() || gi.is_zero() {
            c.fail(format!("vanishing denominator at i = {i}"));
            continue;
        }
        c.zero(
            || format!("g_{i} - a_{} identity", i + 1),
            &gi - a + a * (&xl - &xl1) / &d_a,
        );
        c.zero(
            || format!("b_{i} - g_{i} identity"),
            &b - &gi - (&one + &xl * &y) * (&x - &x1) / &xl,
        );
        c.zero(
            || format!("product identity at i = {i}"),
            (&b - &gi) * (&gi - a) / &gi + (&xl - &xl1) * (&x - &x1) / &d_ab,
        );
    }
    let t = p.t();
    let big_f = eval_f_aux(&state.f, t);
    for i in 1..=n + 1 {
        c.zero(
            || format!("F_{i} - t (t - 1) x_{i} / h"),
            &big_f[i - 1] * &state.h - t * (t - &one) * &frame.x[i - 1],
        );
    }
    c.finish()
}
