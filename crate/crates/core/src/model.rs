//! Parameters and the two state representations.
//!
//! Every fractional power of `q` that the formulas need is made rational by
//! construction: `q = u^{2(n+1)}`, so `q^{1/2} = s = u^{n+1}` and
//! `q^{1/(n+1)} = u^2`, and the stored `w` satisfies
//! `w^{n+1} = q^n a_1 b_1 ... a_{n+1} b_{n+1}`, i.e. `w = q^{rho_1}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default bound on numerators/denominators of sampled rationals.
pub const DEFAULT_SAMPLE_BOUND: i64 = 50;
const MAX_SAMPLE_ATTEMPTS: usize = 256;

/// Exponents `m` used for `t = q^m` in the q-power regime. They keep `t`,
/// `qt`, `t/q`, `q^2/t` and `q/t` away from `{1, q}`.
pub const Q_POWER_EXPONENTS: [i64; 4] = [-3, -2, 3, 4];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParamsDoc", into = "ParamsDoc")]
pub struct Params {
    n: usize,
    u: Scalar,
    t: Scalar,
    a: Vec<Scalar>,
    b: Vec<Scalar>,
    w: Scalar,
    s: Scalar,
    q: Scalar,
}

/// Wire form of [`Params`]; derived powers are not serialized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub n: usize,
    pub u: Scalar,
    pub t: Scalar,
    pub a: Vec<Scalar>,
    pub b: Vec<Scalar>,
    pub w: Scalar,
}

impl TryFrom<ParamsDoc> for Params {
    type Error = Error;
    fn try_from(d: ParamsDoc) -> Result<Self> {
        Params::new(d.n, d.u, d.t, d.a, d.b, d.w)
    }
}

impl From<Params> for ParamsDoc {
    fn from(p: Params) -> Self {
        ParamsDoc {
            n: p.n,
            u: p.u,
            t: p.t,
            a: p.a,
            b: p.b,
            w: p.w,
        }
    }
}

impl Params {
    /// Structural validation only (lengths, nonzero entries, `q != 1`);
    /// [`check_params`] evaluates the full invariant list.
    pub fn new(n: usize, u: Scalar, t: Scalar, a: Vec<Scalar>, b: Vec<Scalar>, w: Scalar) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if a.len() != n + 1 || b.len() != n + 1 {
            return Err(Error::InvalidParams(format!(
                "expected {} values in a and b, got {} and {}",
                n + 1,
                a.len(),
                b.len()
            )));
        }
        if u.is_zero() || w.is_zero() || t.is_zero() {
            return Err(Error::InvalidParams("u, w and t must be nonzero".into()));
        }
        if a.iter().chain(&b).any(Scalar::is_zero) {
            return Err(Error::InvalidParams("a_i and b_i must be nonzero".into()));
        }
        let s = u.powu((n + 1) as u32);
        let q = &s * &s;
        if q.is_one() {
            return Err(Error::InvalidParams("q must differ from 1".into()));
        }
        Ok(Params { n, u, t, a, b, w, s, q })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn u(&self) -> &Scalar {
        &self.u
    }
    /// `q^{1/2}`.
    pub fn s(&self) -> &Scalar {
        &self.s
    }
    pub fn q(&self) -> &Scalar {
        &self.q
    }
    pub fn t(&self) -> &Scalar {
        &self.t
    }
    /// `q^{rho_1}`.
    pub fn w(&self) -> &Scalar {
        &self.w
    }
    pub fn a_values(&self) -> &[Scalar] {
        &self.a
    }
    pub fn b_values(&self) -> &[Scalar] {
        &self.b
    }

    /// `a_i` for `i` in `1..=n+1`.
    pub fn a(&self, i: usize) -> &Scalar {
        &self.a[i - 1]
    }

    /// `b_i` for `i` in `1..=n+1`; `b_0 = q b_{n+1}`.
    pub fn b(&self, i: usize) -> Scalar {
        if i == 0 {
            &self.q * &self.b[self.n]
        } else {
            self.b[i - 1].clone()
        }
    }

    /// `q^{k/2}`.
    pub fn q_half_pow(&self, k: i64) -> Scalar {
        self.s.pow_int(k).expect("s is nonzero")
    }

    /// `q^{1/(n+1)} = u^2`.
    pub fn q_root(&self) -> Scalar {
        &self.u * &self.u
    }

    pub fn with_t(&self, t: Scalar) -> Params {
        Params { t, ..self.clone() }
    }

    /// Replaces parameters keeping `n` and `u`; used by the symmetry actions.
    pub fn with_ab(&self, a: Vec<Scalar>, b: Vec<Scalar>, w: Scalar, t: Scalar) -> Result<Params> {
        Params::new(self.n, self.u.clone(), t, a, b, w)
    }

    /// `w^{n+1} = q^n prod a_i b_i`.
    pub fn w_invariant_holds(&self) -> bool {
        self.w.powu((self.n + 1) as u32) == self.rho_product()
    }

    fn rho_product(&self) -> Scalar {
        self.q.powu(self.n as u32) * self.a.iter().chain(&self.b).product::<Scalar>()
    }

    /// `m` with `t = q^m`, when it exists.
    pub fn t_exponent(&self) -> Option<i64> {
        q_log(&self.t, &self.q)
    }

    /// `t^{rho_1} = w^m` in the regime `t = q^m`.
    pub fn t_pow_rho1(&self) -> Option<Scalar> {
        self.t_exponent().map(|m| self.w.pow_int(m).expect("w is nonzero"))
    }

    pub fn max_bits(&self) -> u64 {
        self.a
            .iter()
            .chain(&self.b)
            .chain([&self.t, &self.w, &self.q])
            .map(Scalar::bits)
            .max()
            .unwrap_or(0)
    }
}

/// Exact `log_q(x)` when `x` is an integer power of `q`.
pub fn q_log(x: &Scalar, q: &Scalar) -> Option<i64> {
    if x.is_one() {
        return Some(0);
    }
    if q.is_zero() || q.abs().is_one() {
        return None;
    }
    // |q^m| grows (or shrinks) monotonically, so stop once the bit size passes x's.
    let limit = x.bits() + 1;
    for (base, sign) in [(q.clone(), 1i64), (q.inv().ok()?, -1)] {
        let mut acc = base.clone();
        let mut m = 1i64;
        while acc.bits() <= limit {
            if &acc == x {
                return Some(sign * m);
            }
            acc *= &base;
            m += 1;
        }
    }
    None
}

/// The dependent variables `f_1..f_n`, `g_1..g_n`, `h` of the 2n-th order system.
/// `f_0 = t` and `g_0` are derived, never stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFG {
    pub f: Vec<Scalar>,
    pub g: Vec<Scalar>,
    pub h: Scalar,
}

impl StateFG {
    pub fn new(f: Vec<Scalar>, g: Vec<Scalar>, h: Scalar) -> Self {
        StateFG { f, g, h }
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// `f_i` for `i` in `0..=n`, with `f_0 = t`.
    pub fn f_at(&self, i: usize, p: &Params) -> Scalar {
        if i == 0 {
            p.t().clone()
        } else {
            self.f[i - 1].clone()
        }
    }

    /// `g_0 = q^{-(n-2)/2} / (t g_1 ... g_n)`.
    pub fn g0(&self, p: &Params) -> Result<Scalar> {
        let denom = p.q_half_pow(p.n() as i64 - 2) * p.t() * self.g.iter().product::<Scalar>();
        denom.inv().map_err(|_| Error::DegenerateState {
            quantity: "g_0 denominator".into(),
        })
    }

    /// `g_i` for `i` in `0..=n`.
    pub fn g_at(&self, i: usize, p: &Params) -> Result<Scalar> {
        if i == 0 {
            self.g0(p)
        } else {
            Ok(self.g[i - 1].clone())
        }
    }

    pub fn max_bits(&self) -> u64 {
        self.f
            .iter()
            .chain(&self.g)
            .chain([&self.h])
            .map(Scalar::bits)
            .max()
            .unwrap_or(0)
    }
}

/// `(x, x_prev, y)` coordinates at time `t`; `x_prev` is the layer at `t/q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XYFrame {
    pub x: Vec<Scalar>,
    pub xprev: Vec<Scalar>,
    pub y: Vec<Scalar>,
}

impl XYFrame {
    pub fn n(&self) -> usize {
        self.x.len() - 1
    }

    /// `x_i` for `i` in `0..=n+1`, with `x_0 = t x_{n+1}`.
    pub fn x_at(&self, i: usize, p: &Params) -> Scalar {
        if i == 0 {
            p.t() * &self.x[p.n()]
        } else {
            self.x[i - 1].clone()
        }
    }

    /// Lower layer with `x_prev_0 = (t/q) x_prev_{n+1}`.
    pub fn xprev_at(&self, i: usize, p: &Params) -> Scalar {
        if i == 0 {
            p.t() * &self.xprev[p.n()] / p.q()
        } else {
            self.xprev[i - 1].clone()
        }
    }

    /// `y_i` with `y_0 = (q/t) y_{n+1}`.
    pub fn y_at(&self, i: usize, p: &Params) -> Scalar {
        if i == 0 {
            p.q() * &self.y[p.n()] / p.t()
        } else {
            self.y[i - 1].clone()
        }
    }

    /// Builds the frame whose `x` layer solves the first q-P equation
    /// `x_{i-1} - x_i = b_{i-1} x̲_{i-1}/(1 + x̲_{i-1} y_{i-1}) - a_i x̲_i/(1 + x̲_i y_{i-1})`
    /// for the given lower layer and `y`.
    pub fn from_lower_layer(p: &Params, xprev: Vec<Scalar>, y: Vec<Scalar>) -> Result<XYFrame> {
        let n = p.n();
        if xprev.len() != n + 1 || y.len() != n + 1 {
            return Err(Error::DegenerateFrame {
                quantity: "layer length".into(),
            });
        }
        let mut frame = XYFrame {
            x: vec![Scalar::zero(); n + 1],
            xprev,
            y,
        };
        let diffs = (1..=n + 1)
            .map(|i| first_equation_rhs(&frame, p, i))
            .collect::<Result<Vec<_>>>()?;
        // x_0 - x_{n+1} = (t - 1) x_{n+1} is the sum of all differences.
        let t_minus_one = p.t() - Scalar::one();
        let total: Scalar = diffs.iter().sum();
        let last = total.checked_div(&t_minus_one).map_err(|_| Error::LinearSolveSingular)?;
        let mut cur = p.t() * &last;
        for (i, d) in diffs.iter().enumerate() {
            cur -= d;
            frame.x[i] = cur.clone();
        }
        debug_assert_eq!(frame.x[n], last);
        Ok(frame)
    }

    pub fn max_bits(&self) -> u64 {
        self.x
            .iter()
            .chain(&self.xprev)
            .chain(&self.y)
            .map(Scalar::bits)
            .max()
            .unwrap_or(0)
    }
}

/// Right-hand side of the first q-P equation for index `i` in `1..=n+1`.
pub(crate) fn first_equation_rhs(frame: &XYFrame, p: &Params, i: usize) -> Result<Scalar> {
    let xl_prev = frame.xprev_at(i - 1, p);
    let xl = frame.xprev_at(i, p);
    let y_prev = frame.y_at(i - 1, p);
    let d1 = Scalar::one() + &xl_prev * &y_prev;
    let d2 = Scalar::one() + &xl * &y_prev;
    let degenerate = |k: usize, j: usize| Error::DegenerateFrame {
        quantity: format!("1 + x̲_{k} y_{j}"),
    };
    let t1 = (p.b(i - 1) * &xl_prev).checked_div(&d1).map_err(|_| degenerate(i - 1, i - 1))?;
    let t2 = (p.a(i) * &xl).checked_div(&d2).map_err(|_| degenerate(i, i - 1))?;
    Ok(t1 - t2)
}

/// Product `prod a_i (1 + x̲_i y_i)/(1 + x̲_i y_{i-1})`; equals `q^{-n/2}` on valid frames.
pub(crate) fn constraint_product(frame: &XYFrame, p: &Params) -> Result<Scalar> {
    let mut acc = Scalar::one();
    for i in 1..=p.n() + 1 {
        let xl = frame.xprev_at(i, p);
        let num = Scalar::one() + &xl * &frame.y_at(i, p);
        let den = Scalar::one() + &xl * &frame.y_at(i - 1, p);
        acc = acc * p.a(i) * num;
        acc = acc.checked_div(&den).map_err(|_| Error::DegenerateFrame {
            quantity: format!("1 + x̲_{i} y_{}", i - 1),
        })?;
    }
    Ok(acc)
}

/// Outcome of an invariant check. Violations are reported, never thrown.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateReport {
    pub passed: bool,
    pub checked: usize,
    pub violation: Option<Violation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub identity: String,
    /// The residual of an identity, or the offending value of a
    /// nondegeneracy condition.
    pub residual: Scalar,
}

pub(crate) struct Checker {
    checked: usize,
    violation: Option<Violation>,
}

impl Checker {
    pub(crate) fn new() -> Self {
        Checker {
            checked: 0,
            violation: None,
        }
    }

    pub(crate) fn zero(&mut self, identity: impl FnOnce() -> String, residual: Scalar) {
        self.checked += 1;
        if self.violation.is_none() && !residual.is_zero() {
            self.violation = Some(Violation {
                identity: identity(),
                residual,
            });
        }
    }

    pub(crate) fn nonzero(&mut self, what: impl FnOnce() -> String, value: &Scalar) {
        self.checked += 1;
        if self.violation.is_none() && value.is_zero() {
            self.violation = Some(Violation {
                identity: format!("{} != 0", what()),
                residual: value.clone(),
            });
        }
    }

    pub(crate) fn fail(&mut self, identity: String) {
        self.checked += 1;
        if self.violation.is_none() {
            self.violation = Some(Violation {
                identity,
                residual: Scalar::zero(),
            });
        }
    }

    pub(crate) fn finish(self) -> StateReport {
        StateReport {
            passed: self.violation.is_none(),
            checked: self.checked,
            violation: self.violation,
        }
    }
}

/// Anything whose invariants [`check_state`] can evaluate.
pub trait Checkable {
    fn check(&self, p: &Params) -> StateReport;
}

pub fn check_state<S: Checkable + ?Sized>(state: &S, p: &Params) -> StateReport {
    state.check(p)
}

/// Evaluates the invariants of [`Params`].
pub fn check_params(p: &Params) -> StateReport {
    let mut c = Checker::new();
    let one = Scalar::one();
    c.nonzero(|| "q".into(), p.q());
    c.nonzero(|| "q - 1".into(), &(p.q() - &one));
    c.nonzero(|| "t".into(), p.t());
    c.nonzero(|| "t - 1".into(), &(p.t() - &one));
    c.nonzero(|| "t - q".into(), &(p.t() - p.q()));
    for i in 1..=p.n() + 1 {
        c.nonzero(|| format!("a_{i}"), p.a(i));
        c.nonzero(|| format!("b_{i}"), &p.b(i));
    }
    c.zero(
        || "b_0 - q b_{n+1}".into(),
        p.b(0) - p.q() * &p.b(p.n() + 1),
    );
    c.zero(
        || "w^{n+1} - q^n prod a_i b_i".into(),
        p.w().powu((p.n() + 1) as u32) - p.rho_product(),
    );
    c.zero(|| "q - s^2".into(), p.q() - p.s() * p.s());
    c.zero(
        || "q - (u^2)^{n+1}".into(),
        p.q() - p.q_root().powu((p.n() + 1) as u32),
    );
    c.finish()
}

impl Checkable for StateFG {
    fn check(&self, p: &Params) -> StateReport {
        let mut c = Checker::new();
        let n = p.n();
        if self.f.len() != n || self.g.len() != n {
            c.fail(format!("state length {} / {} != n = {n}", self.f.len(), self.g.len()));
            return c.finish();
        }
        for i in 1..=n {
            c.nonzero(|| format!("f_{i}"), &self.f[i - 1]);
            c.nonzero(|| format!("g_{i}"), &self.g[i - 1]);
        }
        c.nonzero(|| "h".into(), &self.h);
        if c.violation.is_some() {
            return c.finish();
        }
        let g0 = match self.g0(p) {
            Ok(g0) => g0,
            Err(_) => {
                c.fail("g_0 undefined".into());
                return c.finish();
            }
        };
        // Independent restatement of the product relation.
        let prod: Scalar = self.g.iter().product();
        c.zero(
            || "g_0 q^{(n-2)/2} t g_1...g_n - 1".into(),
            &g0 * p.q_half_pow(n as i64 - 2) * p.t() * prod - Scalar::one(),
        );
        for i in 1..=n {
            c.nonzero(|| format!("g_{i} - a_{}", i + 1), &(&self.g[i - 1] - p.a(i + 1)));
            c.nonzero(|| format!("g_{i} - b_{i}"), &(&self.g[i - 1] - p.b(i)));
        }
        c.nonzero(|| "g_0 - a_1".into(), &(&g0 - p.a(1)));
        c.nonzero(|| "g_0 - b_0".into(), &(&g0 - p.b(0)));
        c.finish()
    }
}

impl Checkable for XYFrame {
    fn check(&self, p: &Params) -> StateReport {
        let mut c = Checker::new();
        let n = p.n();
        if self.x.len() != n + 1 || self.xprev.len() != n + 1 || self.y.len() != n + 1 {
            c.fail(format!("frame layers must have n + 1 = {} entries", n + 1));
            return c.finish();
        }
        for i in 1..=n + 1 {
            let xl = self.xprev_at(i, p);
            for j in [i - 1, i] {
                c.nonzero(
                    || format!("1 + x̲_{i} y_{j}"),
                    &(Scalar::one() + &xl * &self.y_at(j, p)),
                );
            }
        }
        // i = 1 also uses 1 + x̲_0 y_0 = 1 + x̲_{n+1} y_{n+1}, covered above.
        if c.violation.is_some() {
            return c.finish();
        }
        match constraint_product(self, p) {
            Ok(prod) => c.zero(
                || "prod a_i (1 + x̲_i y_i)/(1 + x̲_i y_{i-1}) - q^{-n/2}".into(),
                prod - p.q_half_pow(-(n as i64)),
            ),
            Err(e) => c.fail(e.to_string()),
        }
        for i in 1..=n + 1 {
            match first_equation_rhs(self, p, i) {
                Ok(rhs) => c.zero(
                    || format!("first q-P equation, i = {i}"),
                    self.x_at(i - 1, p) - self.x_at(i, p) - rhs,
                ),
                Err(e) => c.fail(e.to_string()),
            }
        }
        c.finish()
    }
}

/// Regime for the time variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TRegime {
    /// `t` is a random small rational.
    #[default]
    Generic,
    /// `t = q^m` so that `t^{rho_1} = w^m` is rational.
    QPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleOptions {
    pub t_regime: TRegime,
    /// Rescale `a_{n+1}` so that `prod a_i = q^{-n/2}`.
    pub hypergeometric: bool,
    pub bound: i64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            t_regime: TRegime::Generic,
            hypergeometric: false,
            bound: DEFAULT_SAMPLE_BOUND,
        }
    }
}

impl SampleOptions {
    pub fn q_power() -> Self {
        SampleOptions {
            t_regime: TRegime::QPower,
            ..Self::default()
        }
    }

    pub fn hypergeometric() -> Self {
        SampleOptions {
            hypergeometric: true,
            ..Self::default()
        }
    }
}

/// Deterministic generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Nonzero rational with numerator and denominator bounded by `bound`.
pub fn small_rational<R: Rng + ?Sized>(rng: &mut R, bound: i64) -> Scalar {
    loop {
        let num = rng.random_range(-bound..=bound);
        let den = rng.random_range(1..=bound);
        if num != 0 {
            return Scalar::ratio(num, den).expect("positive denominator");
        }
    }
}

pub fn sample_params(n: usize, seed: u64) -> Result<Params> {
    sample_params_with(n, seed, &SampleOptions::default())
}

pub fn sample_params_with(n: usize, seed: u64, opts: &SampleOptions) -> Result<Params> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let mut rng = rng_for(seed, 0);
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        if let Some(p) = try_sample_params(n, &mut rng, opts) {
            return Ok(p);
        }
    }
    Err(Error::DegenerateSample {
        attempts: MAX_SAMPLE_ATTEMPTS,
    })
}

fn try_sample_params<R: Rng + ?Sized>(n: usize, rng: &mut R, opts: &SampleOptions) -> Option<Params> {
    let bound = opts.bound;
    let u = small_rational(rng, bound);
    if u.abs().is_one() {
        return None;
    }
    let s = u.powu((n + 1) as u32);
    let q = &s * &s;
    let t = match opts.t_regime {
        TRegime::Generic => small_rational(rng, bound),
        TRegime::QPower => {
            let m = Q_POWER_EXPONENTS[rng.random_range(0..Q_POWER_EXPONENTS.len())];
            q.pow_int(m).ok()?
        }
    };
    let mut a: Vec<Scalar> = (0..=n).map(|_| small_rational(rng, bound)).collect();
    let mut b: Vec<Scalar> = (0..=n).map(|_| small_rational(rng, bound)).collect();
    if opts.hypergeometric {
        let partial: Scalar = a[..n].iter().product();
        a[n] = s.pow_int(-(n as i64)).ok()?.checked_div(&partial).ok()?;
    }
    let w = small_rational(rng, bound);
    let partial = q.powu(n as u32) * a.iter().product::<Scalar>() * b[..n].iter().product::<Scalar>();
    b[n] = w.powu((n + 1) as u32).checked_div(&partial).ok()?;
    let p = Params::new(n, u, t, a, b, w).ok()?;
    check_params(&p).passed.then_some(p)
}

/// Random valid frame: random `x̲` and `y_1..y_n`, `y_{n+1}` from the
/// constraint, `x` from the first q-P equation. Degenerate draws are retried.
pub fn sample_frame<R: Rng + ?Sized>(p: &Params, rng: &mut R, bound: i64) -> Result<XYFrame> {
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        if let Ok(frame) = try_sample_frame(p, rng, bound) {
            if check_state(&frame, p).passed {
                return Ok(frame);
            }
        }
    }
    Err(Error::DegenerateSample {
        attempts: MAX_SAMPLE_ATTEMPTS,
    })
}

fn try_sample_frame<R: Rng + ?Sized>(p: &Params, rng: &mut R, bound: i64) -> Result<XYFrame> {
    let n = p.n();
    let xprev: Vec<Scalar> = (0..=n).map(|_| small_rational(rng, bound)).collect();
    let mut y: Vec<Scalar> = (0..n).map(|_| small_rational(rng, bound)).collect();
    y.push(Scalar::zero());
    y[n] = solve_constraint_for_last_y(p, &xprev, &y)?;
    XYFrame::from_lower_layer(p, xprev, y)
}

/// Mixes `(seed, a, b)` into a fresh seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random parameters and a valid [`StateFG`] obtained by pushing a random
/// frame through the dictionary.
pub fn sample_state(n: usize, seed: u64, opts: &SampleOptions) -> Result<(Params, StateFG)> {
    for attempt in 0..MAX_SAMPLE_ATTEMPTS as u64 {
        let sub = if attempt == 0 { seed } else { derive_seed(seed, attempt, 0) };
        let p = sample_params_with(n, sub, opts)?;
        let mut rng = rng_for(sub, 1);
        let Ok(frame) = sample_frame(&p, &mut rng, opts.bound) else {
            continue;
        };
        if let Ok(state) = crate::coords::xy_to_fg(&frame, &p) {
            if check_state(&state, &p).passed {
                return Ok((p, state));
            }
        }
    }
    Err(Error::DegenerateSample {
        attempts: MAX_SAMPLE_ATTEMPTS,
    })
}

/// Solves the constraint for `y_{n+1}` given `x̲` and `y_1..y_n`.
///
/// Only the factors `(1 + x̲_{n+1} y_{n+1})` and `(1 + x̲_1 (q/t) y_{n+1})`
/// involve the unknown, so after clearing them the equation is linear.
pub fn solve_constraint_for_last_y(p: &Params, xprev: &[Scalar], y: &[Scalar]) -> Result<Scalar> {
    let n = p.n();
    let degenerate = |q: &str| Error::DegenerateFrame { quantity: q.into() };
    let mut rest: Scalar = p.a_values().iter().product();
    for i in 1..=n {
        rest *= Scalar::one() + &xprev[i - 1] * &y[i - 1];
    }
    for i in 2..=n + 1 {
        let den = Scalar::one() + &xprev[i - 1] * &y[i - 2];
        rest = rest.checked_div(&den).map_err(|_| degenerate("1 + x̲_i y_{i-1}"))?;
    }
    // rest (1 + x̲_{n+1} Y) = q^{-n/2} (1 + x̲_1 (q/t) Y)
    let target = p.q_half_pow(-(n as i64));
    let lin = &rest * &xprev[n] - &target * &xprev[0] * p.q() / p.t();
    (target - rest)
        .checked_div(&lin)
        .map_err(|_| degenerate("linear coefficient of y_{n+1} in the constraint"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::sc;

    #[test]
    fn w_defining_constraint() {
        let p = sample_params(1, 7).unwrap();
        let rhs = p.q() * p.a(1) * p.b(1) * p.a(2) * p.b(2);
        assert_eq!(p.w().powu(2), rhs);
    }

    #[test]
    fn power_bookkeeping() {
        let p = sample_params(2, 0).unwrap();
        assert_eq!(p.q(), &p.u().powu(6));
        assert_eq!(p.s(), &p.u().powu(3));
        assert_eq!(p.q_root().powu(3), *p.q());
    }

    #[test]
    fn sampled_params_satisfy_invariants() {
        for n in 1..=4 {
            for seed in 0..100 {
                let p = sample_params(n, seed).unwrap();
                assert!(check_params(&p).passed, "n={n} seed={seed}");
                assert!(p.w_invariant_holds());
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_params(3, 11).unwrap(), sample_params(3, 11).unwrap());
        assert_ne!(sample_params(3, 11).unwrap(), sample_params(3, 12).unwrap());
    }

    #[test]
    fn q_power_regime() {
        for seed in 0..20 {
            let p = sample_params_with(2, seed, &SampleOptions::q_power()).unwrap();
            let m = p.t_exponent().expect("t is a power of q");
            assert!(Q_POWER_EXPONENTS.contains(&m));
            assert_eq!(p.t_pow_rho1().unwrap(), p.w().pow_int(m).unwrap());
        }
        let p = sample_params(1, 3).unwrap();
        assert_eq!(q_log(&Scalar::one(), p.q()), Some(0));
    }

    #[test]
    fn hypergeometric_constraint() {
        for seed in 0..20 {
            let p = sample_params_with(3, seed, &SampleOptions::hypergeometric()).unwrap();
            let prod: Scalar = p.a_values().iter().product();
            assert_eq!(prod, p.q_half_pow(-3));
            assert!(p.w_invariant_holds());
        }
    }

    #[test]
    fn params_json_shape() {
        let p = Params::new(1, sc(2, 3), sc(5, 7), vec![sc(1, 2), sc(3, 1)], vec![sc(-1, 4), sc(2, 1)], sc(9, 5)).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["u"], "2/3");
        assert_eq!(v["a"][1], "3/1");
        assert!(v.get("q").is_none());
        let back: Params = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_malformed_params() {
        assert!(Params::new(0, sc(2, 1), sc(1, 2), vec![], vec![], sc(1, 1)).is_err());
        assert!(Params::new(1, sc(1, 1), sc(1, 2), vec![sc(1, 1); 2], vec![sc(1, 1); 2], sc(1, 1)).is_err());
        assert!(Params::new(1, sc(2, 1), sc(1, 2), vec![sc(1, 1); 2], vec![sc(1, 1); 3], sc(1, 1)).is_err());
    }

    #[test]
    fn sampled_frames_pass_checks() {
        for n in 1..=4 {
            let p = sample_params(n, 5).unwrap();
            let mut rng = rng_for(5, 1);
            let frame = sample_frame(&p, &mut rng, DEFAULT_SAMPLE_BOUND).unwrap();
            let report = check_state(&frame, &p);
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn scaling_one_y_breaks_constraint() {
        let p = sample_params(2, 9).unwrap();
        let mut rng = rng_for(9, 1);
        let mut frame = sample_frame(&p, &mut rng, DEFAULT_SAMPLE_BOUND).unwrap();
        frame.y[1] = &frame.y[1] * Scalar::from_int(2);
        let report = check_state(&frame, &p);
        assert!(!report.passed);
        let v = report.violation.unwrap();
        assert!(v.identity.starts_with("prod a_i"), "{}", v.identity);
        assert!(!v.residual.is_zero());
    }
}
