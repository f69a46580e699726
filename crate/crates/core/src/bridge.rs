//! Brownian bridges, their confinement probabilities, layers and layered bridges.
//!
//! The probability that a bridge from `x` to `y` on `[0, t]` stays inside
//! `(lo, hi)` is `1 - sum_j (s_j - f_j)`. From a known index onward its even
//! and odd partial sums bracket the limit, so Bernoulli events with that
//! probability are decided exactly by refining the bracket until it
//! separates a uniform draw.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{precondition, Error, Result};

/// Default attempt cap for the rejection steps in layered bridge sampling.
pub const DEFAULT_BRIDGE_CAP: u64 = 1_000_000;

/// Default reporting tolerance of [`band_probability`].
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_REFINEMENTS: usize = 100_000;

/// Per-coordinate layer of a bridge: coordinate `c` stays inside
/// `(band_lo[c], band_hi[c])` but not inside the band one level narrower.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub eps: Vec<u32>,
    pub delta: f64,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
}

impl Layer {
    /// Builds a layer with the bands implied by endpoints `x`, `y`.
    pub fn new(eps: Vec<u32>, delta: f64, x: &[f64], y: &[f64]) -> Self {
        let band_lo = eps
            .iter()
            .zip(x.iter().zip(y))
            .map(|(&e, (&a, &b))| a.min(b) - e as f64 * delta)
            .collect();
        let band_hi = eps
            .iter()
            .zip(x.iter().zip(y))
            .map(|(&e, (&a, &b))| a.max(b) + e as f64 * delta)
            .collect();
        Self {
            eps,
            delta,
            band_lo,
            band_hi,
        }
    }

    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    /// Box in transformed coordinates containing a bridge from `x` to `y`
    /// whose pinned version has this layer (bands centred at zero).
    pub fn region(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lo = x
            .iter()
            .zip(y)
            .zip(&self.band_lo)
            .map(|((&a, &b), &l)| a.min(b) + l)
            .collect();
        let hi = x
            .iter()
            .zip(y)
            .zip(&self.band_hi)
            .map(|((&a, &b), &h)| a.max(b) + h)
            .collect();
        (lo, hi)
    }
}

/// Revealed points of a pinned bridge, stored row-major (`times.len()` rows of `dim`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Skeleton {
    pub dim: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Skeleton {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }
}

pub(crate) fn check_times(times: &[f64], t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return precondition(format!("horizon must be positive, got {t}"));
    }
    let mut prev = 0.0;
    for &s in times {
        if !(s > prev && s < t) {
            return precondition(format!("times must be strictly increasing inside (0, {t})"));
        }
        prev = s;
    }
    Ok(())
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Draw at `s` of a bridge currently at `(s0, v0)` and pinned at `(t, y)`.
#[inline]
pub(crate) fn bridge_step<R: Rng + ?Sized>(s0: f64, v0: f64, s: f64, t: f64, y: f64, rng: &mut R) -> f64 {
    let span = t - s0;
    let mean = v0 + (s - s0) / span * (y - v0);
    let var = (s - s0) * (t - s) / span;
    mean + var.max(0.0).sqrt() * normal(rng)
}

/// Scalar Brownian bridge from `(0, x)` to `(t, y)` at the given times.
pub fn sample_bridge_between<R: Rng + ?Sized>(
    times: &[f64],
    x: f64,
    y: f64,
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_times(times, t)?;
    let mut out = Vec::with_capacity(times.len());
    let (mut s0, mut v0) = (0.0, x);
    for &s in times {
        v0 = bridge_step(s0, v0, s, t, y, rng);
        s0 = s;
        out.push(v0);
    }
    Ok(out)
}

/// Scalar Brownian bridge pinned at zero at both ends of `[0, t]`.
pub fn sample_brownian_bridge<R: Rng + ?Sized>(times: &[f64], t: f64, rng: &mut R) -> Result<Vec<f64>> {
    sample_bridge_between(times, 0.0, 0.0, t, rng)
}

/// Bracketing envelope for the probability that a bridge stays inside a band.
#[derive(Clone, Debug)]
pub enum Envelope {
    Exact(f64),
    Series(Series),
}

#[derive(Clone, Debug)]
pub struct Series {
    lo: f64,
    hi: f64,
    x: f64,
    y: f64,
    t: f64,
    w: f64,
    /// Number of (s_j - f_j) pairs summed so far.
    k: usize,
    /// `1 - sum_{j<=k} (s_j - f_j)`.
    even: f64,
}

impl Series {
    fn s_term(&self, j: usize) -> f64 {
        let jw = j as f64 * self.w;
        let (lo, hi, x, y, t) = (self.lo, self.hi, self.x, self.y, self.t);
        (-2.0 * (jw + lo - x) * (jw + lo - y) / t).exp() + (-2.0 * (jw - hi + x) * (jw - hi + y) / t).exp()
    }

    fn f_term(&self, j: usize) -> f64 {
        let jw = j as f64 * self.w;
        let (x, y, t) = (self.x, self.y, self.t);
        (-2.0 * jw * (jw + x - y) / t).exp() + (-2.0 * jw * (jw - x + y) / t).exp()
    }

    fn advance(&mut self) {
        self.k += 1;
        self.even -= self.s_term(self.k) - self.f_term(self.k);
    }

    /// Current `(lower, upper)` envelope.
    fn bounds(&self) -> (f64, f64) {
        let odd = self.even - self.s_term(self.k + 1);
        let lower = odd.clamp(0.0, 1.0);
        let upper = self.even.clamp(0.0, 1.0);
        (lower, upper.max(lower))
    }
}

/// Smallest index from which the partial sums alternate around the limit.
pub fn series_start(w: f64, t: f64) -> usize {
    ((t + w * w).sqrt() / (2.0 * w)).ceil().max(1.0) as usize
}

impl Envelope {
    /// Envelope for `P(lo < B_s < hi for all s)` with `B` a bridge from `x` to `y` on `[0, t]`.
    pub fn new(lo: f64, hi: f64, x: f64, y: f64, t: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return precondition(format!("invalid band ({lo}, {hi})"));
        }
        if !(x > lo && x < hi && y > lo && y < hi) {
            return Ok(Envelope::Exact(0.0));
        }
        if t <= 0.0 {
            return Ok(Envelope::Exact(1.0));
        }
        let p = match (lo.is_finite(), hi.is_finite()) {
            (false, false) => 1.0,
            (false, true) => -(-2.0 * (hi - x) * (hi - y) / t).exp_m1(),
            (true, false) => -(-2.0 * (x - lo) * (y - lo) / t).exp_m1(),
            (true, true) => {
                let w = hi - lo;
                let mut s = Series {
                    lo,
                    hi,
                    x,
                    y,
                    t,
                    w,
                    k: 0,
                    even: 1.0,
                };
                for _ in 0..series_start(w, t) {
                    s.advance();
                }
                return Ok(Envelope::Series(s));
            }
        };
        Ok(Envelope::Exact(p))
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Envelope::Exact(p) => (*p, *p),
            Envelope::Series(s) => s.bounds(),
        }
    }

    pub fn refine(&mut self) {
        if let Envelope::Series(s) = self {
            s.advance();
        }
    }
}

/// Probability that a bridge from `x` to `y` on `[0, t]` stays in `(lo, hi)`,
/// to absolute accuracy `tol`.
pub fn band_probability(lo: f64, hi: f64, x: f64, y: f64, t: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return precondition("tolerance must be positive");
    }
    let mut env = Envelope::new(lo, hi, x, y, t)?;
    for _ in 0..MAX_REFINEMENTS {
        let (l, u) = env.bounds();
        if u - l <= 2.0 * tol {
            return Ok(0.5 * (l + u));
        }
        env.refine();
    }
    Err(Error::Numeric(format!(
        "confinement series for band ({lo}, {hi}), x={x}, y={y}, t={t} did not converge"
    )))
}

fn product_bounds(envs: &[Envelope]) -> (f64, f64) {
    envs.iter().fold((1.0, 1.0), |(l, u), e| {
        let (el, eu) = e.bounds();
        (l * el, u * eu)
    })
}

fn refine_all(envs: &mut [Envelope]) {
    envs.iter_mut().for_each(Envelope::refine);
}

fn stalled(what: &str) -> Error {
    Error::Numeric(format!(
        "envelopes for {what} failed to separate the uniform draw"
    ))
}

/// Decides `u < prod_k p_k` exactly, where each `p_k` is given by an envelope.
pub fn decide_product_below(u: f64, envs: &mut [Envelope]) -> Result<bool> {
    for _ in 0..MAX_REFINEMENTS {
        let (l, h) = product_bounds(envs);
        if u < l {
            return Ok(true);
        }
        if u >= h {
            return Ok(false);
        }
        refine_all(envs);
    }
    Err(stalled("a product event"))
}

/// Decides `u < p` exactly.
pub fn decide_below(u: f64, env: &mut Envelope) -> Result<bool> {
    decide_product_below(u, std::slice::from_mut(env))
}

fn sample_scalar_layer<R: Rng + ?Sized>(x: f64, y: f64, t: f64, delta: f64, rng: &mut R) -> Result<u32> {
    let u = uniform(rng);
    let (a, b) = (x.min(y), x.max(y));
    for eps in 1u32.. {
        let e = eps as f64 * delta;
        let mut env = Envelope::new(a - e, b + e, x, y, t)?;
        if decide_below(u, &mut env)? {
            return Ok(eps);
        }
        if eps > 1_000_000 {
            break;
        }
    }
    Err(Error::Numeric("layer search ran away".into()))
}

fn check_delta(t: f64, delta: f64) -> Result<()> {
    if !(delta > (t / 3.0).sqrt()) || !delta.is_finite() {
        return precondition(format!(
            "layer unit {delta} must exceed sqrt(t/3) = {}",
            (t / 3.0).sqrt()
        ));
    }
    Ok(())
}

/// Draws the per-coordinate layer of a bridge from `x` to `y` on `[0, t]`.
pub fn sample_layer<R: Rng + ?Sized>(x: &[f64], y: &[f64], t: f64, delta: f64, rng: &mut R) -> Result<Layer> {
    check_delta(t, delta)?;
    if x.len() != y.len() {
        return precondition("endpoint dimensions differ");
    }
    let eps = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| sample_scalar_layer(a, b, t, delta, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Layer::new(eps, delta, x, y))
}

/// Bridge points at `times` conditioned to stay inside `(lo, hi)`.
#[allow(clippy::too_many_arguments)]
fn sample_confined<R: Rng + ?Sized>(
    times: &[f64],
    lo: f64,
    hi: f64,
    x: f64,
    y: f64,
    t: f64,
    cap: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let (mut s0, mut v0) = (0.0, x);
    for &s in times {
        let mut tries = 0u64;
        let b = loop {
            tries += 1;
            if tries > cap {
                return Err(Error::ResourceLimit(format!(
                    "confined bridge step at s={s} exceeded {cap} attempts"
                )));
            }
            let b = bridge_step(s0, v0, s, t, y, rng);
            if b <= lo || b >= hi {
                continue;
            }
            let mut envs = [
                Envelope::new(lo, hi, v0, b, s - s0)?,
                Envelope::new(lo, hi, b, y, t - s)?,
            ];
            if decide_product_below(uniform(rng), &mut envs)? {
                break b;
            }
        };
        out.push(b);
        s0 = s;
        v0 = b;
    }
    Ok(out)
}

/// Bridge values at `times` conditioned to reach `h < min(x, y)`: a bridge to
/// `2h - y` is reflected after its first passage through `h`. Also returns
/// the segment index holding that passage (segment `j` ends at `times[j]`,
/// the last one at `t`).
fn sample_hitting_lower<R: Rng + ?Sized>(
    times: &[f64],
    h: f64,
    x: f64,
    y: f64,
    t: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    let mut values = sample_bridge_between(times, x, 2.0 * h - y, t, rng)?;
    let mut crossing = times.len();
    let (mut s0, mut v0) = (0.0, x);
    for (j, (&s, &v)) in times.iter().zip(&values).enumerate() {
        if v <= h || uniform(rng) < (-2.0 * (v0 - h) * (v - h) / (s - s0)).exp() {
            crossing = j;
            break;
        }
        s0 = s;
        v0 = v;
    }
    for v in values.iter_mut().skip(crossing) {
        *v = 2.0 * h - *v;
    }
    Ok((values, crossing))
}

/// `(P(band) - P(minus)) / scale` for one segment, bracketed.
struct Factor {
    band: Envelope,
    minus: Option<Envelope>,
    scale: f64,
}

impl Factor {
    fn bounds(&self) -> (f64, f64) {
        let (bl, bh) = self.band.bounds();
        let (ml, mh) = self.minus.as_ref().map_or((0.0, 0.0), Envelope::bounds);
        (
            ((bl - mh) / self.scale).clamp(0.0, 1.0),
            ((bh - ml) / self.scale).clamp(0.0, 1.0),
        )
    }

    fn refine(&mut self) {
        self.band.refine();
        if let Some(m) = self.minus.as_mut() {
            m.refine();
        }
    }
}

/// Factors of `P(lo < path < hi | values)` for a path known to avoid `h`
/// before segment `crossing` and to reach it there.
#[allow(clippy::too_many_arguments)]
fn hitting_factors(
    times: &[f64],
    values: &[f64],
    crossing: usize,
    h: f64,
    lo: f64,
    hi: f64,
    x: f64,
    y: f64,
    t: f64,
) -> Result<Vec<Factor>> {
    let mut out = Vec::with_capacity(times.len() + 1);
    let ends = times
        .iter()
        .copied()
        .zip(values.iter().copied())
        .chain(std::iter::once((t, y)));
    let (mut s0, mut v0) = (0.0, x);
    for (j, (s, v)) in ends.enumerate() {
        let dt = s - s0;
        let factor = match j.cmp(&crossing) {
            std::cmp::Ordering::Less => Factor {
                band: Envelope::new(h, hi, v0, v, dt)?,
                minus: None,
                scale: -(-2.0 * (v0 - h) * (v - h) / dt).exp_m1(),
            },
            std::cmp::Ordering::Equal => Factor {
                band: Envelope::new(lo, hi, v0, v, dt)?,
                minus: Some(Envelope::new(h, hi, v0, v, dt)?),
                scale: if v <= h {
                    1.0
                } else {
                    (-2.0 * (v0 - h) * (v - h) / dt).exp()
                },
            },
            std::cmp::Ordering::Greater => Factor {
                band: Envelope::new(lo, hi, v0, v, dt)?,
                minus: None,
                scale: 1.0,
            },
        };
        out.push(factor);
        s0 = s;
        v0 = v;
    }
    Ok(out)
}

fn factor_product(fs: &[Factor]) -> (f64, f64) {
    fs.iter().fold((1.0, 1.0), |(l, u), f| {
        let (fl, fu) = f.bounds();
        (l * fl, u * fu)
    })
}

/// Decides `u < (prod(a) + prod(b)) / 2` exactly.
fn decide_mean_below(u: f64, a: &mut [Factor], b: &mut [Factor]) -> Result<bool> {
    for _ in 0..MAX_REFINEMENTS {
        let (al, ah) = factor_product(a);
        let (bl, bh) = factor_product(b);
        if u < 0.5 * (al + bl) {
            return Ok(true);
        }
        if u >= 0.5 * (ah + bh) {
            return Ok(false);
        }
        a.iter_mut().chain(b.iter_mut()).for_each(Factor::refine);
    }
    Err(stalled("a layer acceptance"))
}

/// One proposal for layer `eps >= 2`, from the bridge conditioned to reach
/// the lower inner level. The uniform-count weight of the mixture over both
/// inner levels turns the acceptance into the mean of the outer-band and
/// the lower-outer/upper-inner confinement probabilities.
#[allow(clippy::too_many_arguments)]
fn propose_via_lower<R: Rng + ?Sized>(
    times: &[f64],
    inner: (f64, f64),
    outer: (f64, f64),
    x: f64,
    y: f64,
    t: f64,
    rng: &mut R,
) -> Result<Option<Vec<f64>>> {
    let (values, crossing) = sample_hitting_lower(times, inner.0, x, y, t, rng)?;
    let mut full = hitting_factors(times, &values, crossing, inner.0, outer.0, outer.1, x, y, t)?;
    let mut near = hitting_factors(times, &values, crossing, inner.0, outer.0, inner.1, x, y, t)?;
    Ok(decide_mean_below(uniform(rng), &mut full, &mut near)?.then_some(values))
}

#[allow(clippy::too_many_arguments)]
fn sample_scalar_given_layer<R: Rng + ?Sized>(
    times: &[f64],
    eps: u32,
    delta: f64,
    x: f64,
    y: f64,
    t: f64,
    cap: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (a, b) = (x.min(y), x.max(y));
    let outer = (a - eps as f64 * delta, b + eps as f64 * delta);
    if eps == 1 {
        return sample_confined(times, outer.0, outer.1, x, y, t, cap, rng);
    }
    let inner = (a - (eps as f64 - 1.0) * delta, b + (eps as f64 - 1.0) * delta);
    // Both inner levels sit at the same distance beyond the endpoints, so
    // they are reached with equal probability.
    for _ in 0..cap {
        let proposal = if rng.random_bool(0.5) {
            propose_via_lower(times, inner, outer, x, y, t, rng)?
        } else {
            propose_via_lower(times, (-inner.1, -inner.0), (-outer.1, -outer.0), -x, -y, t, rng)?
                .map(|v| v.into_iter().map(|z| -z).collect())
        };
        if let Some(values) = proposal {
            return Ok(values);
        }
    }
    Err(Error::ResourceLimit(format!(
        "layered bridge with layer {eps} exceeded {cap} attempts"
    )))
}

/// Bridge from `x` to `y` at `times`, conditioned on the given layer.
/// Returns row-major values (`times.len()` rows of `x.len()` columns).
pub fn sample_bridge_given_layer<R: Rng + ?Sized>(
    times: &[f64],
    layer: &Layer,
    x: &[f64],
    y: &[f64],
    t: f64,
    cap: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_times(times, t)?;
    let d = layer.dim();
    if x.len() != d || y.len() != d {
        return precondition("layer and endpoint dimensions differ");
    }
    let mut out = vec![0.0; times.len() * d];
    if times.is_empty() {
        return Ok(out);
    }
    for c in 0..d {
        let col = sample_scalar_given_layer(times, layer.eps[c], layer.delta, x[c], y[c], t, cap, rng)?;
        for (k, v) in col.into_iter().enumerate() {
            out[k * d + c] = v;
        }
    }
    Ok(out)
}
