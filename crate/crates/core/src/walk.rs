//! The switch-walk-switch lamplighter chain.
//!
//! States are pairs (configuration, walker). One step moves the walker from
//! `x` to a neighbour `y` with probability `p(x,y)` and leaves the lamps at
//! `x` and `y` uniformly random: `p̃(ξ,x; η,y) = p(x,y)/m²` whenever `ξ` and
//! `η` agree off `{x, y}`.
//!
//! Three independent engines compute the return probability
//! `p̃⁽ⁿ⁾(ι,x; ι,x)`: the configuration-space chain, the weighted closed-path
//! sum, and the percolation animal sum at `p = 1/m`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::animal::{self, enumerate_animals};
use crate::error::{Error, Result};
use crate::exact::{biguint_ratio, with_integer_fallback, Accumulator, Arithmetic, Probability, Value};
use crate::graph::WalkKernel;

pub const DEFAULT_STATE_BUDGET: usize = 1 << 23;
pub const DEFAULT_PATH_BUDGET: u64 = 2_000_000_000;

/// Lamp configuration with finite support: sorted `(site, state)` pairs,
/// state 0 (off) never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(Vec<(u32, u32)>);

impl Configuration {
    /// `ι`, all lamps off.
    pub fn empty() -> Self {
        Configuration(Vec::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut c = Configuration::empty();
        for (site, lamp) in pairs {
            c.set(site, lamp);
        }
        c
    }

    pub fn get(&self, site: usize) -> u32 {
        match self.0.binary_search_by_key(&(site as u32), |&(s, _)| s) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn set(&mut self, site: usize, lamp: u32) {
        let site = site as u32;
        match self.0.binary_search_by_key(&site, |&(s, _)| s) {
            Ok(i) if lamp == 0 => {
                self.0.remove(i);
            }
            Ok(i) => self.0[i].1 = lamp,
            Err(_) if lamp == 0 => {}
            Err(i) => self.0.insert(i, (site, lamp)),
        }
    }

    pub fn with(&self, site: usize, lamp: u32) -> Self {
        let mut c = self.clone();
        c.set(site, lamp);
        c
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(s, _)| s as usize)
    }

    pub fn support_len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether every lit lamp sits in the sorted `window`.
    pub fn is_within(&self, window: &[usize]) -> bool {
        self.support().all(|s| window.binary_search(&s).is_ok())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (s, l)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}:{l}")?;
        }
        write!(f, "}}")
    }
}

/// Finitely supported vector in `ℓ²(configurations × vertices)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LampVector {
    entries: BTreeMap<(Configuration, u32), Complex64>,
}

impl LampVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// `e_{η,x}`
    pub fn basis(config: Configuration, walker: usize) -> Self {
        let mut v = Self::new();
        v.add(config, walker, Complex64::one());
        v
    }

    pub fn add(&mut self, config: Configuration, walker: usize, amp: Complex64) {
        *self.entries.entry((config, walker as u32)).or_default() += amp;
    }

    pub fn get(&self, config: &Configuration, walker: usize) -> Complex64 {
        self.entries
            .get(&(config.clone(), walker as u32))
            .copied()
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, usize, Complex64)> {
        self.entries.iter().map(|((c, x), a)| (c, *x as usize, *a))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨self, other⟩`, linear in the first argument.
    pub fn inner(&self, other: &LampVector) -> Complex64 {
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::zero();
        for (key, a) in &small.entries {
            if let Some(b) = large.entries.get(key) {
                acc += if flip { b * a.conj() } else { a * b.conj() };
            }
        }
        acc
    }

    pub fn scaled(&self, s: Complex64) -> LampVector {
        LampVector {
            entries: self.entries.iter().map(|(k, a)| (k.clone(), a * s)).collect(),
        }
    }

    /// `self + s·other`
    pub fn axpy(&self, s: Complex64, other: &LampVector) -> LampVector {
        let mut out = self.clone();
        for (k, a) in &other.entries {
            *out.entries.entry(k.clone()).or_default() += a * s;
        }
        out
    }

    /// Sorted walker positions present in the support.
    pub fn walkers(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.entries.keys().map(|(_, x)| *x as usize).collect();
        w.sort_unstable();
        w.dedup();
        w
    }
}

/// Walker coordinates in which the operator acts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Coordinates {
    /// Step weights `p(x,y)`.
    #[default]
    Probability,
    /// Step weights `c(x,y)/sqrt(c(x)c(y))`: the kernel conjugated by
    /// `sqrt(c)`, symmetric, with the same return probabilities.
    Symmetric,
}

/// `T̃ = Σ_x Σ_{y∼x} w(x,y) Θ_xΘ_y ⊗ S_{yx}`, applied without materializing
/// any matrix.
#[derive(Clone, Debug)]
pub struct LamplighterOperator<'k, 'g> {
    kernel: &'k WalkKernel<'g>,
    m: u32,
    coords: Coordinates,
}

impl<'k, 'g> LamplighterOperator<'k, 'g> {
    pub fn new(kernel: &'k WalkKernel<'g>, m: u32) -> Result<Self> {
        Self::with_coordinates(kernel, m, Coordinates::Probability)
    }

    pub fn symmetric(kernel: &'k WalkKernel<'g>, m: u32) -> Result<Self> {
        Self::with_coordinates(kernel, m, Coordinates::Symmetric)
    }

    pub fn with_coordinates(kernel: &'k WalkKernel<'g>, m: u32, coords: Coordinates) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "lamp count must be at least 2, got {m}"
            )));
        }
        Ok(LamplighterOperator { kernel, m, coords })
    }

    pub fn kernel(&self) -> &'k WalkKernel<'g> {
        self.kernel
    }

    pub fn lamps(&self) -> u32 {
        self.m
    }

    pub fn coordinates(&self) -> Coordinates {
        self.coords
    }

    /// Step weights from `x`, aligned with `graph.neighbours(x)`.
    pub fn step_weights(&self, x: usize) -> &[f64] {
        match self.coords {
            Coordinates::Probability => self.kernel.row(x),
            Coordinates::Symmetric => self.kernel.symmetric_row(x),
        }
    }

    pub fn step_weight(&self, x: usize, y: usize) -> f64 {
        let g = self.kernel.graph();
        match g.neighbours(x).binary_search(&y) {
            Ok(j) => self.step_weights(x)[j],
            Err(_) => 0.0,
        }
    }

    pub fn apply(&self, v: &LampVector) -> LampVector {
        apply(self, v)
    }
}

/// Each entry `(η, x, a)` sends `a·w(x,y)/m²` to every `(η', y)` with `y ∼ x`
/// and `η'` equal to `η` off `{x, y}`.
pub fn apply(op: &LamplighterOperator<'_, '_>, v: &LampVector) -> LampVector {
    let g = op.kernel.graph();
    let m = op.m;
    let norm = 1.0 / f64::from(m * m);
    let mut out = LampVector::new();
    for (config, x, amp) in v.iter() {
        for (&y, &w) in g.neighbours(x).iter().zip(op.step_weights(x)) {
            let share = amp * (w * norm);
            let mut base = config.clone();
            base.set(x, 0);
            base.set(y, 0);
            for a in 0..m {
                let with_x = base.with(x, a);
                for b in 0..m {
                    out.add(with_x.with(y, b), y, share);
                }
            }
        }
    }
    out
}

/// A return probability with its exact value when computed in rational mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnValue {
    pub value: Value,
    /// Bound on the truncation error (0 for exact engines).
    pub error_bound: f64,
}

impl ReturnValue {
    fn exact(v: BigRational) -> Self {
        ReturnValue {
            value: Value::exact(v),
            error_bound: 0.0,
        }
    }

    fn float(v: f64) -> Self {
        ReturnValue {
            value: Value::float(v),
            error_bound: 0.0,
        }
    }

    pub fn float_value(&self) -> f64 {
        self.value.float
    }
}

/// JSON report for one return-probability computation.
#[derive(Clone, Debug, Serialize)]
pub struct ReturnReport {
    pub method: String,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_num: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_den: Option<String>,
    pub error_bound: f64,
}

impl ReturnReport {
    pub fn new(method: &str, n: u32, m: Option<u32>, r: &ReturnValue) -> Self {
        let (num, den) = r.value.numer_denom().unzip();
        ReturnReport {
            method: method.to_string(),
            n,
            m,
            value: r.value.float,
            value_num: num,
            value_den: den,
            error_bound: r.error_bound,
        }
    }
}

fn check_lamps(m: u32) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "lamp count must be at least 2, got {m}"
        )));
    }
    Ok(())
}

/// Adjacency of `ball` in local indices; `weight(i, j)` gives the weight of
/// the `j`-th host neighbour of the `i`-th ball vertex.
fn local_adjacency<W, F>(kernel: &WalkKernel<'_>, ball: &[usize], mut weight: F) -> Vec<Vec<(usize, W)>>
where
    F: FnMut(usize, usize) -> W,
{
    let g = kernel.graph();
    let mut local = vec![usize::MAX; g.len()];
    for (i, &v) in ball.iter().enumerate() {
        local[v] = i;
    }
    ball.iter()
        .enumerate()
        .map(|(i, &x)| {
            g.neighbours(x)
                .iter()
                .enumerate()
                .filter(|(_, &y)| local[y] != usize::MAX)
                .map(|(j, &y)| (local[y], weight(i, j)))
                .collect()
        })
        .collect()
}

/// Return probability of the exact finite chain on
/// (configurations supported in the ball of radius `n/2`) × (ball vertices).
pub fn return_prob_config_space(
    kernel: &WalkKernel<'_>,
    root: usize,
    m: u32,
    n: u32,
    arithmetic: Arithmetic,
) -> Result<ReturnValue> {
    return_prob_config_space_with_budget(kernel, root, m, n, arithmetic, DEFAULT_STATE_BUDGET)
}

pub fn return_prob_config_space_with_budget(
    kernel: &WalkKernel<'_>,
    root: usize,
    m: u32,
    n: u32,
    arithmetic: Arithmetic,
    budget: usize,
) -> Result<ReturnValue> {
    check_lamps(m)?;
    let g = kernel.graph();
    let radius = (n / 2) as usize;
    g.require_ball(root, radius)?;
    let ball = g.ball(root, radius);
    let b = ball.len();
    let states = (m as usize)
        .checked_pow(b as u32)
        .and_then(|c| c.checked_mul(b))
        .filter(|&s| s <= budget)
        .ok_or_else(|| {
            Error::budget(
                format!("configuration-space chain with m={m} on {b} sites"),
                format!("{m}^{b}·{b} states"),
                budget,
            )
        })?;
    let space = StateSpace {
        m: m as usize,
        sites: b,
        states,
    };
    match arithmetic {
        Arithmetic::Float => {
            let lamp = 1.0 / f64::from(m * m);
            let adj = local_adjacency(kernel, &ball, |i, j| kernel.row(ball[i])[j] * lamp);
            let v = space.run(&adj, n).expect("float arithmetic cannot overflow");
            Ok(ReturnValue::float(v))
        }
        Arithmetic::Rational => {
            let ik = kernel.integer_weights();
            let weights: Vec<Vec<BigUint>> = ball.iter().map(|&x| ik.weights[x].clone()).collect();
            let numer = with_integer_fallback(
                &weights,
                |small| Ok(space.run(&local_adjacency(kernel, &ball, |i, j| small[i][j]), n)),
                |big| Ok(space.run(&local_adjacency(kernel, &ball, |i, j| big[i][j].clone()), n)),
            )?;
            let denom = num_traits::pow(&ik.scale * BigUint::from(m * m), n as usize);
            Ok(ReturnValue::exact(biguint_ratio(numer, denom)))
        }
    }
}

struct StateSpace {
    m: usize,
    sites: usize,
    states: usize,
}

impl StateSpace {
    /// Entry `(ι, root) → (ι, root)` of the n-th power; root is local site 0.
    fn run<W: Accumulator>(&self, adj: &[Vec<(usize, W)>], n: u32) -> Option<W> {
        let (m, b) = (self.m, self.sites);
        let place: Vec<usize> = (0..b).map(|i| m.pow(i as u32)).collect();
        let mut cur = vec![W::zero(); self.states];
        let mut next = vec![W::zero(); self.states];
        cur[0] = W::one();
        for _ in 0..n {
            for slot in next.iter_mut() {
                *slot = W::zero();
            }
            for (s, weight) in cur.iter().enumerate() {
                if weight.is_zero() {
                    continue;
                }
                let (c, x) = (s / b, s % b);
                for (y, w) in &adj[x] {
                    let y = *y;
                    let digit = |site: usize| (c / place[site]) % m;
                    let base = c - digit(x) * place[x] - digit(y) * place[y];
                    for a in 0..m {
                        let with_x = base + a * place[x];
                        for l in 0..m {
                            let t = (with_x + l * place[y]) * b + y;
                            next[t].add_product(weight, w)?;
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Some(cur.swap_remove(0))
    }
}

/// `Σ p(x,x₁)⋯p(x_{n−1},x) m^{−|{x₀,…,xₙ}|}` over closed paths of length
/// `n ≥ 1`; `n = 0` gives 1.
pub fn return_prob_path_sum(
    kernel: &WalkKernel<'_>,
    root: usize,
    m: u32,
    n: u32,
    arithmetic: Arithmetic,
) -> Result<ReturnValue> {
    return_prob_path_sum_with_budget(kernel, root, m, n, arithmetic, DEFAULT_PATH_BUDGET)
}

pub fn return_prob_path_sum_with_budget(
    kernel: &WalkKernel<'_>,
    root: usize,
    m: u32,
    n: u32,
    arithmetic: Arithmetic,
    budget: u64,
) -> Result<ReturnValue> {
    check_lamps(m)?;
    if n == 0 {
        return Ok(match arithmetic {
            Arithmetic::Float => ReturnValue::float(1.0),
            Arithmetic::Rational => ReturnValue::exact(BigRational::one()),
        });
    }
    let g = kernel.graph();
    let radius = (n / 2) as usize;
    g.require_ball(root, radius)?;
    let ball = g.ball(root, radius);
    let dist: Vec<usize> = {
        let mut d = vec![0; ball.len()];
        for (v, k) in g.bfs_distances(root).into_iter().take_while(|&(_, k)| k <= radius) {
            let i = ball.iter().position(|&u| u == v).unwrap();
            d[i] = k;
        }
        d
    };
    let mf = f64::from(m);
    match arithmetic {
        Arithmetic::Float => {
            let adj = local_adjacency(kernel, &ball, |i, j| kernel.row(ball[i])[j]);
            // lamp factor m^{-k} for k distinct vertices
            let lamp: Vec<f64> = (0..=n as i32 + 1).map(|k| mf.powi(-k)).collect();
            let v = PathSum::new(&adj, &dist, n, lamp, budget).total()?;
            Ok(ReturnValue::float(v.expect("float arithmetic cannot overflow")))
        }
        Arithmetic::Rational => {
            let ik = kernel.integer_weights();
            let weights: Vec<Vec<BigUint>> = ball.iter().map(|&x| ik.weights[x].clone()).collect();
            // over the common denominator m^{n+1}: factor m^{n+1-k}
            let lamp_big: Vec<BigUint> = (0..=n as usize + 1)
                .map(|k| num_traits::pow(BigUint::from(m), n as usize + 1 - k.min(n as usize + 1)))
                .collect();
            let numer = with_integer_fallback(
                &weights,
                |small| {
                    let lamp: Option<Vec<u128>> = lamp_big.iter().map(num_traits::ToPrimitive::to_u128).collect();
                    let Some(lamp) = lamp else { return Ok(None) };
                    let adj = local_adjacency(kernel, &ball, |i, j| small[i][j]);
                    PathSum::new(&adj, &dist, n, lamp, budget).total()
                },
                |big| {
                    let adj = local_adjacency(kernel, &ball, |i, j| big[i][j].clone());
                    PathSum::new(&adj, &dist, n, lamp_big.clone(), budget).total()
                },
            )?;
            let denom =
                num_traits::pow(ik.scale.clone(), n as usize) * num_traits::pow(BigUint::from(m), n as usize + 1);
            Ok(ReturnValue::exact(biguint_ratio(numer, denom)))
        }
    }
}

struct PathSum<'a, W> {
    adj: &'a [Vec<(usize, W)>],
    dist: &'a [usize],
    n: u32,
    lamp: Vec<W>,
    visits: Vec<u32>,
    distinct: usize,
    total: W,
    expansions: u64,
    budget: u64,
}

impl<'a, W: Accumulator> PathSum<'a, W> {
    fn new(adj: &'a [Vec<(usize, W)>], dist: &'a [usize], n: u32, lamp: Vec<W>, budget: u64) -> Self {
        let mut visits = vec![0; adj.len()];
        visits[0] = 1;
        PathSum {
            adj,
            dist,
            n,
            lamp,
            visits,
            distinct: 1,
            total: W::zero(),
            expansions: 0,
            budget,
        }
    }

    /// `Ok(None)` signals integer overflow.
    fn total(mut self) -> Result<Option<W>> {
        match self.walk(0, 0, W::one())? {
            Some(()) => Ok(Some(self.total)),
            None => Ok(None),
        }
    }

    fn walk(&mut self, v: usize, step: u32, acc: W) -> Result<Option<()>> {
        if step == self.n {
            if v == 0 {
                let factor = self.lamp[self.distinct].clone();
                if self.total.add_product(&acc, &factor).is_none() {
                    return Ok(None);
                }
            }
            return Ok(Some(()));
        }
        self.expansions += 1;
        if self.expansions > self.budget {
            return Err(Error::budget("closed-path enumeration", "more steps", self.budget));
        }
        let remaining = (self.n - step - 1) as usize;
        for (y, w) in self.adj[v].iter() {
            let y = *y;
            if self.dist[y] > remaining {
                continue;
            }
            let Some(next) = acc.mul(w) else { return Ok(None) };
            self.visits[y] += 1;
            if self.visits[y] == 1 {
                self.distinct += 1;
            }
            let r = self.walk(y, step + 1, next)?;
            if self.visits[y] == 1 {
                self.distinct -= 1;
            }
            self.visits[y] -= 1;
            if r.is_none() {
                return Ok(None);
            }
        }
        Ok(Some(()))
    }
}

/// `𝔼 p_C⁽ⁿ⁾(x,x)` as `(1−p)[n=0] + Σ_{A∋x, |A|≤max} p^|A|(1−p)^|dA| (T_A^n)(x,x)`.
/// The first term is the closed-root event. The error bound is the
/// enumeration residual mass.
pub fn expected_return_animal_sum(
    kernel: &WalkKernel<'_>,
    root: usize,
    p: &Probability,
    n: u32,
    max_size: usize,
    arithmetic: Arithmetic,
) -> Result<ReturnValue> {
    let g = kernel.graph();
    let animals = enumerate_animals(g, root, max_size)?;
    let residual = animal::residual_from(g, p, &animals)?;
    let error_bound = residual.value.max(0.0);
    match (arithmetic, p.exact()) {
        (Arithmetic::Float, _) => {
            let mut total = if n == 0 { 1.0 - p.value() } else { 0.0 };
            for a in &animals {
                let w = animal::animal_probability(a, p).float;
                let fk = kernel.truncate(&a.vertices)?;
                total += w * fk.return_probability(root, n).expect("root in animal");
            }
            Ok(ReturnValue {
                value: Value::float(total),
                error_bound,
            })
        }
        (Arithmetic::Rational, None) => Err(Error::InvalidArgument(
            "rational arithmetic needs a rational percolation parameter".into(),
        )),
        (Arithmetic::Rational, Some(q)) => {
            let ik = kernel.integer_weights();
            let denom = num_traits::pow(ik.scale.clone(), n as usize);
            let mut total = if n == 0 {
                BigRational::one() - q
            } else {
                BigRational::zero()
            };
            for a in &animals {
                let w = animal::animal_probability(a, p).exact.expect("exact p");
                let diag = truncated_diagonal_power(kernel, &ik.weights, &a.vertices, root, n);
                total += w * biguint_ratio(diag, denom.clone());
            }
            Ok(ReturnValue {
                value: Value::exact(total),
                error_bound,
            })
        }
    }
}

/// Integer numerator of `(T_A^n)(root, root)` over `scale^n`.
fn truncated_diagonal_power(
    kernel: &WalkKernel<'_>,
    weights: &[Vec<BigUint>],
    set: &[usize],
    root: usize,
    n: u32,
) -> BigUint {
    let g = kernel.graph();
    let pos = |v: usize| set.binary_search(&v).ok();
    let start = pos(root).expect("root in animal");
    let mut cur = vec![<BigUint as Zero>::zero(); set.len()];
    cur[start] = <BigUint as One>::one();
    for _ in 0..n {
        let mut next = vec![<BigUint as Zero>::zero(); set.len()];
        for (i, &x) in set.iter().enumerate() {
            if Zero::is_zero(&cur[i]) {
                continue;
            }
            for (j, &y) in g.neighbours(x).iter().enumerate() {
                if let Some(k) = pos(y) {
                    next[k] += &cur[i] * &weights[x][j];
                }
            }
        }
        cur = next;
    }
    cur.swap_remove(start)
}
