//! Lattice animals: finite connected vertex sets containing a root.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Probability, Value};
use crate::graph::Graph;
use crate::percolation;

/// Upper bound on the number of animals held in memory by default.
pub const DEFAULT_ANIMAL_BUDGET: usize = 2_000_000;

/// Site percolation threshold of the square lattice (numerical estimate).
pub const Z2_SITE_THRESHOLD: f64 = 0.592_746;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Animal {
    pub root: usize,
    /// Sorted vertex ids.
    pub vertices: Vec<usize>,
    /// Sorted vertex boundary.
    pub boundary: Vec<usize>,
}

impl Animal {
    pub fn new(g: &Graph, root: usize, mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        let boundary = boundary(g, &vertices);
        Animal {
            root,
            vertices,
            boundary,
        }
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn boundary_size(&self) -> usize {
        self.boundary.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// `A ∪ dA`, sorted.
    pub fn closure(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.vertices.iter().chain(&self.boundary).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Vertices outside `set` adjacent to some vertex of `set`, sorted.
pub fn boundary(g: &Graph, set: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.len()];
    for &v in set {
        inside[v] = true;
    }
    let mut out: Vec<usize> = set
        .iter()
        .flat_map(|&v| g.neighbours(v).iter().copied())
        .filter(|&w| !inside[w])
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub fn enumerate_animals(g: &Graph, root: usize, max_size: usize) -> Result<Vec<Animal>> {
    enumerate_animals_with_budget(g, root, max_size, DEFAULT_ANIMAL_BUDGET)
}

/// Every connected vertex set containing `root` with at most `max_size`
/// vertices, exactly once, ordered by size and then lexicographically.
///
/// Growth follows Redelmeier's scheme: a vertex enters the candidate list
/// the first time it becomes adjacent to the current animal, and once a
/// candidate has been tried and removed it stays excluded for the rest of
/// that branch. The region must be large enough that every animal vertex
/// has all its host neighbours materialized.
pub fn enumerate_animals_with_budget(g: &Graph, root: usize, max_size: usize, budget: usize) -> Result<Vec<Animal>> {
    if max_size == 0 {
        return Err(Error::InvalidArgument("max_size must be at least 1".into()));
    }
    if root >= g.len() {
        return Err(Error::UnknownVertex(root.to_string()));
    }
    let mut seen = vec![false; g.len()];
    seen[root] = true;
    let mut state = Growth {
        g,
        max_size,
        budget,
        current: Vec::with_capacity(max_size),
        found: Vec::new(),
    };
    state.grow(vec![root], &mut seen)?;
    let mut found = state.found;
    found.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(found
        .into_iter()
        .map(|vertices| {
            let boundary = boundary(g, &vertices);
            Animal {
                root,
                vertices,
                boundary,
            }
        })
        .collect())
}

struct Growth<'a> {
    g: &'a Graph,
    max_size: usize,
    budget: usize,
    current: Vec<usize>,
    found: Vec<Vec<usize>>,
}

impl Growth<'_> {
    fn grow(&mut self, mut untried: Vec<usize>, seen: &mut [bool]) -> Result<()> {
        while let Some(v) = untried.pop() {
            if !self.g.is_complete(v) {
                return Err(Error::RegionTooSmall(self.g.label(v).to_string()));
            }
            self.current.push(v);
            if self.found.len() >= self.budget {
                return Err(Error::budget(
                    format!("animal enumeration at size {}", self.current.len()),
                    format!("more than {} animals", self.budget),
                    self.budget,
                ));
            }
            let mut sorted = self.current.clone();
            sorted.sort_unstable();
            self.found.push(sorted);
            if self.current.len() < self.max_size {
                let fresh: Vec<usize> = self.g.neighbours(v).iter().copied().filter(|&w| !seen[w]).collect();
                for &w in &fresh {
                    seen[w] = true;
                }
                let mut next = untried.clone();
                next.extend_from_slice(&fresh);
                self.grow(next, seen)?;
                for &w in &fresh {
                    seen[w] = false;
                }
            }
            self.current.pop();
        }
        Ok(())
    }
}

/// `p^|A| (1-p)^|dA|`, exact when `p` is.
pub fn animal_probability(a: &Animal, p: &Probability) -> Value {
    cluster_probability(a.size(), a.boundary_size(), p)
}

pub(crate) fn cluster_probability(size: usize, boundary: usize, p: &Probability) -> Value {
    match p.exact() {
        Some(q) => {
            let one = BigRational::one();
            Value::exact(num_traits::pow(q.clone(), size) * num_traits::pow(one - q, boundary))
        }
        None => {
            let q = p.value();
            Value::float(q.powi(size as i32) * (1.0 - q).powi(boundary as i32))
        }
    }
}

/// Total probability `M(p)` that the root is open and its cluster finite.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TotalMass {
    /// Known in closed form.
    Exact {
        value: f64,
        #[serde(skip)]
        exact: Option<BigRational>,
    },
    /// Monte Carlo estimate.
    Estimated { value: f64, stderr: f64 },
}

impl TotalMass {
    pub fn value(&self) -> f64 {
        match self {
            TotalMass::Exact { value, .. } | TotalMass::Estimated { value, .. } => *value,
        }
    }
}

/// Samples used when `M(p)` has to be estimated.
const MASS_SAMPLES: usize = 4000;
const MASS_RADIUS: usize = 48;

/// `M(p)` for the host graph of `g`.
///
/// Finite graphs and subcritical infinite ones give `p`. Supercritical regular
/// trees use the branching-process extinction probability; the supercritical
/// square lattice falls back to sampling clusters in a large ball.
pub fn finite_cluster_mass(g: &Graph, p: &Probability) -> Result<TotalMass> {
    let spec = g.spec();
    let subcritical = match (spec.is_finite(), spec.tag(), spec.tree_degree()) {
        (true, _, _) | (false, "line", _) => true,
        (false, "tree", Some(d)) => p.value() * (d as f64 - 1.0) <= 1.0,
        (false, "z2", _) => p.value() < Z2_SITE_THRESHOLD,
        _ => false,
    };
    if subcritical {
        return Ok(TotalMass::Exact {
            value: p.value(),
            exact: p.exact().cloned(),
        });
    }
    if let Some(d) = spec.tree_degree() {
        // s = P[a branch does not connect the root to infinity] solves
        // s = 1 - p + p s^(d-1); iterating from 0 reaches the smallest root.
        let q = p.value();
        let mut s = 0.0f64;
        for _ in 0..100_000 {
            let next = 1.0 - q + q * s.powi(d as i32 - 1);
            if (next - s).abs() < 1e-17 {
                s = next;
                break;
            }
            s = next;
        }
        return Ok(TotalMass::Exact {
            value: q * s.powi(d as i32),
            exact: None,
        });
    }
    let ball = spec.materialize(g.label(g.root()), Some(MASS_RADIUS))?;
    let (value, stderr) = percolation::estimate_finite_mass(&ball, ball.root(), p.value(), MASS_SAMPLES, 0x5eed)?;
    Ok(TotalMass::Estimated { value, stderr })
}

/// Probability mass of the root clusters not covered by an enumeration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    #[serde(skip)]
    pub exact: Option<BigRational>,
    pub enumerated: f64,
    pub total: TotalMass,
}

/// `M(p) − Σ_{enumerated} p^|A|(1−p)^|dA|`.
pub fn residual_from(g: &Graph, p: &Probability, animals: &[Animal]) -> Result<Residual> {
    let total = finite_cluster_mass(g, p)?;
    let mut float_sum = 0.0;
    let mut exact_sum = p.exact().map(|_| BigRational::zero());
    for a in animals {
        let w = animal_probability(a, p);
        float_sum += w.float;
        if let (Some(acc), Some(e)) = (exact_sum.as_mut(), w.exact.as_ref()) {
            *acc += e;
        }
    }
    let exact = match (&total, exact_sum) {
        (TotalMass::Exact { exact: Some(m), .. }, Some(s)) => Some(m - s),
        _ => None,
    };
    let value = match &exact {
        Some(e) => crate::exact::rational_to_f64(e),
        None => total.value() - float_sum,
    };
    Ok(Residual {
        value,
        exact,
        enumerated: float_sum,
        total,
    })
}

pub fn residual_mass(g: &Graph, root: usize, p: &Probability, max_size: usize) -> Result<Residual> {
    let animals = enumerate_animals(g, root, max_size)?;
    residual_from(g, p, &animals)
}

/// One line of the animals JSONL output.
#[derive(Clone, Debug, Serialize)]
pub struct AnimalRecord {
    pub vertices: Vec<usize>,
    pub labels: Vec<String>,
    pub boundary: Vec<usize>,
    pub size: usize,
    pub bsize: usize,
    pub prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob_num: Option<serde_json::Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob_den: Option<serde_json::Number>,
}

impl AnimalRecord {
    pub fn new(g: &Graph, a: &Animal, p: &Probability) -> Self {
        let w = animal_probability(a, p);
        let as_number = |s: String| s.parse::<serde_json::Number>().ok();
        let (num, den) = match w.numer_denom() {
            Some((n, d)) => (as_number(n), as_number(d)),
            None => (None, None),
        };
        AnimalRecord {
            vertices: a.vertices.clone(),
            labels: a.vertices.iter().map(|&v| g.label(v).to_string()).collect(),
            boundary: a.boundary.clone(),
            size: a.size(),
            bsize: a.boundary_size(),
            prob: w.float,
            prob_num: num,
            prob_den: den,
        }
    }
}

/// Number of animals per size, index 0 holding size 1.
pub fn counts_by_size(animals: &[Animal], max_size: usize) -> Vec<usize> {
    let mut counts = vec![0; max_size];
    for a in animals {
        counts[a.size() - 1] += 1;
    }
    counts
}
