//! Symmetric eigenproblems and atomic spectral measures.
//!
//! The expected spectral measure of the absorbing walk on the percolation
//! cluster is a countable mixture of the local measures of the truncated
//! kernels `T_A`, one per lattice animal `A`, plus an atom at 0 for the
//! closed-root event. At `p = 1/m` its moments are the lamplighter return
//! probabilities.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::animal::{self, enumerate_animals, Residual};
use crate::error::{Error, Result};
use crate::exact::Probability;
use crate::graph::{FiniteKernel, WalkKernel};
use crate::matrix::DenseMatrix;

pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;
/// Atoms lighter than this are numerical zeros (eigenvector vanishing at the root).
const NEGLIGIBLE_MASS: f64 = 1e-24;

#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: DenseMatrix,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    /// `max_j ‖S v_j − λ_j v_j‖`
    pub fn max_residual(&self, s: &DenseMatrix) -> f64 {
        (0..self.len())
            .map(|j| {
                let v = self.vector(j);
                let sv = s.mul_vec(&v);
                sv.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - self.values[j] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |VᵀV − I|`
    pub fn orthogonality_defect(&self) -> f64 {
        let vtv = self.vectors.transpose().matmul(&self.vectors);
        vtv.max_abs_diff(&DenseMatrix::identity(self.len()))
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come out ascending; each eigenvector is signed so that its
/// largest-magnitude entry (first one on ties) is positive.
pub fn eig_symmetric(s: &DenseMatrix, tol: f64) -> Result<EigenSystem> {
    if !s.is_square() {
        return Err(Error::InvalidArgument("eigenproblem needs a square matrix".into()));
    }
    let deviation = s.asymmetry();
    if deviation > tol {
        return Err(Error::NotSymmetric { deviation, tol });
    }
    let n = s.rows();
    let mut a = s.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        let lead = vec
            .iter()
            .enumerate()
            .fold(
                (0, 0.0f64),
                |best, (k, x)| if x.abs() > best.1 + 1e-12 { (k, x.abs()) } else { best },
            )
            .0;
        if vec.get(lead).is_some_and(|x| *x < 0.0) {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
        for (k, x) in vec.into_iter().enumerate() {
            vectors[(k, col)] = x;
        }
    }
    Ok(EigenSystem { values, vectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Finite list of atoms sorted by location, plus a bound on the mass not
/// represented by them.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    residual: f64,
}

impl AtomicMeasure {
    pub fn new(mut atoms: Vec<Atom>, residual: f64) -> Self {
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        AtomicMeasure { atoms, residual }
    }

    pub fn dirac(location: f64) -> Self {
        Self::new(vec![Atom { location, mass: 1.0 }], 0.0)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Total mass of atoms within `tol` of `location`.
    pub fn mass_near(&self, location: f64, tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.location - location).abs() <= tol)
            .map(|a| a.mass)
            .sum()
    }

    /// `(location, cumulative mass)` at every atom.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let mut acc = 0.0;
        self.atoms
            .iter()
            .map(|a| {
                acc += a.mass;
                (a.location, acc)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, header: &[(String, String)]) -> Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "location,mass")?;
        for a in &self.atoms {
            writeln!(out, "{:.17e},{:.17e}", a.location, a.mass)?;
        }
        Ok(())
    }

    pub fn write_cdf_csv<W: Write>(&self, out: &mut W, header: &[(String, String)]) -> Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "location,cumulative_mass")?;
        for (x, c) in self.cdf() {
            writeln!(out, "{x:.17e},{c:.17e}")?;
        }
        Ok(())
    }
}

/// `∫ tᵏ dμ` for `k = 0..=n_max`.
pub fn moments(mu: &AtomicMeasure, n_max: u32) -> Vec<f64> {
    (0..=n_max)
        .map(|k| mu.atoms.iter().map(|a| a.mass * a.location.powi(k as i32)).sum())
        .collect()
}

/// Combines runs of atoms whose consecutive gaps are below `tol` into one
/// atom at their mass-weighted mean location.
pub fn merge_atoms(mu: &AtomicMeasure, tol: f64) -> AtomicMeasure {
    if tol <= 0.0 || mu.atoms.is_empty() {
        return mu.clone();
    }
    let mut merged: Vec<Atom> = Vec::new();
    let mut group: Vec<Atom> = Vec::new();
    let flush = |group: &mut Vec<Atom>, merged: &mut Vec<Atom>| {
        if group.is_empty() {
            return;
        }
        let mass: f64 = group.iter().map(|a| a.mass).sum();
        let location = if mass > 0.0 {
            group.iter().map(|a| a.mass * a.location).sum::<f64>() / mass
        } else {
            group.iter().map(|a| a.location).sum::<f64>() / group.len() as f64
        };
        merged.push(Atom { location, mass });
        group.clear();
    };
    for &atom in &mu.atoms {
        if let Some(last) = group.last() {
            if atom.location - last.location >= tol {
                flush(&mut group, &mut merged);
            }
        }
        group.push(atom);
    }
    flush(&mut group, &mut merged);
    AtomicMeasure::new(merged, mu.residual)
}

/// `Σ_j |⟨v_j, δ_root⟩|² δ_{λ_j}` for the symmetrized truncated kernel.
pub fn local_spectral_measure(fk: &FiniteKernel, root: usize) -> Result<AtomicMeasure> {
    let i = fk
        .position(root)
        .ok_or_else(|| Error::UnknownVertex(root.to_string()))?;
    let eig = eig_symmetric(&fk.symmetrize(), 1e-12)?;
    let atoms = (0..eig.len())
        .map(|j| Atom {
            location: eig.values[j],
            mass: eig.vectors[(i, j)].powi(2),
        })
        .filter(|a| a.mass > NEGLIGIBLE_MASS)
        .collect();
    Ok(AtomicMeasure::new(atoms, 0.0))
}

/// The mixture measure and the enumeration behind it.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub measure: AtomicMeasure,
    pub residual: Residual,
    pub animals: usize,
}

/// `(1−p)δ₀ + Σ_{A∋root, |A|≤max} p^|A|(1−p)^|dA| μ_A`, atoms merged within
/// [`DEFAULT_MERGE_TOL`]; the residual is the enumeration residual mass.
pub fn mixture_measure(
    kernel: &WalkKernel<'_>,
    root: usize,
    p: &Probability,
    max_size: usize,
) -> Result<AtomicMeasure> {
    Ok(mixture(kernel, root, p, max_size, DEFAULT_MERGE_TOL)?.measure)
}

pub fn mixture(kernel: &WalkKernel<'_>, root: usize, p: &Probability, max_size: usize, tol: f64) -> Result<Mixture> {
    let g = kernel.graph();
    let animals = enumerate_animals(g, root, max_size)?;
    let residual = animal::residual_from(g, p, &animals)?;
    let per_animal: Vec<Vec<Atom>> = animals
        .par_iter()
        .map(|a| -> Result<Vec<Atom>> {
            let w = animal::animal_probability(a, p).float;
            let local = local_spectral_measure(&kernel.truncate(&a.vertices)?, root)?;
            Ok(local
                .atoms
                .iter()
                .map(|atom| Atom {
                    location: atom.location,
                    mass: w * atom.mass,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut atoms = vec![Atom {
        location: 0.0,
        mass: 1.0 - p.value(),
    }];
    atoms.extend(per_animal.into_iter().flatten());
    let raw = AtomicMeasure::new(atoms, residual.value.max(0.0));
    Ok(Mixture {
        measure: merge_atoms(&raw, tol),
        residual,
        animals: animals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{kernel, Graph, GraphSpec};

    fn whole(text: &str, root: &str) -> Graph {
        let spec = GraphSpec::parse(text).unwrap();
        spec.materialize(&spec.parse_label(root).unwrap(), None).unwrap()
    }

    #[test]
    fn eigen_examples() {
        let e = eig_symmetric(&DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]), 1e-12).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);

        let g = whole("grid:3x1", "0,0");
        let s = kernel(&g).unwrap().truncate(&[0, 1, 2]).unwrap().symmetrize();
        let e = eig_symmetric(&s, 1e-12).unwrap();
        for (got, want) in e.values.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let top = e.vector(2);
        let r2 = 2f64.sqrt();
        for (got, want) in top.iter().zip([0.5, r2 / 2.0, 0.5]) {
            assert!((got - want).abs() < 1e-14, "{top:?}");
        }

        let e = eig_symmetric(&DenseMatrix::zeros(1, 1), 1e-12).unwrap();
        assert_eq!(e.values, vec![0.0]);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]);
        assert!(matches!(eig_symmetric(&m, 1e-12), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn local_measures() {
        let k2 = whole("grid:2x1", "0,0");
        let fk = kernel(&k2).unwrap().truncate(&[0, 1]).unwrap();
        let mu = local_spectral_measure(&fk, 0).unwrap();
        assert!((mu.mass_near(-1.0, 1e-12) - 0.5).abs() < 1e-14);
        assert!((mu.mass_near(1.0, 1e-12) - 0.5).abs() < 1e-14);

        let p3 = whole("grid:3x1", "0,0");
        let fk = kernel(&p3).unwrap().truncate(&[0, 1, 2]).unwrap();
        let centre = local_spectral_measure(&fk, 1).unwrap();
        assert!((centre.mass_near(-1.0, 1e-12) - 0.5).abs() < 1e-14);
        assert!((centre.mass_near(1.0, 1e-12) - 0.5).abs() < 1e-14);
        assert!(centre.mass_near(0.0, 1e-12) < 1e-14);
        let end = local_spectral_measure(&fk, 0).unwrap();
        assert!((end.mass_near(-1.0, 1e-12) - 0.25).abs() < 1e-14);
        assert!((end.mass_near(0.0, 1e-12) - 0.5).abs() < 1e-14);
        assert!((end.mass_near(1.0, 1e-12) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn moment_examples() {
        let pm = AtomicMeasure::new(
            vec![
                Atom {
                    location: -1.0,
                    mass: 0.5,
                },
                Atom {
                    location: 1.0,
                    mass: 0.5,
                },
            ],
            0.0,
        );
        assert_eq!(moments(&pm, 4), vec![1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(moments(&AtomicMeasure::dirac(0.0), 3), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn merge_examples() {
        let mu = AtomicMeasure::new(
            vec![
                Atom {
                    location: 0.9999999,
                    mass: 0.25,
                },
                Atom {
                    location: 1.0,
                    mass: 0.5,
                },
            ],
            0.0,
        );
        let merged = merge_atoms(&mu, 1e-6);
        assert_eq!(merged.atoms().len(), 1);
        assert_eq!(merged.total_mass(), 0.75);
        assert_eq!(merge_atoms(&mu, 0.0), mu);
    }

    #[test]
    fn k2_mixture_is_three_atoms() {
        let g = whole("grid:2x1", "0,0");
        let k = kernel(&g).unwrap();
        let mu = mixture_measure(&k, 0, &Probability::parse("1/2").unwrap(), 2).unwrap();
        assert_eq!(mu.atoms().len(), 3);
        assert!((mu.mass_near(0.0, 1e-12) - 0.75).abs() < 1e-15);
        assert!((mu.mass_near(-1.0, 1e-12) - 0.125).abs() < 1e-15);
        assert!((mu.mass_near(1.0, 1e-12) - 0.125).abs() < 1e-15);
        assert_eq!(mu.residual(), 0.0);
        let got = moments(&mu, 4);
        for (a, b) in got.iter().zip([1.0, 0.0, 0.25, 0.0, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = 0.3;
        let mu = mixture_measure(&k, 0, &Probability::from_f64(p).unwrap(), 2).unwrap();
        assert!((mu.mass_near(1.0, 1e-12) - p * p / 2.0).abs() < 1e-15);
        assert!((mu.mass_near(-1.0, 1e-12) - p * p / 2.0).abs() < 1e-15);
    }

    #[test]
    fn p3_mixture_second_moment() {
        let g = whole("grid:3x1", "1,0");
        let k = kernel(&g).unwrap();
        let mu = mixture_measure(&k, 0, &Probability::parse("1/2").unwrap(), 3).unwrap();
        let m = moments(&mu, 2);
        assert!((m[0] - 1.0).abs() < 1e-15);
        assert!((m[2] - 0.25).abs() < 1e-15);
        // {a,b,c} contributes p³/2 at ±1; {a,b} and {b,c} put their mass at ±1/√2.
        assert!((mu.mass_near(1.0, 1e-9) - 1.0 / 16.0).abs() < 1e-15);
        let r = 0.5f64.sqrt();
        assert!((mu.mass_near(r, 1e-9) - 2.0 * 0.125 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_output_shape() {
        let mu = AtomicMeasure::new(
            vec![
                Atom {
                    location: 1.0,
                    mass: 0.5,
                },
                Atom {
                    location: -1.0,
                    mass: 0.5,
                },
            ],
            0.0,
        );
        let mut buf = Vec::new();
        mu.write_csv(&mut buf, &[("p".into(), "0.5".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# p: 0.5");
        assert_eq!(lines[1], "location,mass");
        assert!(lines[2].starts_with("-1"));
        let mut buf = Vec::new();
        mu.write_cdf_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().ends_with("1.00000000000000000e0"));
    }
}
