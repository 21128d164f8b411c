//! Finitely supported matrix laws, the gauges `‖g‖`, `ι(g)`, `N(g)`, and
//! heuristic checkers for the standing conditions on the law.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{NormKind, Space};
use crate::montecarlo::rng::stream_rng;

const DET_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassTag {
    /// Invertible matrices acting on the projective space.
    Invertible,
    /// Allowable nonnegative matrices acting on the positive sphere.
    Positive,
}

impl ClassTag {
    pub fn space(self) -> Space {
        match self {
            ClassTag::Invertible => Space::Projective,
            ClassTag::Positive => Space::PositiveSphere,
        }
    }
}

/// One support point of the law: a row-major `d×d` matrix and its mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub matrix: Vec<f64>,
    pub prob: f64,
}

/// A finitely supported law on `d×d` matrices. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    dim: usize,
    atoms: Vec<Atom>,
    class: ClassTag,
    norm: NormKind,
}

impl Ensemble {
    /// Builds and validates an ensemble from row-major matrices and positive
    /// masses; the masses are renormalized to sum to one.
    pub fn build(entries: Vec<(Vec<f64>, f64)>, class: ClassTag, norm: NormKind) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let dim = (entries[0].0.len() as f64).sqrt().round() as usize;
        for (index, (m, p)) in entries.iter().enumerate() {
            if dim == 0 || m.len() != dim * dim {
                return Err(Error::NonSquare { index, len: m.len(), dim });
            }
            if !(*p > 0.0) || !p.is_finite() {
                return Err(Error::ZeroProbability(index));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("atom {index} has a non-finite entry")));
            }
            match class {
                ClassTag::Invertible => {
                    let det = to_dmatrix(m, dim).determinant();
                    if !(det.abs() > DET_EPS) {
                        return Err(Error::NotInvertible { index, det });
                    }
                }
                ClassTag::Positive => {
                    if !is_allowable(m, dim) {
                        return Err(Error::NotAllowable(index));
                    }
                }
            }
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        let atoms = entries
            .into_iter()
            .map(|(matrix, p)| Atom { matrix, prob: p / total })
            .collect();
        Ok(Ensemble { dim, atoms, class, norm })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn class(&self) -> ClassTag {
        self.class
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn space(&self) -> Space {
        self.class.space()
    }

    /// If every atom is a positive multiple of the identity, the multipliers.
    pub fn conformal_scales(&self) -> Option<Vec<f64>> {
        self.atoms
            .iter()
            .map(|a| {
                let c = a.matrix[0];
                let scalar = (0..self.dim).all(|i| {
                    (0..self.dim).all(|j| a.matrix[i * self.dim + j] == if i == j { c } else { 0.0 })
                });
                (scalar && c > 0.0).then_some(c)
            })
            .collect()
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("ensemble serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Named ensembles used throughout the tests and the CLI.
pub mod presets {
    use super::*;

    /// `{c·I₂}` with probability one.
    pub fn point_mass(c: f64) -> Ensemble {
        conformal(&[(c, 1.0)])
    }

    /// `{cᵢ·I₂}` with masses `pᵢ`.
    pub fn conformal(scales: &[(f64, f64)]) -> Ensemble {
        Ensemble::build(
            scales.iter().map(|&(c, p)| (vec![c, 0.0, 0.0, c], p)).collect(),
            ClassTag::Invertible,
            NormKind::Euclidean,
        )
        .expect("conformal preset is valid")
    }

    /// `{2I, 3I}` with masses `(p, 1 - p)`. Lattice-valued log norms.
    pub fn conformal_pair(p: f64) -> Ensemble {
        conformal(&[(2.0, p), (3.0, 1.0 - p)])
    }

    /// `{2I, 3I, 5I; 0.6, 0.3, 0.1}`: asymmetric and non-lattice.
    pub fn conformal_triple() -> Ensemble {
        conformal(&[(2.0, 0.6), (3.0, 0.3), (5.0, 0.1)])
    }

    /// `{[[2,1],[1,1]], [[1,1],[1,2]]; ½, ½}`.
    pub fn positive_pair() -> Ensemble {
        Ensemble::build(
            vec![(vec![2.0, 1.0, 1.0, 1.0], 0.5), (vec![1.0, 1.0, 1.0, 2.0], 0.5)],
            ClassTag::Positive,
            NormKind::Euclidean,
        )
        .expect("positive pair is valid")
    }

    /// `{[[1,1],[0,1]], [[1,0],[1,1]]; ½, ½}`, generating SL(2, ℤ)'s positive
    /// monoid; strongly irreducible and proximal on the projective line.
    pub fn unipotent_pair() -> Ensemble {
        Ensemble::build(
            vec![(vec![1.0, 1.0, 0.0, 1.0], 0.5), (vec![1.0, 0.0, 1.0, 1.0], 0.5)],
            ClassTag::Invertible,
            NormKind::Euclidean,
        )
        .expect("unipotent pair is valid")
    }

    pub fn by_name(name: &str) -> Option<Ensemble> {
        Some(match name {
            "positive-pair" => positive_pair(),
            "unipotent-pair" => unipotent_pair(),
            "conformal-pair" => conformal_pair(0.5),
            "conformal-pair-asym" => conformal_pair(0.8),
            "conformal-triple" => conformal_triple(),
            "point-mass" => point_mass(2.0),
            _ => return None,
        })
    }

    pub const NAMES: &[&str] = &[
        "positive-pair",
        "unipotent-pair",
        "conformal-pair",
        "conformal-pair-asym",
        "conformal-triple",
        "point-mass",
    ];
}

pub(crate) fn to_dmatrix(m: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, m)
}

/// Nonnegative with a positive entry in every row and every column.
pub fn is_allowable(m: &[f64], d: usize) -> bool {
    if m.iter().any(|&x| x < 0.0) {
        return false;
    }
    let rows = (0..d).all(|i| (0..d).any(|j| m[i * d + j] > 0.0));
    let cols = (0..d).all(|j| (0..d).any(|i| m[i * d + j] > 0.0));
    rows && cols
}

pub(crate) fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// `‖g‖`, `ι(g)` and `N(g) = max(‖g‖, ι(g)⁻¹)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixGauges {
    pub norm_g: f64,
    pub iota: f64,
    pub big_n: f64,
    /// `iota` is a sampled upper estimate of the infimum (d > 2, singular
    /// positive matrices only).
    pub sampled: bool,
}

/// Computes the gauges of a row-major `d×d` matrix.
pub fn matrix_gauges(g: &[f64], class: ClassTag, norm: NormKind) -> Result<MatrixGauges> {
    let d = (g.len() as f64).sqrt().round() as usize;
    if d == 0 || d * d != g.len() {
        return Err(Error::NonSquare { index: 0, len: g.len(), dim: d });
    }
    let m = to_dmatrix(g, d);
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let invertible = smin > DET_EPS;
    if class == ClassTag::Invertible && !invertible {
        return Err(Error::SingularInvertible(smin));
    }
    if class == ClassTag::Positive && !is_allowable(g, d) {
        return Err(Error::NotAllowable(0));
    }
    let mut sampled = false;
    let (norm_g, iota) = match norm {
        NormKind::Euclidean => {
            let iota = if invertible {
                smin
            } else if d == 2 {
                min_over_quadrant(g, norm)
            } else {
                sampled = true;
                sampled_min_positive(g, d, norm)
            };
            (smax, iota)
        }
        NormKind::L1 => {
            let col_sums: Vec<f64> =
                (0..d).map(|j| (0..d).map(|i| g[i * d + j].abs()).sum()).collect();
            let norm_g = col_sums.iter().cloned().fold(0.0, f64::max);
            let iota = if invertible {
                let inv = m.try_inverse().ok_or(Error::SingularInvertible(smin))?;
                let inv_norm = (0..d)
                    .map(|j| (0..d).map(|i| inv[(i, j)].abs()).sum::<f64>())
                    .fold(0.0, f64::max);
                1.0 / inv_norm
            } else {
                // for x ≥ 0, |gx|₁ = Σⱼ colsumⱼ xⱼ, minimized at a vertex
                col_sums.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            (norm_g, iota)
        }
    };
    Ok(MatrixGauges {
        norm_g,
        iota,
        big_n: norm_g.max(1.0 / iota),
        sampled,
    })
}

/// Minimum of `|g(cos θ, sin θ)|/|(cos θ, sin θ)|` over `θ ∈ [0, π/2]`: a
/// 4096-point scan followed by golden-section refinement.
fn min_over_quadrant(g: &[f64], norm: NormKind) -> f64 {
    let f = |theta: f64| {
        let x = [theta.cos().max(0.0), theta.sin().max(0.0)];
        let mut out = [0.0; 2];
        crate::geometry::apply_matrix(g, &x, &mut out, norm) / norm.norm(&x)
    };
    const GRID: usize = 4096;
    let h = std::f64::consts::FRAC_PI_2 / GRID as f64;
    let (k, mut best) = (0..=GRID)
        .map(|k| (k, f(k as f64 * h)))
        .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
    let mut lo = (k as f64 - 1.0).max(0.0) * h;
    let mut hi = ((k + 1).min(GRID)) as f64 * h;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..100 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(b);
        }
    }
    best = best.min(fa).min(fb);
    best
}

fn sampled_min_positive(g: &[f64], d: usize, norm: NormKind) -> f64 {
    let mut rng = stream_rng(0x9e37_79b9, 0);
    let mut x = vec![0.0; d];
    let mut out = vec![0.0; d];
    let mut best = f64::INFINITY;
    for k in 0..100_000 {
        if k < d {
            x.iter_mut().enumerate().for_each(|(i, v)| *v = if i == k { 1.0 } else { 0.0 });
        } else {
            x.iter_mut().for_each(|v| *v = -rng.gen::<f64>().ln());
        }
        let len = crate::geometry::apply_matrix(g, &x, &mut out, norm) / norm.norm(&x);
        best = best.min(len);
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrreducibilityFlag {
    LikelyHolds,
    LikelyFails,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArithmeticityFlag {
    LikelyNonArithmetic,
    Suspect,
    Unknown,
}

/// Exact and heuristic diagnostics of the standing conditions. Heuristic
/// fields never gate computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Every atom (hence every product) is allowable. Exact.
    pub allowable: bool,
    /// A product of length at most `depth` with all entries positive exists.
    pub strictly_positive_product_found: bool,
    pub witness_length: Option<usize>,
    /// Median of `|λ₁|/|λ₂|` over sampled products of length 50.
    pub proximality_gap_stat: f64,
    pub irreducibility: IrreducibilityFlag,
    pub arithmeticity: ArithmeticityFlag,
    /// Largest tested `η` with finite `E[N(g)^η]`.
    pub moment_exponent_probe: f64,
}

const PROXIMAL_LEN: usize = 50;
const MAX_ENUMERATED: usize = 1 << 14;

/// Runs the condition checkers. Deterministic given `seed`.
pub fn check_conditions(ens: &Ensemble, depth: usize, trials: usize, seed: u64) -> Result<ConditionReport> {
    if depth == 0 || trials == 0 {
        return Err(Error::invalid("depth and trials must be at least 1"));
    }
    let d = ens.dim();
    let allowable = ens.atoms().iter().all(|a| is_allowable(&a.matrix, d));
    let witness_length = positive_witness(ens, depth);
    let proximality_gap_stat = proximality_stat(ens, trials, seed);
    let irreducibility = irreducibility_flag(ens, proximality_gap_stat, witness_length);
    let arithmeticity = arithmeticity_flag(ens, depth);

    let mut moment_exponent_probe = 0.0;
    for eta in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let mut total = 0.0;
        for a in ens.atoms() {
            match matrix_gauges(&a.matrix, ens.class(), ens.norm()) {
                Ok(g) => total += a.prob * g.big_n.powf(eta),
                Err(_) => total = f64::INFINITY,
            }
        }
        if total.is_finite() {
            moment_exponent_probe = eta;
        }
    }

    Ok(ConditionReport {
        allowable,
        strictly_positive_product_found: witness_length.is_some(),
        witness_length,
        proximality_gap_stat,
        irreducibility,
        arithmeticity,
        moment_exponent_probe,
    })
}

/// Shortest product length (≤ depth) with all entries positive. Nonnegative
/// atoms are searched on zero patterns, which is exact; otherwise products
/// are enumerated numerically up to a size cap.
fn positive_witness(ens: &Ensemble, depth: usize) -> Option<usize> {
    let d = ens.dim();
    let nonneg = ens.atoms().iter().all(|a| a.matrix.iter().all(|&x| x >= 0.0));
    if nonneg {
        let pattern = |m: &[f64]| m.iter().map(|&x| x > 0.0).collect::<Vec<bool>>();
        let atoms: Vec<Vec<bool>> = ens.atoms().iter().map(|a| pattern(&a.matrix)).collect();
        let mut frontier: HashSet<Vec<bool>> = atoms.iter().cloned().collect();
        let mut seen = frontier.clone();
        for len in 1..=depth {
            if frontier.iter().any(|p| p.iter().all(|&b| b)) {
                return Some(len);
            }
            let mut next = HashSet::new();
            for p in &frontier {
                for a in &atoms {
                    let mut q = vec![false; d * d];
                    for i in 0..d {
                        for j in 0..d {
                            q[i * d + j] = (0..d).any(|k| a[i * d + k] && p[k * d + j]);
                        }
                    }
                    if seen.insert(q.clone()) {
                        next.insert(q);
                    }
                }
            }
            if next.is_empty() {
                return None;
            }
            frontier = next;
        }
        None
    } else {
        let mut level: Vec<Vec<f64>> = ens.atoms().iter().map(|a| a.matrix.clone()).collect();
        for len in 1..=depth {
            if level.iter().any(|m| m.iter().all(|&x| x > 0.0)) {
                return Some(len);
            }
            if level.len() * ens.atoms().len() > MAX_ENUMERATED {
                return None;
            }
            level = level
                .iter()
                .flat_map(|p| ens.atoms().iter().map(move |a| matmul(&a.matrix, p, d)))
                .collect();
        }
        None
    }
}

/// Eigenvalue moduli of a square matrix, sorted decreasingly.
fn eigen_moduli(m: &[f64], d: usize) -> Vec<f64> {
    let mut mods: Vec<f64> = to_dmatrix(m, d)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    mods.sort_by(|a, b| b.total_cmp(a));
    mods
}

fn proximality_stat(ens: &Ensemble, trials: usize, seed: u64) -> f64 {
    let d = ens.dim();
    if d < 2 {
        return f64::INFINITY;
    }
    let cum = cumulative(ens);
    let mut stats: Vec<f64> = (0..trials)
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let mut prod = identity(d);
            for _ in 0..PROXIMAL_LEN {
                let i = pick(&cum, rng.gen::<f64>());
                prod = matmul(&ens.atoms()[i].matrix, &prod, d);
                let scale = prod.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prod.iter_mut().for_each(|x| *x /= scale);
            }
            let mods = eigen_moduli(&prod, d);
            if mods[1] > 0.0 {
                mods[0] / mods[1]
            } else {
                f64::INFINITY
            }
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    stats[stats.len() / 2]
}

fn irreducibility_flag(ens: &Ensemble, prox: f64, witness: Option<usize>) -> IrreducibilityFlag {
    let d = ens.dim();
    if ens.conformal_scales().is_some() {
        return IrreducibilityFlag::LikelyFails;
    }
    match ens.class() {
        ClassTag::Positive => {
            if witness.is_some() {
                IrreducibilityFlag::LikelyHolds
            } else {
                IrreducibilityFlag::Unknown
            }
        }
        ClassTag::Invertible if d == 2 => {
            if common_invariant_line(ens) {
                IrreducibilityFlag::LikelyFails
            } else if prox > 1.0 + 1e-6 {
                IrreducibilityFlag::LikelyHolds
            } else {
                IrreducibilityFlag::Unknown
            }
        }
        ClassTag::Invertible => IrreducibilityFlag::Unknown,
    }
}

/// Real eigenvectors of a 2×2 matrix (all of ℝ² for scalar matrices: `None`).
fn real_eigenvectors_2x2(m: &[f64]) -> Option<Vec<[f64; 2]>> {
    let (a, b, c, dd) = (m[0], m[1], m[2], m[3]);
    if b == 0.0 && c == 0.0 && a == dd {
        return None;
    }
    let tr = a + dd;
    let disc = tr * tr / 4.0 - (a * dd - b * c);
    if disc < 0.0 {
        return Some(vec![]);
    }
    let mut out = vec![];
    for lam in [tr / 2.0 + disc.sqrt(), tr / 2.0 - disc.sqrt()] {
        let v = if b.abs() > 1e-14 || (a - lam).abs() > 1e-14 {
            [b, lam - a]
        } else {
            [lam - dd, c]
        };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if n > 0.0 {
            out.push([v[0] / n, v[1] / n]);
        }
    }
    Some(out)
}

fn common_invariant_line(ens: &Ensemble) -> bool {
    let candidates = ens
        .atoms()
        .iter()
        .find_map(|a| real_eigenvectors_2x2(&a.matrix));
    let Some(candidates) = candidates else {
        return true;
    };
    candidates.iter().any(|v| {
        ens.atoms().iter().all(|a| {
            let m = &a.matrix;
            let w = [m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]];
            (w[0] * v[1] - w[1] * v[0]).abs() <= 1e-10 * (w[0].hypot(w[1]) + 1.0)
        })
    })
}

/// Number of continued-fraction terms before the expansion of `x`
/// terminates (remainder below tolerance or a huge partial quotient).
pub fn continued_fraction_depth(x: f64, max_terms: usize) -> usize {
    let mut r = x.abs();
    for depth in 1..=max_terms {
        let frac = r - r.floor();
        if frac < 1e-9 || frac > 1.0 - 1e-9 {
            return depth;
        }
        r = 1.0 / frac;
        if r > 1e6 {
            return depth;
        }
    }
    max_terms
}

const CF_NON_ARITHMETIC_DEPTH: usize = 6;

/// Lattice test on `log ρ(g)` for products `g` with a fixed point in the
/// space: differences between equal-length products must lie in a common
/// lattice for an arithmetic law; an irrational-looking ratio of two such
/// differences rules that out.
fn arithmeticity_flag(ens: &Ensemble, depth: usize) -> ArithmeticityFlag {
    let d = ens.dim();
    let max_len = depth.min(6);
    let mut diffs: Vec<f64> = vec![];
    let mut level: Vec<Vec<f64>> = vec![identity(d)];
    for _ in 1..=max_len {
        if level.len() * ens.atoms().len() > MAX_ENUMERATED {
            break;
        }
        level = level
            .iter()
            .flat_map(|p| ens.atoms().iter().map(move |a| matmul(&a.matrix, p, d)))
            .collect();
        let logs: Vec<f64> = level
            .iter()
            .filter_map(|m| {
                let eligible = match ens.class() {
                    ClassTag::Positive => m.iter().all(|&x| x > 0.0),
                    ClassTag::Invertible => true,
                };
                if !eligible {
                    return None;
                }
                let mods = eigen_moduli(m, d);
                let scalar = mods.iter().all(|&l| (l - mods[0]).abs() <= 1e-12 * mods[0])
                    && is_scalar(m, d);
                let proximal = mods.len() < 2 || mods[0] > mods[1] * (1.0 + 1e-9);
                (scalar || proximal).then(|| mods[0].ln())
            })
            .collect();
        for i in 0..logs.len() {
            for j in (i + 1)..logs.len() {
                let diff = (logs[i] - logs[j]).abs();
                if diff > 1e-9 {
                    diffs.push(diff);
                }
            }
        }
    }
    if diffs.is_empty() {
        return if level.len() > 1 || ens.atoms().len() == 1 {
            ArithmeticityFlag::Suspect
        } else {
            ArithmeticityFlag::Unknown
        };
    }
    diffs.sort_by(|a, b| b.total_cmp(a));
    let reference = diffs[0];
    if diffs
        .iter()
        .any(|&x| continued_fraction_depth(x / reference, 12) >= CF_NON_ARITHMETIC_DEPTH)
    {
        ArithmeticityFlag::LikelyNonArithmetic
    } else {
        ArithmeticityFlag::Suspect
    }
}

fn is_scalar(m: &[f64], d: usize) -> bool {
    (0..d).all(|i| (0..d).all(|j| if i == j { m[i * d + j] == m[0] } else { m[i * d + j] == 0.0 }))
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    (0..d).for_each(|i| m[i * d + i] = 1.0);
    m
}

/// Cumulative atom masses with the last entry pinned to one.
pub(crate) fn cumulative(ens: &Ensemble) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cum: Vec<f64> = ens
        .atoms()
        .iter()
        .map(|a| {
            acc += a.prob;
            acc
        })
        .collect();
    if let Some(last) = cum.last_mut() {
        *last = 1.0;
    }
    cum
}

#[inline]
pub(crate) fn pick(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}
