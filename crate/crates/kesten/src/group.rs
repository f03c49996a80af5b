//! Componentwise similarities, the homogeneous norm, and the structure of
//! the closed group generated by a set of scales.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::scalar::Real;

/// Orthogonal block decomposition `V = ⊕_j V_j` with exponents
/// `1 = λ_1 < λ_2 < … < λ_l` attached to the blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStructure<T> {
    exponents: Vec<T>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl<T: Real> BlockStructure<T> {
    pub fn new(exponents: Vec<T>, dims: Vec<usize>) -> Result<Self> {
        if exponents.is_empty() || exponents.len() != dims.len() {
            return Err(Error::Input("exponent/dimension lists mismatch".into()));
        }
        if (exponents[0] - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::Input("first block exponent must equal 1".into()));
        }
        for w in exponents.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Input("block exponents must be strictly increasing".into()));
            }
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Input("block dimensions must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0usize;
        for &d in &dims {
            offsets.push(acc);
            acc += d;
        }
        Ok(BlockStructure {
            exponents,
            dims,
            offsets,
            dim: acc,
        })
    }

    /// Euclidean space: one block, exponent 1.
    pub fn euclidean(dim: usize) -> Self {
        Self::new(vec![T::one()], vec![dim]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn exponents(&self) -> &[T] {
        &self.exponents
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn block_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j] + self.dims[j]
    }

    pub fn is_euclidean(&self) -> bool {
        self.n_blocks() == 1
    }

    /// Homogeneous norm `τ(x) = Σ_j |x_j|^{1/λ_j}` (Euclidean norm per block).
    pub fn tau(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::Input(format!(
                "vector has dimension {}, expected {}",
                x.len(),
                self.dim
            )));
        }
        let mut acc = T::zero();
        for j in 0..self.n_blocks() {
            let n = norm2(&x[self.block_range(j)]);
            if n > T::zero() {
                acc += n.powf(T::one() / self.exponents[j]);
            }
        }
        Ok(acc)
    }

    /// Applies the pure dilation `γ_a` (each block multiplied by `a^{λ_j}`).
    pub fn dilate(&self, a: T, x: &[T]) -> Vec<T> {
        let mut out = x.to_vec();
        self.dilate_in_place(a, &mut out);
        out
    }

    pub fn dilate_in_place(&self, a: T, x: &mut [T]) {
        for j in 0..self.n_blocks() {
            let f = a.powf(self.exponents[j]);
            for v in &mut x[self.block_range(j)] {
                *v *= f;
            }
        }
    }

    /// Projects onto the blocks selected by `keep` (others zeroed).
    pub fn project(&self, x: &[T], keep: impl Fn(T) -> bool) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for j in 0..self.n_blocks() {
            if keep(self.exponents[j]) {
                let r = self.block_range(j);
                out[r.clone()].copy_from_slice(&x[r]);
            }
        }
        out
    }

    /// Radial coordinate: the unique `a > 0` with `|γ_{1/a} x| = 1`
    /// (Euclidean unit sphere). Equals `|x|` when there is a single block.
    pub fn radial(&self, x: &[T]) -> T {
        if self.is_euclidean() {
            return norm2(x);
        }
        // |γ_{1/a} x|² = Σ_j a^{-2λ_j} |x_j|² is strictly decreasing in a.
        let norms: Vec<T> = (0..self.n_blocks())
            .map(|j| norm2(&x[self.block_range(j)]))
            .collect();
        let total: T = norms.iter().copied().sum();
        if total == T::zero() {
            return T::zero();
        }
        let g = |a: T| -> T {
            let mut s = T::zero();
            for (j, n) in norms.iter().enumerate() {
                if *n > T::zero() {
                    s += (*n / a.powf(self.exponents[j])).powi(2);
                }
            }
            s - T::one()
        };
        // bracket then bisect on log a
        let mut lo = T::of(1e-30);
        let mut hi = T::of(1e30);
        debug_assert!(g(lo) > T::zero() && g(hi) < T::zero());
        for _ in 0..200 {
            let mid = (lo.ln() + hi.ln()) * T::of(0.5);
            let mid = mid.exp();
            if g(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi / lo - T::one()).abs() < T::epsilon() * T::of(4.0) {
                break;
            }
        }
        (lo.ln() * T::of(0.5) + hi.ln() * T::of(0.5)).exp()
    }
}

/// A τ-similarity: base scale `a` with one orthogonal part per block,
/// acting by `(gx)_j = a^{λ_j} K_j x_j`. Then `τ(gx) = a τ(x)`.
#[derive(Clone, Debug)]
pub struct Similarity<T> {
    blocks: Arc<BlockStructure<T>>,
    scale: T,
    orthogonal: Vec<Matrix<T>>,
    block_scales: Vec<T>,
}

impl<T: Real> Similarity<T> {
    pub fn new(blocks: Arc<BlockStructure<T>>, scale: T, orthogonal: Vec<Matrix<T>>) -> Result<Self> {
        if scale <= T::zero() {
            return Err(Error::Input("similarity scale must be positive".into()));
        }
        if orthogonal.len() != blocks.n_blocks() {
            return Err(Error::Input("one orthogonal part per block required".into()));
        }
        let tol = T::tol(1e-12);
        for (j, k) in orthogonal.iter().enumerate() {
            if k.rows() != blocks.block_dims()[j] || k.cols() != blocks.block_dims()[j] {
                return Err(Error::Input(format!("orthogonal part {j} has wrong shape")));
            }
            if k.orthogonality_defect() > tol {
                return Err(Error::Input(format!(
                    "block {j} part is not orthogonal (defect {})",
                    k.orthogonality_defect()
                )));
            }
        }
        let block_scales = blocks
            .exponents()
            .iter()
            .map(|l| scale.powf(*l))
            .collect();
        Ok(Similarity {
            blocks,
            scale,
            orthogonal,
            block_scales,
        })
    }

    /// Canonical encoding from per-block scales: they must equal `a^{λ_j}`
    /// for a common base scale `a` within `1e-10`.
    pub fn from_block_scales(
        blocks: Arc<BlockStructure<T>>,
        per_block: &[T],
        orthogonal: Vec<Matrix<T>>,
    ) -> Result<Self> {
        if per_block.len() != blocks.n_blocks() {
            return Err(Error::Input("per-block scale count mismatch".into()));
        }
        let a = per_block[0]; // λ_1 = 1
        let tol = T::tol(1e-10);
        for (j, s) in per_block.iter().enumerate() {
            let expect = a.powf(blocks.exponents()[j]);
            if ((*s - expect) / expect).abs() > tol {
                return Err(Error::Input(format!(
                    "per-block scale {j} is not a^λ_j for a common base scale"
                )));
            }
        }
        Self::new(blocks, a, orthogonal)
    }

    pub fn identity(blocks: Arc<BlockStructure<T>>) -> Self {
        let orthogonal = blocks
            .block_dims()
            .iter()
            .map(|&d| Matrix::identity(d))
            .collect();
        Self::new(blocks, T::one(), orthogonal).expect("valid")
    }

    /// Pure dilation `γ_a`.
    pub fn dilation(blocks: Arc<BlockStructure<T>>, a: T) -> Result<Self> {
        let orthogonal = blocks
            .block_dims()
            .iter()
            .map(|&d| Matrix::identity(d))
            .collect();
        Self::new(blocks, a, orthogonal)
    }

    /// One-dimensional similarity `x ↦ ±a·x` (sign is the orthogonal part).
    pub fn scalar(scale: T, negative: bool) -> Result<Self> {
        let blocks = Arc::new(BlockStructure::euclidean(1));
        let k = Matrix::from_rows(&[vec![if negative { -T::one() } else { T::one() }]])?;
        Self::new(blocks, scale, vec![k])
    }

    /// Planar rotation-scaling for the Euclidean `d = 2` case.
    pub fn rotation2(scale: T, angle: T) -> Result<Self> {
        let blocks = Arc::new(BlockStructure::<T>::euclidean(2));
        let (s, c) = (angle.sin(), angle.cos());
        let k = Matrix::from_rows(&[vec![c, -s], vec![s, c]])?;
        Self::new(blocks, scale, vec![k])
    }

    pub fn blocks(&self) -> &Arc<BlockStructure<T>> {
        &self.blocks
    }

    /// `|g| = sup_{τ(x)=1} τ(gx)`, the base scale in canonical encoding.
    pub fn norm(&self) -> T {
        self.scale
    }

    pub fn orthogonal_parts(&self) -> &[Matrix<T>] {
        &self.orthogonal
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.blocks.dim());
        for j in 0..self.blocks.n_blocks() {
            let r = self.blocks.block_range(j);
            self.orthogonal[j].matvec_into(&x[r.clone()], &mut out[r]);
        }
        for j in 0..self.blocks.n_blocks() {
            let f = self.block_scales[j];
            for v in &mut out[self.blocks.block_range(j)] {
                *v *= f;
            }
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.blocks.as_ref() != other.blocks.as_ref() {
            return Err(Error::Input("block structure mismatch in compose".into()));
        }
        let orthogonal = self
            .orthogonal
            .iter()
            .zip(other.orthogonal.iter())
            .map(|(a, b)| a.matmul(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            self.blocks.clone(),
            self.scale * other.scale,
            orthogonal,
        )
    }

    /// Adjoint with respect to the Euclidean inner product:
    /// blockwise `a^{λ_j} K_jᵀ`, so `⟨gx, y⟩ = ⟨x, g*y⟩`.
    pub fn adjoint(&self) -> Self {
        let orthogonal = self.orthogonal.iter().map(|k| k.transpose()).collect();
        Self::new(self.blocks.clone(), self.scale, orthogonal).expect("transpose stays orthogonal")
    }

    /// Full `d × d` matrix form (block diagonal).
    pub fn matrix(&self) -> Matrix<T> {
        let d = self.blocks.dim();
        let mut m = Matrix::zeros(d, d);
        for j in 0..self.blocks.n_blocks() {
            let r = self.blocks.block_range(j);
            let k = &self.orthogonal[j];
            let f = self.block_scales[j];
            for (bi, i) in r.clone().enumerate() {
                for (bj, jj) in r.clone().enumerate() {
                    m[(i, jj)] = k[(bi, bj)] * f;
                }
            }
        }
        m
    }
}

/// The closed multiplicative group generated by a set of scales: either all
/// of `(0, ∞)` or the cyclic group `p^ℤ` for some `p > 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupVariant<T> {
    Dense,
    Lattice(T),
}

#[derive(Clone, Debug)]
pub struct GroupStructure<T> {
    pub variant: GroupVariant<T>,
    pub generator_scales: Vec<T>,
}

impl<T: Real> GroupStructure<T> {
    pub fn is_lattice(&self) -> bool {
        matches!(self.variant, GroupVariant::Lattice(_))
    }

    pub fn lattice_base(&self) -> Option<T> {
        match self.variant {
            GroupVariant::Lattice(p) => Some(p),
            GroupVariant::Dense => None,
        }
    }

    /// Rounds a positive scale to the nearest group element (identity in the
    /// dense case, nearest power of `p` otherwise).
    pub fn snap_scale(&self, s: T) -> T {
        match self.variant {
            GroupVariant::Dense => s,
            GroupVariant::Lattice(p) => {
                let k = (s.ln() / p.ln()).round();
                p.powf(k)
            }
        }
    }
}

const GCD_DEPTH_CAP: usize = 40;
const MAX_LATTICE_MULTIPLE: f64 = 1e8;

/// Real gcd by the Euclidean algorithm with a depth cap; `None` means the
/// pair behaved like an irrational ratio at this tolerance.
fn real_gcd<T: Real>(mut a: T, mut b: T, tol: T) -> Option<T> {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    for _ in 0..GCD_DEPTH_CAP {
        if b <= tol {
            return Some(a);
        }
        let r = a % b;
        a = b;
        b = r;
    }
    None
}

/// Decides whether the scales generate a dense subgroup of `(0, ∞)` or a
/// lattice `p^ℤ`, using a real-gcd / continued-fraction procedure on the
/// log-scales. Finite precision cannot certify irrationality; the depth cap
/// and the integer-multiple bound make the decision deterministic.
pub fn detect_group_structure<T: Real>(scales: &[T], tol: T) -> Result<GroupStructure<T>> {
    if scales.is_empty() {
        return Err(Error::Structure("no scales given".into()));
    }
    if scales.iter().any(|s| *s <= T::zero()) {
        return Err(Error::Input("scales must be positive".into()));
    }
    let logs: Vec<T> = scales
        .iter()
        .map(|s| s.ln().abs())
        .filter(|l| *l > T::tol(1e-14))
        .collect();
    if logs.is_empty() {
        return Err(Error::Structure(
            "all scales equal 1; the scale group is trivial".into(),
        ));
    }
    let max_log = logs.iter().copied().fold(T::zero(), T::max);
    let abs_tol = tol * max_log;
    let mut g = logs[0];
    for l in &logs[1..] {
        match real_gcd(g, *l, abs_tol) {
            Some(x) => g = x,
            None => {
                return Ok(GroupStructure {
                    variant: GroupVariant::Dense,
                    generator_scales: scales.to_vec(),
                })
            }
        }
    }
    // Verify every log-scale is an integer multiple of g within tolerance.
    for l in &logs {
        let k = (*l / g).round();
        if k.to_f64() > MAX_LATTICE_MULTIPLE || (k * g - *l).abs() > abs_tol {
            return Ok(GroupStructure {
                variant: GroupVariant::Dense,
                generator_scales: scales.to_vec(),
            });
        }
    }
    Ok(GroupStructure {
        variant: GroupVariant::Lattice(g.exp()),
        generator_scales: scales.to_vec(),
    })
}

/// Default relative tolerance for lattice detection.
pub fn default_gcd_tol<T: Real>() -> T {
    T::tol(1e-9)
}

/// Normalizing scale for partial sums at time `n`: the group element
/// `c` with `⌊|c|^{-α}⌋ = n` when it exists.
///
/// Dense: `c = n^{-1/α}` always works (`exact = true`). Lattice: `c = p^{-k}`
/// with `k` the unique integer such that `⌊p^{kα}⌋ ≤ n < ⌊p^{(k+1)α}⌋`;
/// `exact` iff `⌊p^{kα}⌋ = n` (the verification subsequence).
pub fn normalizer_schedule<T: Real>(
    structure: &GroupStructure<T>,
    alpha: T,
    n: u64,
) -> Result<(T, bool)> {
    if n == 0 {
        return Err(Error::Input("normalizer schedule needs n ≥ 1".into()));
    }
    match structure.variant {
        GroupVariant::Dense => Ok(((T::of(n as f64)).powf(-T::one() / alpha), true)),
        GroupVariant::Lattice(p) => {
            let nf = T::of(n as f64);
            let mut k: i64 = (nf.ln() / (alpha * p.ln())).floor().to_f64() as i64;
            let floor_pow = |k: i64| -> u64 {
                let x = p.powf(alpha * T::of(k as f64));
                // nudge so that mathematically-integral powers floor exactly
                (x + x * T::of(1e-12)).floor().to_f64() as u64
            };
            while floor_pow(k) > n {
                k -= 1;
            }
            while floor_pow(k + 1) <= n {
                k += 1;
            }
            let c = p.powf(-T::of(k as f64));
            Ok((c, floor_pow(k) == n))
        }
    }
}

/// The exact verification subsequence `n_k = ⌊p^{kα}⌋` for a lattice group
/// (dense groups: every `n`).
pub fn exact_subsequence<T: Real>(
    structure: &GroupStructure<T>,
    alpha: T,
    k_range: std::ops::RangeInclusive<i64>,
) -> Vec<(i64, u64)> {
    match structure.variant {
        GroupVariant::Dense => k_range.map(|k| (k, k.max(1) as u64)).collect(),
        GroupVariant::Lattice(p) => k_range
            .map(|k| {
                let x = p.powf(alpha * T::of(k as f64));
                (k, (x + x * T::of(1e-12)).floor().to_f64() as u64)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks12() -> Arc<BlockStructure<f64>> {
        Arc::new(BlockStructure::new(vec![1.0, 2.0], vec![1, 1]).unwrap())
    }

    #[test]
    fn tau_euclidean_is_norm() {
        let b = BlockStructure::<f64>::euclidean(2);
        assert!((b.tau(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn tau_two_blocks() {
        let b = blocks12();
        // |3|^1 + |4|^{1/2} = 5
        assert!((b.tau(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn tau_zero() {
        let b = blocks12();
        assert_eq!(b.tau(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(b.tau(&[0.0]).is_err());
    }

    #[test]
    fn identity_acts_trivially() {
        let b = blocks12();
        let g = Similarity::identity(b);
        assert_eq!(g.apply(&[1.5, -2.0]), vec![1.5, -2.0]);
        assert_eq!(g.norm(), 1.0);
    }

    #[test]
    fn scalar_similarity() {
        let g = Similarity::scalar(2.0, false).unwrap();
        assert_eq!(g.apply(&[3.0]), vec![6.0]);
        assert_eq!(g.norm(), 2.0);
    }

    #[test]
    fn rotation_and_adjoint() {
        let g = Similarity::rotation2(2.0, std::f64::consts::FRAC_PI_2).unwrap();
        let gx = g.apply(&[1.0, 0.0]);
        assert!((gx[0]).abs() < 1e-12 && (gx[1] - 2.0).abs() < 1e-12);
        // ⟨gx, y⟩ = ⟨x, g*y⟩
        let x = [1.0, 0.0];
        let y = [1.0, 1.0];
        let lhs = crate::linalg::dot(&g.apply(&x), &y);
        let rhs = crate::linalg::dot(&x, &g.adjoint().apply(&y));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tau_homogeneity_on_blocks() {
        let b = blocks12();
        let k1 = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        let k2 = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let g = Similarity::new(b.clone(), 1.7, vec![k1, k2]).unwrap();
        let x = [0.3, -2.2];
        let lhs = b.tau(&g.apply(&x)).unwrap();
        let rhs = g.norm() * b.tau(&x).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn per_block_scale_validation() {
        let b = blocks12();
        let ks = vec![
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
        ];
        assert!(Similarity::from_block_scales(b.clone(), &[2.0, 4.0], ks.clone()).is_ok());
        assert!(Similarity::from_block_scales(b, &[2.0, 5.0], ks).is_err());
    }

    #[test]
    fn detect_single_generator() {
        let s = detect_group_structure(&[2.0f64, 0.5], default_gcd_tol()).unwrap();
        match s.variant {
            GroupVariant::Lattice(p) => assert!((p - 2.0).abs() < 1e-9),
            _ => panic!("expected lattice"),
        }
    }

    #[test]
    fn detect_gcd_of_logs() {
        let s = detect_group_structure(&[4.0f64, 0.5], default_gcd_tol()).unwrap();
        match s.variant {
            GroupVariant::Lattice(p) => assert!((p - 2.0).abs() < 1e-9),
            _ => panic!("expected lattice"),
        }
    }

    #[test]
    fn detect_dense_for_incommensurable() {
        let s = detect_group_structure(&[2.0f64, 3.0], default_gcd_tol()).unwrap();
        assert_eq!(s.variant, GroupVariant::Dense);
    }

    #[test]
    fn detect_rejects_trivial() {
        assert!(detect_group_structure(&[1.0, 1.0], default_gcd_tol::<f64>()).is_err());
    }

    #[test]
    fn schedule_dense() {
        let s = GroupStructure::<f64> {
            variant: GroupVariant::Dense,
            generator_scales: vec![],
        };
        let (c, exact) = normalizer_schedule(&s, 2.0, 100).unwrap();
        assert!((c - 0.1).abs() < 1e-15);
        assert!(exact);
    }

    #[test]
    fn schedule_lattice() {
        let s = GroupStructure::<f64> {
            variant: GroupVariant::Lattice(2.0),
            generator_scales: vec![],
        };
        let (c, exact) = normalizer_schedule(&s, 1.0, 8).unwrap();
        assert_eq!(c, 0.125);
        assert!(exact);
        let (c, exact) = normalizer_schedule(&s, 1.0, 7).unwrap();
        assert_eq!(c, 0.25);
        assert!(!exact);
    }

    #[test]
    fn schedule_monotone_and_bracketing() {
        let s = GroupStructure::<f64> {
            variant: GroupVariant::Lattice(2.0),
            generator_scales: vec![],
        };
        let mut last = f64::INFINITY;
        for n in 1..200u64 {
            let (c, _) = normalizer_schedule(&s, 0.5, n).unwrap();
            assert!(c <= last);
            last = c;
            let inv = c.powf(-0.5);
            // ⌊inv⌋ ≤ n < ⌊(inv·p^α)⌋
            assert!(inv.floor() as u64 <= n);
            assert!(((inv * 2.0f64.powf(0.5)) * (1.0 + 1e-12)).floor() as u64 > n);
        }
    }

    #[test]
    fn radial_matches_norm_in_euclidean() {
        let b = BlockStructure::<f64>::euclidean(2);
        assert!((b.radial(&[3.0, 4.0]) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn radial_scales_exactly_under_dilation() {
        let b = blocks12();
        let x = [0.7, -1.3];
        let r = b.radial(&x);
        let y = b.dilate(2.0, &x);
        assert!((b.radial(&y) - 2.0 * r).abs() < 1e-8 * r);
    }
}
