//! The driving measure on the affine group: finite mixtures of affine
//! atoms, optionally with one log-uniform continuous-scale family, with an
//! exact moment function `κ(s) = E|M|^s`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{
    detect_group_structure, BlockStructure, GroupStructure, Similarity,
};
use crate::linalg::{norm2, Matrix};
use crate::rng::RngStream;
use crate::scalar::Real;

/// One atom `(prob, M, Q)` of the mixture: `x ↦ M x + Q` with probability `prob`.
#[derive(Clone, Debug)]
pub struct AffineAtom<T> {
    pub prob: T,
    pub map: Similarity<T>,
    pub shift: Vec<T>,
}

/// A family with log-uniform base scale on `[scale_lo, scale_hi]`, fixed
/// orthogonal parts and fixed shift. Keeps `κ` in closed form while
/// exercising the dense scale group.
#[derive(Clone, Debug)]
pub struct ContinuousScaleFamily<T> {
    pub prob: T,
    pub scale_lo: T,
    pub scale_hi: T,
    pub orthogonal: Vec<Matrix<T>>,
    pub shift: Vec<T>,
}

/// Specification of the driving measure.
#[derive(Clone, Debug)]
pub struct MuSpec<T> {
    blocks: Arc<BlockStructure<T>>,
    atoms: Vec<AffineAtom<T>>,
    continuous: Option<ContinuousScaleFamily<T>>,
    cum_probs: Vec<T>,
}

/// What a single draw from the mixture applies.
pub enum Drawn<'a, T> {
    Atom(&'a AffineAtom<T>),
    Continuous { scale: T, family: &'a ContinuousScaleFamily<T> },
}

impl<'a, T: Real> Drawn<'a, T> {
    #[inline]
    pub fn shift(&self) -> &'a [T] {
        match self {
            Drawn::Atom(a) => &a.shift,
            Drawn::Continuous { family, .. } => &family.shift,
        }
    }

    /// `out = M x` for the drawn `M`.
    #[inline]
    pub fn apply_map_into(&self, blocks: &BlockStructure<T>, x: &[T], out: &mut [T]) {
        match self {
            Drawn::Atom(a) => a.map.apply_into(x, out),
            Drawn::Continuous { scale, family } => {
                for j in 0..blocks.n_blocks() {
                    let r = blocks.block_range(j);
                    family.orthogonal[j].matvec_into(&x[r.clone()], &mut out[r.clone()]);
                    let f = scale.powf(blocks.exponents()[j]);
                    for v in &mut out[r] {
                        *v *= f;
                    }
                }
            }
        }
    }

    /// `out = M* x` (adjoint of the drawn map).
    #[inline]
    pub fn apply_adjoint_into(&self, blocks: &BlockStructure<T>, x: &[T], out: &mut [T]) {
        match self {
            Drawn::Atom(a) => {
                // blockwise a^λ Kᵀ
                for j in 0..blocks.n_blocks() {
                    let r = blocks.block_range(j);
                    let k = &a.map.orthogonal_parts()[j];
                    let f = a.map.norm().powf(blocks.exponents()[j]);
                    for (bi, i) in r.clone().enumerate() {
                        let mut acc = T::zero();
                        for (bj, jj) in r.clone().enumerate() {
                            acc += k[(bj, bi)] * x[jj];
                        }
                        out[i] = acc * f;
                    }
                }
            }
            Drawn::Continuous { scale, family } => {
                for j in 0..blocks.n_blocks() {
                    let r = blocks.block_range(j);
                    let k = &family.orthogonal[j];
                    let f = scale.powf(blocks.exponents()[j]);
                    for (bi, i) in r.clone().enumerate() {
                        let mut acc = T::zero();
                        for (bj, jj) in r.clone().enumerate() {
                            acc += k[(bj, bi)] * x[jj];
                        }
                        out[i] = acc * f;
                    }
                }
            }
        }
    }

    pub fn norm(&self) -> T {
        match self {
            Drawn::Atom(a) => a.map.norm(),
            Drawn::Continuous { scale, .. } => *scale,
        }
    }
}

impl<T: Real> MuSpec<T> {
    pub fn new(
        blocks: Arc<BlockStructure<T>>,
        atoms: Vec<AffineAtom<T>>,
        continuous: Option<ContinuousScaleFamily<T>>,
    ) -> Result<Self> {
        if atoms.is_empty() && continuous.is_none() {
            return Err(Error::Input("measure needs at least one component".into()));
        }
        let mut total = T::zero();
        for (i, a) in atoms.iter().enumerate() {
            if a.prob <= T::zero() {
                return Err(Error::Input(format!("atom {i} has non-positive probability")));
            }
            if a.map.blocks().as_ref() != blocks.as_ref() {
                return Err(Error::Input(format!("atom {i} has mismatched block structure")));
            }
            if a.shift.len() != blocks.dim() {
                return Err(Error::Input(format!("atom {i} shift has wrong dimension")));
            }
            total += a.prob;
        }
        if let Some(c) = &continuous {
            if c.prob <= T::zero() || c.scale_lo <= T::zero() || c.scale_hi <= c.scale_lo {
                return Err(Error::Input("bad continuous-scale family".into()));
            }
            if c.shift.len() != blocks.dim() {
                return Err(Error::Input("continuous family shift has wrong dimension".into()));
            }
            total += c.prob;
        }
        if (total - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::Input(format!("probabilities sum to {total}, not 1")));
        }
        // At least two distinct scales, otherwise κ cannot have the root
        // structure required downstream.
        let mut scales: Vec<T> = atoms.iter().map(|a| a.map.norm()).collect();
        if let Some(c) = &continuous {
            scales.push(c.scale_lo);
            scales.push(c.scale_hi);
        }
        let distinct = {
            let mut s = scales.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s.dedup_by(|a, b| ((*a - *b) / *b).abs() < T::tol(1e-12));
            s.len()
        };
        if distinct < 2 {
            return Err(Error::Input(
                "measure needs at least two distinct scales".into(),
            ));
        }
        let mut cum = Vec::with_capacity(atoms.len() + 1);
        let mut acc = T::zero();
        for a in &atoms {
            acc += a.prob;
            cum.push(acc);
        }
        Ok(MuSpec {
            blocks,
            atoms,
            continuous,
            cum_probs: cum,
        })
    }

    pub fn blocks(&self) -> &Arc<BlockStructure<T>> {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.dim()
    }

    pub fn atoms(&self) -> &[AffineAtom<T>] {
        &self.atoms
    }

    pub fn continuous(&self) -> Option<&ContinuousScaleFamily<T>> {
        self.continuous.as_ref()
    }

    pub fn is_finite_mixture(&self) -> bool {
        self.continuous.is_none()
    }

    /// All scales appearing in the support of the scale marginal (for the
    /// continuous family, the group it generates is already dense).
    pub fn atom_scales(&self) -> Vec<T> {
        self.atoms.iter().map(|a| a.map.norm()).collect()
    }

    #[inline]
    pub fn draw(&self, rng: &mut RngStream) -> Drawn<'_, T> {
        let u: T = rng.uniform();
        for (i, c) in self.cum_probs.iter().enumerate() {
            if u < *c {
                return Drawn::Atom(&self.atoms[i]);
            }
        }
        match &self.continuous {
            Some(f) => {
                let w: T = rng.uniform();
                let scale = (f.scale_lo.ln() + w * (f.scale_hi.ln() - f.scale_lo.ln())).exp();
                Drawn::Continuous { scale, family: f }
            }
            // u fell past the accumulated atom mass by rounding; return the
            // last atom
            None => Drawn::Atom(self.atoms.last().expect("nonempty")),
        }
    }

    /// `κ(s) = E|M|^s`, exact mixture sum plus the closed-form log-uniform
    /// integral.
    pub fn kappa(&self, s: T) -> T {
        if s == T::zero() {
            return T::one();
        }
        let mut acc = T::zero();
        for a in &self.atoms {
            acc += a.prob * a.map.norm().powf(s);
        }
        if let Some(f) = &self.continuous {
            // E a^s for log-uniform on [lo, hi]: lo^s · expm1(sL)/(sL)
            let l = (f.scale_hi / f.scale_lo).ln();
            let sl = s * l;
            acc += f.prob * f.scale_lo.powf(s) * sl.exp_m1() / sl;
        }
        acc
    }

    /// `κ'(s) = E[|M|^s log|M|]`.
    pub fn kappa_prime(&self, s: T) -> T {
        let mut acc = T::zero();
        for a in &self.atoms {
            let sc = a.map.norm();
            acc += a.prob * sc.powf(s) * sc.ln();
        }
        if let Some(f) = &self.continuous {
            let llo = f.scale_lo.ln();
            let lhi = f.scale_hi.ln();
            let l = lhi - llo;
            if s.abs() * l < T::of(1e-6) {
                // series around s = 0: E log M + s E (log M)^2
                let m1 = (llo + lhi) * T::of(0.5);
                let m2 = (lhi * lhi + lhi * llo + llo * llo) / T::of(3.0);
                acc += f.prob * (m1 + s * m2);
            } else {
                // d/ds (hi^s - lo^s)/(sL)
                let hs = f.scale_hi.powf(s);
                let ls = f.scale_lo.powf(s);
                acc += f.prob * ((hs * lhi - ls * llo) / (s * l) - (hs - ls) / (s * s * l));
            }
        }
        acc
    }

    /// `E log|M| = κ'(0)`.
    pub fn e_log_m(&self) -> T {
        let mut acc = T::zero();
        for a in &self.atoms {
            acc += a.prob * a.map.norm().ln();
        }
        if let Some(f) = &self.continuous {
            acc += f.prob * (f.scale_lo.ln() + f.scale_hi.ln()) * T::of(0.5);
        }
        acc
    }

    /// Solves `κ(α) = 1` for `α > 0` by bracketing then bisection with a
    /// Newton polish, to `|κ(α) − 1| ≤ 1e−12` (at f64 precision).
    pub fn solve_alpha(&self) -> Result<T> {
        if self.e_log_m() >= T::zero() {
            return Err(Error::Hypothesis(
                "E log|M| must be negative for a stationary regime".into(),
            ));
        }
        // find s_hi with κ(s_hi) > 1, doubling up to the cap
        let mut s_hi = T::one();
        let cap = T::of(256.0);
        while self.kappa(s_hi) <= T::one() {
            s_hi *= T::of(2.0);
            if s_hi > cap {
                return Err(Error::NoRoot(format!(
                    "κ never exceeds 1 on (0, {cap}]"
                )));
            }
        }
        // find s_lo > 0 with κ(s_lo) < 1 (exists since κ'(0) < 0)
        let mut s_lo = s_hi * T::of(0.5);
        while self.kappa(s_lo) >= T::one() {
            s_lo *= T::of(0.5);
            if s_lo < T::of(1e-12) {
                return Err(Error::NoRoot("κ ≥ 1 arbitrarily close to 0".into()));
            }
        }
        let mut lo = s_lo;
        let mut hi = s_hi;
        for _ in 0..200 {
            let mid = (lo + hi) * T::of(0.5);
            if self.kappa(mid) < T::one() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * hi * T::of(2.0) {
                break;
            }
        }
        let mut alpha = (lo + hi) * T::of(0.5);
        for _ in 0..4 {
            let f = self.kappa(alpha) - T::one();
            let d = self.kappa_prime(alpha);
            if d == T::zero() {
                break;
            }
            alpha = alpha - f / d;
        }
        let resid = (self.kappa(alpha) - T::one()).abs();
        if resid > T::tol(1e-12) {
            return Err(Error::Numeric(format!(
                "α solver stalled at residual {resid}"
            )));
        }
        Ok(alpha)
    }

    /// `m_α = E[|M|^α log|M|]`; positive at the root by strict convexity.
    pub fn m_alpha(&self, alpha: T) -> Result<T> {
        if (self.kappa(alpha) - T::one()).abs() > T::tol(1e-9) {
            return Err(Error::Input("m_alpha requires κ(α) = 1".into()));
        }
        let m = self.kappa_prime(alpha);
        if m <= T::zero() {
            return Err(Error::Numeric("m_α not positive; inconsistent α".into()));
        }
        Ok(m)
    }

    /// Averaged operator `z = E[M]` (block diagonal) and stationary mean
    /// `m = (I − z)^{-1} E[Q]`; requires `α > 1` so that the mean exists.
    pub fn mean_operator_and_mean(&self, alpha: T) -> Result<(Matrix<T>, Vec<T>)> {
        if alpha <= T::one() {
            return Err(Error::Regime("mean undefined for α ≤ 1".into()));
        }
        let d = self.dim();
        let mut z = Matrix::zeros(d, d);
        let mut eq = vec![T::zero(); d];
        for a in &self.atoms {
            z.add_assign_scaled(&a.map.matrix(), a.prob);
            for (o, q) in eq.iter_mut().zip(a.shift.iter()) {
                *o += a.prob * *q;
            }
        }
        if let Some(f) = &self.continuous {
            // E[a^{λ_j}] per block for log-uniform scale
            let l = (f.scale_hi / f.scale_lo).ln();
            for j in 0..self.blocks.n_blocks() {
                let lam = self.blocks.exponents()[j];
                let sl = lam * l;
                let mean_pow = f.scale_lo.powf(lam) * sl.exp_m1() / sl;
                let r = self.blocks.block_range(j);
                let k = &f.orthogonal[j];
                for (bi, i) in r.clone().enumerate() {
                    for (bj, jj) in r.clone().enumerate() {
                        z[(i, jj)] += f.prob * mean_pow * k[(bi, bj)];
                    }
                }
            }
            for (o, q) in eq.iter_mut().zip(f.shift.iter()) {
                *o += f.prob * *q;
            }
        }
        let i_minus_z = Matrix::identity(d).sub(&z);
        let m = i_minus_z
            .solve(&eq)
            .map_err(|_| Error::Numeric("(I − z) singular".into()))?;
        Ok((z, m))
    }

    /// Restriction of `z = E[M]` to the blocks selected by `keep` (as a full
    /// `d × d` matrix, zero elsewhere). `z` is block diagonal, so this is a
    /// genuine compression.
    pub fn mean_operator_restricted(&self, alpha: T, keep: impl Fn(T) -> bool) -> Result<Matrix<T>> {
        let (z, _) = self.mean_operator_and_mean(alpha)?;
        let d = self.dim();
        let mut out = Matrix::zeros(d, d);
        for j in 0..self.blocks.n_blocks() {
            if keep(self.blocks.exponents()[j]) {
                let r = self.blocks.block_range(j);
                for i in r.clone() {
                    for jj in r.clone() {
                        out[(i, jj)] = z[(i, jj)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `E τ(Q)^α` (exact finite sum; always finite for mixtures).
    pub fn moment_shift_alpha(&self, alpha: T) -> T {
        let mut acc = T::zero();
        for a in &self.atoms {
            let t = self.blocks.tau(&a.shift).expect("validated dims");
            if t > T::zero() {
                acc += a.prob * t.powf(alpha);
            }
        }
        if let Some(f) = &self.continuous {
            let t = self.blocks.tau(&f.shift).expect("validated dims");
            if t > T::zero() {
                acc += f.prob * t.powf(alpha);
            }
        }
        acc
    }

    /// Checks whether one point is fixed by every map in the support.
    ///
    /// Atoms with `|M| ≠ 1` have the unique fixed point `(I − M)^{-1} Q`;
    /// candidate points are intersected, and atoms with `|M| = 1` (affine
    /// fixed sets) are checked by residual.
    pub fn has_common_fixed_point(&self) -> Result<bool> {
        let d = self.dim();
        let tol = T::tol(1e-9);
        let mut candidate: Option<Vec<T>> = None;
        for a in &self.atoms {
            if (a.map.norm() - T::one()).abs() <= T::tol(1e-12) {
                continue;
            }
            let i_minus_m = Matrix::identity(d).sub(&a.map.matrix());
            let x = i_minus_m
                .solve(&a.shift)
                .map_err(|_| Error::Numeric("fixed-point solve failed".into()))?;
            match &candidate {
                None => candidate = Some(x),
                Some(c) => {
                    let scale = T::one() + norm2(c);
                    if norm2(&crate::linalg::sub(c, &x)) > tol * scale {
                        return Ok(false);
                    }
                }
            }
        }
        if let Some(f) = &self.continuous {
            // a common fixed point must hold for a continuum of scales,
            // which forces x = 0 and Q = 0
            let zero_shift = norm2(&f.shift) <= tol;
            match &candidate {
                None => {
                    if !zero_shift {
                        return Ok(false);
                    }
                    candidate = Some(vec![T::zero(); d]);
                }
                Some(c) => {
                    if !zero_shift || norm2(c) > tol {
                        return Ok(false);
                    }
                }
            }
        }
        let c = match candidate {
            Some(c) => c,
            // every scale is 1: cannot happen for validated specs that
            // passed solve_alpha, treat as no common point
            None => return Ok(false),
        };
        // residual check for |M| = 1 atoms
        let scale = T::one() + norm2(&c);
        for a in &self.atoms {
            if (a.map.norm() - T::one()).abs() <= T::tol(1e-12) {
                let mut img = a.map.apply(&c);
                for (v, q) in img.iter_mut().zip(a.shift.iter()) {
                    *v += *q;
                }
                if norm2(&crate::linalg::sub(&img, &c)) > tol * scale {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Scale-group structure of the projection on the linear part.
    pub fn scale_group(&self) -> Result<GroupStructure<T>> {
        if self.continuous.is_some() {
            return Ok(GroupStructure {
                variant: crate::group::GroupVariant::Dense,
                generator_scales: self.atom_scales(),
            });
        }
        detect_group_structure(&self.atom_scales(), crate::group::default_gcd_tol())
    }

    /// Full validation of the standing hypothesis on the driving measure.
    pub fn validate_hypothesis(&self) -> Result<HypothesisReport<T>> {
        let e_log_m = self.e_log_m();
        if e_log_m >= T::zero() {
            return Err(Error::Hypothesis(format!(
                "E log|M| = {e_log_m} is not negative"
            )));
        }
        let alpha = self.solve_alpha()?;
        let m_alpha = self.m_alpha(alpha)?;
        let moment_shift = self.moment_shift_alpha(alpha);
        let fixed_point_free = !self.has_common_fixed_point()?;
        let structure = self.scale_group()?;
        Ok(HypothesisReport {
            alpha,
            m_alpha,
            e_log_m,
            moment_shift_alpha: moment_shift,
            fixed_point_free,
            structure,
        })
    }
}

/// Validated facts about the driving measure.
#[derive(Clone, Debug)]
pub struct HypothesisReport<T> {
    pub alpha: T,
    pub m_alpha: T,
    pub e_log_m: T,
    pub moment_shift_alpha: T,
    pub fixed_point_free: bool,
    pub structure: GroupStructure<T>,
}

impl<T: Real> HypothesisReport<T> {
    /// Errors unless every clause holds.
    pub fn require_valid(&self) -> Result<()> {
        if !self.fixed_point_free {
            return Err(Error::Hypothesis(
                "a common fixed point exists; the recursion degenerates".into(),
            ));
        }
        Ok(())
    }
}

/// Builds a one-dimensional mixture from `(scale, sign, prob, shift)` rows.
pub fn mu_1d<T: Real>(rows: &[(f64, bool, f64, f64)]) -> Result<MuSpec<T>> {
    let blocks = Arc::new(BlockStructure::<T>::euclidean(1));
    let atoms = rows
        .iter()
        .map(|(scale, neg, prob, shift)| {
            Ok(AffineAtom {
                prob: T::of(*prob),
                map: Similarity::scalar(T::of(*scale), *neg)?,
                shift: vec![T::of(*shift)],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MuSpec::new(blocks, atoms, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atom(p: f64, q: f64) -> MuSpec<f64> {
        mu_1d(&[(2.0, false, p, q), (0.5, false, 1.0 - p, q)]).unwrap()
    }

    #[test]
    fn kappa_examples() {
        let mu = two_atom(0.2, 1.0);
        assert!((mu.kappa(2.0) - 1.0).abs() < 1e-15);
        assert_eq!(mu.kappa(0.0), 1.0);
        let mu = two_atom(1.0 / 9.0, 1.0);
        assert!((mu.kappa(3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_log_uniform_closed_form() {
        let blocks = Arc::new(BlockStructure::<f64>::euclidean(1));
        let fam = ContinuousScaleFamily {
            prob: 1.0,
            scale_lo: 0.25,
            scale_hi: 2.0,
            orthogonal: vec![Matrix::identity(1)],
            shift: vec![1.0],
        };
        let mu = MuSpec::new(blocks, vec![], Some(fam)).unwrap();
        let s = 1.3;
        let l = (2.0f64 / 0.25).ln();
        let expect = (2.0f64.powf(s) - 0.25f64.powf(s)) / (s * l);
        assert!((mu.kappa(s) - expect).abs() < 1e-14);
        // quadrature cross-check
        let n = 200_000;
        let mut acc = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let a = (0.25f64.ln() + u * l).exp();
            acc += a.powf(s);
        }
        acc /= n as f64;
        assert!((mu.kappa(s) - acc).abs() < 1e-6);
    }

    #[test]
    fn solve_alpha_examples() {
        assert!((two_atom(1.0 / 9.0, 1.0).solve_alpha().unwrap() - 3.0).abs() < 1e-12);
        assert!((two_atom(1.0 / 3.0, 1.0).solve_alpha().unwrap() - 1.0).abs() < 1e-12);
        let p = 2.0f64.sqrt() - 1.0;
        assert!((two_atom(p, 1.0).solve_alpha().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn solve_alpha_residual() {
        for p in [1.0 / 9.0, 1.0 / 5.0, 1.0 / 3.0, 0.45] {
            let mu = two_atom(p, 1.0);
            let a = mu.solve_alpha().unwrap();
            assert!((mu.kappa(a) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn no_root_when_contracting() {
        let mu = mu_1d::<f64>(&[(0.5, false, 0.7, 1.0), (0.9, false, 0.3, 1.0)]).unwrap();
        assert!(matches!(mu.solve_alpha(), Err(Error::NoRoot(_))));
    }

    #[test]
    fn expanding_mean_log_rejected() {
        let mu = mu_1d::<f64>(&[(2.0, false, 0.8, 1.0), (0.5, false, 0.2, 1.0)]).unwrap();
        assert!(matches!(mu.solve_alpha(), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn m_alpha_closed_forms() {
        let ln2 = std::f64::consts::LN_2;
        let cases = [
            (1.0 / 9.0, 3.0, 7.0 / 9.0 * ln2),
            (1.0 / 5.0, 2.0, 3.0 / 5.0 * ln2),
            (1.0 / 3.0, 1.0, 1.0 / 3.0 * ln2),
        ];
        for (p, alpha, expect) in cases {
            let mu = two_atom(p, 1.0);
            assert!((mu.m_alpha(alpha).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_operator_examples() {
        let mu = two_atom(1.0 / 9.0, 1.0);
        let (z, m) = mu.mean_operator_and_mean(3.0).unwrap();
        assert!((z[(0, 0)] - 2.0 / 3.0).abs() < 1e-14);
        assert!((m[0] - 3.0).abs() < 1e-12);
        let mu = two_atom(0.2, 1.0);
        let (z, m) = mu.mean_operator_and_mean(2.0).unwrap();
        assert!((z[(0, 0)] - 0.8).abs() < 1e-14);
        assert!((m[0] - 5.0).abs() < 1e-12);
        assert!(mu.mean_operator_and_mean(1.0).is_err());
    }

    #[test]
    fn zero_shift_mean_is_zero() {
        let mu = two_atom(1.0 / 9.0, 0.0);
        let (_, m) = mu.mean_operator_and_mean(3.0).unwrap();
        assert_eq!(m[0], 0.0);
    }

    #[test]
    fn fixed_point_detection() {
        // distinct fixed points -1 and 2
        let mu = mu_1d::<f64>(&[(2.0, false, 1.0 / 9.0, 1.0), (0.5, false, 8.0 / 9.0, 1.0)]).unwrap();
        assert!(!mu.has_common_fixed_point().unwrap());
        // both atoms fix x = 1
        let mu = mu_1d::<f64>(&[(2.0, false, 1.0 / 9.0, -1.0), (0.5, false, 8.0 / 9.0, 0.5)]).unwrap();
        assert!(mu.has_common_fixed_point().unwrap());
        let rep = mu.validate_hypothesis().unwrap();
        assert!(!rep.fixed_point_free);
        assert!(rep.require_valid().is_err());
    }

    #[test]
    fn hypothesis_report_alpha3() {
        let mu = two_atom(1.0 / 9.0, 1.0);
        let rep = mu.validate_hypothesis().unwrap();
        assert!((rep.alpha - 3.0).abs() < 1e-12);
        assert!(rep.fixed_point_free);
        assert!(rep.e_log_m < 0.0);
        assert!(rep.structure.is_lattice());
        assert!((rep.structure.lattice_base().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn kappa_convexity_between_roots() {
        let mu = two_atom(1.0 / 9.0, 1.0);
        for i in 1..30 {
            let s = 3.0 * i as f64 / 30.0;
            assert!(mu.kappa(s) < 1.0 + 1e-12, "κ({s}) = {}", mu.kappa(s));
        }
    }

    #[test]
    fn generic_f32_instantiation() {
        let mu = mu_1d::<f32>(&[(2.0, false, 1.0 / 3.0, 1.0), (0.5, false, 2.0 / 3.0, 1.0)]).unwrap();
        let a = mu.solve_alpha().unwrap();
        assert!((a - 1.0).abs() < 1e-4);
    }
}
