//! Limit-law parameters and characteristic functions of normalized partial
//! sums, in every tail-index regime, together with centering schedules and
//! the stability identity check.

use std::sync::Arc;

use num_complex::Complex;

use crate::engine::{
    default_truncation, sample_dual_operators, sample_stationary, TrajectoryBatch,
};
use crate::error::{Error, Result};
use crate::group::{BlockStructure, GroupStructure};
use crate::linalg::{dot, norm2, Matrix};
use crate::measure::{HypothesisReport, MuSpec};
use crate::scalar::Real;
use crate::tails::{
    angular_measure, default_t_grid, delta_v_of_lambda1, radial_haar_factor, scale_grid,
    tail_regime, AngularHistogram, Estimate, LambdaTilde, ShellBins, ShellTable, TailRegime,
};

/// Tail-index regime of the limit law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    AlphaLt1,
    AlphaEq1,
    Alpha1to2,
    AlphaEq2,
    AlphaGt2,
    /// Non-Euclidean block structure with α > 2: product of a normal law on
    /// the low-exponent blocks and a stable law on the high-exponent ones.
    MixedT3,
}

pub fn regime_of<T: Real>(alpha: T, blocks: &BlockStructure<T>) -> Regime {
    let tol = T::tol(1e-9);
    if alpha > T::of(2.0) + tol && !blocks.is_euclidean() {
        return Regime::MixedT3;
    }
    if (alpha - T::one()).abs() <= tol {
        Regime::AlphaEq1
    } else if (alpha - T::of(2.0)).abs() <= tol {
        Regime::AlphaEq2
    } else if alpha < T::one() {
        Regime::AlphaLt1
    } else if alpha < T::of(2.0) {
        Regime::Alpha1to2
    } else {
        Regime::AlphaGt2
    }
}

/// `ξ(c) = E[cR / (1 + |cR|²)]` by Monte Carlo over stationary samples
/// (`c` a pure dilation scale).
pub fn xi<T: Real>(
    c_scale: T,
    samples: &TrajectoryBatch<T>,
    blocks: &BlockStructure<T>,
) -> (Vec<T>, T) {
    let d = samples.dim;
    if c_scale == T::zero() {
        return (vec![T::zero(); d], T::zero());
    }
    let mut acc = vec![T::zero(); d];
    let mut acc2 = T::zero();
    let mut scaled = vec![T::zero(); d];
    for row in samples.rows() {
        scaled.copy_from_slice(row);
        blocks.dilate_in_place(c_scale, &mut scaled);
        let n2 = dot(&scaled, &scaled);
        let denom = T::one() + n2;
        for (a, s) in acc.iter_mut().zip(scaled.iter()) {
            *a += *s / denom;
        }
        acc2 += n2 / (denom * denom);
    }
    let n = T::of(samples.n_rows() as f64);
    let mean: Vec<T> = acc.iter().map(|a| *a / n).collect();
    let se = (acc2 / n / n).sqrt();
    (mean, se)
}

/// Blockwise centerings for the mixed regime:
/// `ξ₁(c) = c·m_{α,−} + E[c x_α/(1+|c x_α|²)]` and
/// `ξ₂(c) = c·m_{α/2,α} + E[c x_α/(1+|c x_α|²)]`.
pub fn xi1_xi2<T: Real>(
    c_scale: T,
    samples: &TrajectoryBatch<T>,
    blocks: &BlockStructure<T>,
    alpha: T,
) -> Result<(Vec<T>, Vec<T>)> {
    let d = samples.dim;
    if d != blocks.dim() {
        return Err(Error::Input("sample/block dimension mismatch".into()));
    }
    if c_scale == T::zero() {
        return Ok((vec![T::zero(); d], vec![T::zero(); d]));
    }
    let tol = T::tol(1e-9);
    let mean = samples.mean();
    let m_lower = blocks.project(&mean, |l| l < alpha - tol);
    let m_mid = blocks.project(&mean, |l| l > alpha * T::of(0.5) + tol && l < alpha - tol);
    // compensator over the V_α component (empty when α is not an exponent)
    let has_alpha_block = blocks
        .exponents()
        .iter()
        .any(|l| (*l - alpha).abs() <= tol);
    let mut comp = vec![T::zero(); d];
    if has_alpha_block {
        let mut scaled = vec![T::zero(); d];
        for row in samples.rows() {
            let xa = blocks.project(row, |l| (l - alpha).abs() <= tol);
            scaled.copy_from_slice(&xa);
            blocks.dilate_in_place(c_scale, &mut scaled);
            let n2 = dot(&scaled, &scaled);
            let denom = T::one() + n2;
            for (a, s) in comp.iter_mut().zip(scaled.iter()) {
                *a += *s / denom;
            }
        }
        let n = T::of(samples.n_rows() as f64);
        for a in &mut comp {
            *a /= n;
        }
    }
    let mut xi1 = blocks.dilate(c_scale, &m_lower);
    let mut xi2 = blocks.dilate(c_scale, &m_mid);
    for i in 0..d {
        xi1[i] += comp[i];
        xi2[i] += comp[i];
    }
    Ok((xi1, xi2))
}

/// Empirical covariance form of the stationary law about a given mean,
/// optionally restricted to the blocks selected by `keep`.
pub fn covariance_q<T: Real>(
    samples: &TrajectoryBatch<T>,
    m: &[T],
    blocks: &BlockStructure<T>,
    alpha: T,
    keep: Option<&dyn Fn(T) -> bool>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    if alpha <= T::of(2.0) + T::tol(1e-9) {
        return Err(Error::Regime("covariance needs α > 2".into()));
    }
    let d = samples.dim;
    let mask: Vec<bool> = {
        let mut v = vec![true; d];
        if let Some(f) = keep {
            for j in 0..blocks.n_blocks() {
                let k = f(blocks.exponents()[j]);
                for i in blocks.block_range(j) {
                    v[i] = k;
                }
            }
        }
        v
    };
    let mut q = Matrix::<T>::zeros(d, d);
    let mut q2 = Matrix::<T>::zeros(d, d);
    let n = samples.n_rows();
    for row in samples.rows() {
        for i in 0..d {
            if !mask[i] {
                continue;
            }
            let di = row[i] - m[i];
            for j in 0..d {
                if !mask[j] {
                    continue;
                }
                let v = di * (row[j] - m[j]);
                q[(i, j)] += v;
                q2[(i, j)] += v * v;
            }
        }
    }
    let nf = T::of(n as f64);
    let mut se = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            q[(i, j)] /= nf;
            let raw = q2[(i, j)] / nf - q[(i, j)] * q[(i, j)];
            let var = num_traits::Float::max(raw, T::zero());
            se[(i, j)] = (var / nf).sqrt();
        }
    }
    Ok((q, se))
}

/// Closed-form Gaussian-regime constants:
/// `C_{2+}(v) = −q(v,v)/2 − ⟨v,m⟩²/2 − q(v, (I−z*)^{-1} z* v)` and the
/// centered exponent `C_{2+}(v) + ⟨v,m⟩²/2` (the log-Fourier transform of
/// the limit of `(S_n − nm)/√n`).
pub fn c_2plus<T: Real>(v: &[T], q: &Matrix<T>, z: &Matrix<T>, m: &[T]) -> Result<(T, T)> {
    let zt = z.transpose();
    let d = v.len();
    let i_minus = Matrix::identity(d).sub(&zt);
    let ztv = zt.matvec(v);
    let w = i_minus.solve(&ztv)?;
    let qvv = dot(v, &q.matvec(v));
    let cross = dot(v, &q.matvec(&w));
    let vm = dot(v, m);
    let exponent = -qvv * T::of(0.5) - cross;
    Ok((exponent - vm * vm * T::of(0.5), exponent))
}

/// Estimator sizes and knobs for limit-law construction.
#[derive(Clone, Debug)]
pub struct LawOptions {
    pub n_stationary: usize,
    pub n_dual: usize,
    pub truncation_tol: f64,
    /// dual subsample size for inner characteristic-function evaluations
    pub inner_cf_samples: usize,
    /// stationary subsample size for tail-functional tables
    pub lambda_max_samples: usize,
    pub shell_radial_bins: usize,
    pub shell_angle_bins: usize,
    pub scale_q_lo: f64,
    pub scale_q_hi: f64,
    pub scale_points: usize,
}

impl Default for LawOptions {
    fn default() -> Self {
        LawOptions {
            n_stationary: 100_000,
            n_dual: 100_000,
            truncation_tol: 1e-6,
            inner_cf_samples: 4096,
            lambda_max_samples: 30_000,
            shell_radial_bins: 24,
            shell_angle_bins: 16,
            scale_q_lo: 0.99,
            scale_q_hi: 0.9999,
            scale_points: 5,
        }
    }
}

/// The limit law of normalized partial sums: regime tag, parameters, and
/// frozen sample handles for the tail estimators. Repeated evaluations are
/// deterministic for a fixed seed.
pub struct LimitLaw<T> {
    pub regime: Regime,
    pub alpha: T,
    pub m_alpha: T,
    pub structure: GroupStructure<T>,
    pub blocks: Arc<BlockStructure<T>>,
    pub mean: Vec<T>,
    pub z: Matrix<T>,
    pub q: Option<Matrix<T>>,
    pub stationary: Option<TrajectoryBatch<T>>,
    pub dual_ops: Option<Vec<Matrix<T>>>,
    pub sigma: Option<AngularHistogram<T>>,
    shell_table: Option<ShellTable<T>>,
    stationary_scale_grid: Vec<T>,
    opts: LawOptions,
    /// sub-laws for the mixed regime: (gaussian on V₋, stable on V₊)
    mixed: Option<Box<(LimitLaw<T>, LimitLaw<T>)>>,
}

impl<T: Real> LimitLaw<T> {
    /// Gaussian regime (α > 2, Euclidean) from closed-form parameters.
    pub fn gaussian(
        blocks: Arc<BlockStructure<T>>,
        structure: GroupStructure<T>,
        alpha: T,
        m_alpha: T,
        q: Matrix<T>,
        z: Matrix<T>,
        mean: Vec<T>,
    ) -> Self {
        LimitLaw {
            regime: Regime::AlphaGt2,
            alpha,
            m_alpha,
            structure,
            blocks,
            mean,
            z,
            q: Some(q),
            stationary: None,
            dual_ops: None,
            sigma: None,
            shell_table: None,
            stationary_scale_grid: Vec::new(),
            opts: LawOptions::default(),
            mixed: None,
        }
    }

    /// Builds the law for a validated spec: samples the stationary and dual
    /// chains, estimates the tail objects the regime needs, and freezes
    /// them.
    pub fn estimate(mu: &MuSpec<T>, report: &HypothesisReport<T>, seed: u64, opts: LawOptions) -> Result<Self> {
        report.require_valid()?;
        let alpha = report.alpha;
        let blocks = mu.blocks().clone();
        let regime = regime_of(alpha, &blocks);
        let structure = report.structure.clone();
        if regime == Regime::MixedT3 {
            return Self::estimate_mixed(mu, report, seed, opts);
        }
        let (trunc, _) = default_truncation(mu, alpha, opts.truncation_tol);
        let stationary = sample_stationary(mu, trunc, seed ^ salt::STAT, 0, opts.n_stationary, opts.truncation_tol)?;
        if regime == Regime::AlphaGt2 {
            let (z, mean) = mu.mean_operator_and_mean(alpha)?;
            let (q, _) = covariance_q(&stationary, &mean, &blocks, alpha, None)?;
            let mut law = LimitLaw::gaussian(blocks, structure, alpha, report.m_alpha, q, z, mean);
            law.stationary = Some(stationary);
            law.opts = opts;
            return Ok(law);
        }
        let dual_ops = sample_dual_operators(mu, trunc, seed ^ salt::DUAL, 0, opts.n_dual)?;
        let (z, mean) = if alpha > T::one() + T::tol(1e-9) {
            mu.mean_operator_and_mean(alpha)?
        } else {
            (Matrix::zeros(blocks.dim(), blocks.dim()), vec![T::zero(); blocks.dim()])
        };
        // angular histogram (needed at α = 2; cheap elsewhere, skip)
        let sigma = if regime == Regime::AlphaEq2 {
            let taus = stationary.tau_values(&blocks);
            let thresholds = default_t_grid(&taus, &structure, 0.995, 8.0, 4)?;
            let bins = ShellBins::new(blocks.dim(), &structure, opts.shell_angle_bins, opts.shell_radial_bins);
            Some(angular_measure(&stationary, &blocks, &structure, alpha, &thresholds, &bins)?)
        } else {
            None
        };
        let radials: Vec<T> = stationary.rows().map(|r| blocks.radial(r)).collect();
        let st_grid = scale_grid(&radials, &structure, opts.scale_q_lo, opts.scale_q_hi, opts.scale_points)?;
        let mut law = LimitLaw {
            regime,
            alpha,
            m_alpha: report.m_alpha,
            structure,
            blocks,
            mean,
            z,
            q: None,
            stationary: Some(stationary),
            dual_ops: Some(dual_ops),
            sigma,
            shell_table: None,
            stationary_scale_grid: st_grid,
            opts,
            mixed: None,
        };
        law.shell_table = Some(law.build_shell_table()?);
        Ok(law)
    }

    fn estimate_mixed(mu: &MuSpec<T>, report: &HypothesisReport<T>, seed: u64, opts: LawOptions) -> Result<Self> {
        let alpha = report.alpha;
        let blocks = mu.blocks().clone();
        let tol = T::tol(1e-9);
        let half = alpha * T::of(0.5);
        if blocks.exponents().iter().any(|l| (*l - half).abs() <= tol) {
            return Err(Error::Regime(
                "mixed regime needs no block exponent at α/2".into(),
            ));
        }
        // project onto V₋ (λ < α/2) and V₊ (λ > α/2); each projected chain
        // is again an affine recursion with similarity coefficients, with
        // per-block tail index α/λ_j on its own Euclidean scale
        let lower = project_mu(mu, |l| l < half)?;
        let upper = project_mu(mu, |l| l > half)?;
        let rep_lower = lower.validate_hypothesis()?;
        let rep_upper = upper.validate_hypothesis()?;
        let gauss = LimitLaw::estimate(&lower, &rep_lower, seed ^ 0x11, opts.clone())?;
        let stable = LimitLaw::estimate(&upper, &rep_upper, seed ^ 0x22, opts.clone())?;
        let (z, mean) = mu.mean_operator_and_mean(alpha)?;
        let (trunc, _) = default_truncation(mu, alpha, opts.truncation_tol);
        let stationary = sample_stationary(mu, trunc, seed ^ salt::STAT, 0, opts.n_stationary, opts.truncation_tol)?;
        Ok(LimitLaw {
            regime: Regime::MixedT3,
            alpha,
            m_alpha: report.m_alpha,
            structure: report.structure.clone(),
            blocks,
            mean,
            z,
            q: None,
            stationary: Some(stationary),
            dual_ops: None,
            sigma: None,
            shell_table: None,
            stationary_scale_grid: Vec::new(),
            opts,
            mixed: Some(Box::new((gauss, stable))),
        })
    }

    fn build_shell_table(&self) -> Result<ShellTable<T>> {
        let stationary = self.stationary.as_ref().expect("built with samples");
        let lam = LambdaTilde {
            samples: stationary,
            blocks: &self.blocks,
            structure: &self.structure,
            alpha: self.alpha,
            scale_grid: self.stationary_scale_grid.clone(),
            sigma: self.sigma.as_ref(),
            max_samples: self.opts.lambda_max_samples,
        };
        let bins = ShellBins::new(
            self.blocks.dim(),
            &self.structure,
            self.opts.shell_angle_bins,
            self.opts.shell_radial_bins,
        );
        ShellTable::build(&lam, bins)
    }

    /// Dual samples `W_j = Z*_j v`.
    fn dual_rows(&self, v: &[T], cap: usize) -> Result<TrajectoryBatch<T>> {
        let ops = self
            .dual_ops
            .as_ref()
            .ok_or_else(|| Error::Regime("no dual samples in this regime".into()))?;
        let d = self.blocks.dim();
        let n = if cap == 0 { ops.len() } else { cap.min(ops.len()) };
        let mut data = Vec::with_capacity(n * d);
        for z in &ops[..n] {
            data.extend_from_slice(&z.matvec(v));
        }
        Ok(TrajectoryBatch {
            data,
            dim: d,
            kind: crate::engine::ChainKind::Dual,
            chain_len: 0,
            seed: 0,
            stream_offset: 0,
            truncation_bound: 0.0,
            truncation_warning: false,
        })
    }

    /// Exact mean of the dual law: `E[Z*] v = (I − z*)^{-1} z* v`.
    pub fn dual_mean(&self, v: &[T]) -> Result<Vec<T>> {
        let zt = self.z.transpose();
        let d = v.len();
        Matrix::identity(d).sub(&zt).solve(&zt.matvec(v))
    }

    /// The tail-representation route: `C_α(v) = α m_α Δ_v(Λ̃¹)` with the
    /// radial Haar factor replacing `α` in lattice mode; at α = 1 only the
    /// drift-free part.
    pub fn c_via_delta(&self, v: &[T]) -> Result<Estimate<T>> {
        if self.regime == Regime::AlphaGt2 || self.regime == Regime::MixedT3 {
            return Err(Error::Regime("tail route needs α ≤ 2".into()));
        }
        if norm2(v) == T::zero() {
            return Ok(Estimate {
                value: Complex::new(T::zero(), T::zero()),
                se: T::zero(),
                spread: T::zero(),
            });
        }
        let table = self.shell_table.as_ref().expect("built");
        let eta = self.dual_rows(v, 0)?;
        let radials: Vec<T> = eta.rows().map(|w| self.blocks.radial(w)).collect();
        let grid = scale_grid(
            &radials,
            &self.structure,
            self.opts.scale_q_lo,
            self.opts.scale_q_hi,
            self.opts.scale_points,
        )?;
        let est = delta_v_of_lambda1(
            &eta,
            table,
            &self.blocks,
            &self.structure,
            self.alpha,
            &grid,
            false,
        )?;
        let factor = radial_haar_factor(&self.structure, self.alpha) * self.m_alpha;
        Ok(Estimate {
            value: est.value * factor,
            se: est.se * factor.abs(),
            spread: est.spread * factor.abs(),
        })
    }

    /// The direct route: nested Monte Carlo over the printed regime
    /// integrand, with the inner dual characteristic function averaged over
    /// a dual subsample; at α = 2 the angular quadrature.
    pub fn c_direct(&self, v: &[T]) -> Result<Estimate<T>> {
        if self.regime == Regime::AlphaGt2 || self.regime == Regime::MixedT3 {
            return Err(Error::Regime("direct route needs α ≤ 2".into()));
        }
        if norm2(v) == T::zero() {
            return Ok(Estimate {
                value: Complex::new(T::zero(), T::zero()),
                se: T::zero(),
                spread: T::zero(),
            });
        }
        let regime = tail_regime(self.alpha)?;
        if regime == TailRegime::At2 {
            let sigma = self
                .sigma
                .as_ref()
                .ok_or_else(|| Error::Input("α = 2 direct route needs σ̂".into()))?;
            // −¼ ∫ (⟨v,w⟩² + 2⟨v,w⟩ η_v(w*)) σ(dw), with the dual mean in
            // closed form through the averaged operator
            let mw = self.dual_mean(v)?;
            let mut acc = T::zero();
            for b in &sigma.bins {
                let vw = dot(v, &b.rep);
                let wm = dot(&b.rep, &mw);
                acc -= T::of(0.25) * (vw * vw + T::of(2.0) * vw * wm) * b.mass;
            }
            return Ok(Estimate {
                value: Complex::new(acc, T::zero()),
                se: T::zero(),
                spread: T::zero(),
            });
        }
        let stationary = self.stationary.as_ref().expect("built");
        let duals = self.dual_rows(v, self.opts.inner_cf_samples)?;
        let tol = T::tol(1e-9);
        let alpha = self.alpha;
        let blocks = &self.blocks;
        let integrand = |x: &[T]| -> Complex<T> {
            let phase = dot(v, x);
            let mut f = Complex::new(phase.cos() - T::one(), phase.sin());
            // inner dual characteristic function η̂_v(x)
            let mut cf = Complex::new(T::zero(), T::zero());
            for w in duals.rows() {
                let p = dot(x, w);
                cf += Complex::new(p.cos(), p.sin());
            }
            cf /= T::of(duals.n_rows() as f64);
            f *= cf;
            match regime {
                TailRegime::Below1 => f,
                TailRegime::At1 => {
                    let x1 = blocks.project(x, |l| (l - T::one()).abs() <= tol);
                    let n1 = norm2(&x1);
                    let c = dot(v, &x1) / (T::one() + n1 * n1);
                    f - Complex::new(T::zero(), c)
                }
                TailRegime::Between1And2 => {
                    let xl = blocks.project(x, |l| l < alpha - tol);
                    let mut g = f - Complex::new(T::zero(), dot(v, &xl));
                    let has_alpha_block =
                        blocks.exponents().iter().any(|l| (*l - alpha).abs() <= tol);
                    if has_alpha_block {
                        let xa = blocks.project(x, |l| (l - alpha).abs() <= tol);
                        let na = norm2(&xa);
                        g -= Complex::new(T::zero(), dot(v, &xa) / (T::one() + na * na));
                    }
                    g
                }
                TailRegime::At2 => unreachable!(),
            }
        };
        let lam = LambdaTilde {
            samples: stationary,
            blocks: &self.blocks,
            structure: &self.structure,
            alpha,
            scale_grid: self.stationary_scale_grid.clone(),
            sigma: None,
            max_samples: self.opts.lambda_max_samples,
        };
        let est = lam.integrate(integrand)?;
        // inner-average noise: one extra half-split over the dual subsample
        let inner_se = est.value.norm() * T::of(2.0)
            / T::of((duals.n_rows() as f64).sqrt());
        Ok(Estimate {
            value: est.value,
            se: est.se + inner_se,
            spread: est.spread,
        })
    }

    /// Drift integral for the α = 1 regime (high variance; reduced
    /// precision): the double tail integral of the compensator bracket.
    pub fn gamma_drift(&self, v: &[T]) -> Result<Estimate<T>> {
        if self.regime != Regime::AlphaEq1 {
            return Err(Error::Regime("drift integral is an α = 1 object".into()));
        }
        let stationary = self.stationary.as_ref().expect("built");
        let duals = self.dual_rows(v, self.opts.inner_cf_samples)?;
        let lam = LambdaTilde {
            samples: stationary,
            blocks: &self.blocks,
            structure: &self.structure,
            alpha: self.alpha,
            scale_grid: self.stationary_scale_grid.clone(),
            sigma: None,
            max_samples: self.opts.lambda_max_samples,
        };
        let n_dual = duals.n_rows();
        let integrand = |x: &[T]| -> Complex<T> {
            let nx = norm2(x);
            let vx = dot(v, x);
            let mut acc = -vx / (T::one() + nx * nx);
            for y in duals.rows() {
                let ny = norm2(y);
                let yx = dot(y, x);
                let mut vyx = vx + yx;
                let nvy = {
                    let mut s = T::zero();
                    for (a, b) in v.iter().zip(y.iter()) {
                        let t = *a + *b;
                        s += t * t;
                    }
                    s.sqrt()
                };
                vyx /= T::one() + nvy * nvy * nx * nx;
                let yc = yx / (T::one() + ny * ny * nx * nx);
                acc += (vyx - yc) / T::of(n_dual as f64);
            }
            Complex::new(acc, T::zero())
        };
        let est = lam.integrate(integrand)?;
        Ok(Estimate {
            value: est.value,
            se: est.se + est.value.norm() * T::of(4.0) / T::of((n_dual as f64).sqrt()),
            spread: est.spread,
        })
    }

    /// Canonical log-characteristic function `C(v)` of the limit law:
    /// closed form in the Gaussian regime, the tail representation for
    /// α ≤ 2 (drift-free at α = 1: the imaginary part is fitted at
    /// verification time).
    pub fn c(&self, v: &[T]) -> Result<Complex<T>> {
        match self.regime {
            Regime::AlphaGt2 => {
                let q = self.q.as_ref().expect("gaussian parameters");
                let (_, exponent) = c_2plus(v, q, &self.z, &self.mean)?;
                Ok(Complex::new(exponent, T::zero()))
            }
            Regime::MixedT3 => {
                let (gauss, stable) = self.mixed.as_deref().expect("mixed parts");
                let (v_lo, v_hi) = self.split_mixed(v);
                Ok(gauss.c(&v_lo)? + stable.c(&v_hi)?)
            }
            _ => Ok(self.c_via_delta(v)?.value),
        }
    }

    /// `Φ(v) = exp C(v)`.
    pub fn phi(&self, v: &[T]) -> Result<Complex<T>> {
        Ok(self.c(v)?.exp())
    }

    /// Splits a frequency vector into the V₋ / V₊ components of the mixed
    /// regime, each expressed in its projected sub-law coordinates.
    fn split_mixed(&self, v: &[T]) -> (Vec<T>, Vec<T>) {
        let half = self.alpha * T::of(0.5);
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for j in 0..self.blocks.n_blocks() {
            let r = self.blocks.block_range(j);
            if self.blocks.exponents()[j] < half {
                lo.extend_from_slice(&v[r]);
            } else {
                hi.extend_from_slice(&v[r]);
            }
        }
        (lo, hi)
    }

    /// Verifies the stability identity along the scale group:
    /// `log Φ(u* v) − |u|^α log Φ(v)` must be purely imaginary and linear
    /// in `v`. Fits the translation part and reports the residual.
    pub fn stability_check(&self, u_scale: T, v_grid: &[Vec<T>]) -> Result<StabilityReport<T>> {
        let alpha_bar = u_scale.powf(self.alpha);
        let mut resid: Vec<(Vec<T>, Complex<T>)> = Vec::with_capacity(v_grid.len());
        for v in v_grid {
            let uv = self.blocks.dilate(u_scale, v); // u* v for a pure dilation
            let lhs = self.c(&uv)?;
            let rhs = self.c(v)? * alpha_bar;
            resid.push((v.clone(), lhs - rhs));
        }
        // least-squares fit of resid ≈ i⟨β, v⟩
        let d = self.blocks.dim();
        let mut ata = Matrix::<T>::zeros(d, d);
        let mut atb = vec![T::zero(); d];
        for (v, r) in &resid {
            for i in 0..d {
                for j in 0..d {
                    ata[(i, j)] += v[i] * v[j];
                }
                atb[i] += v[i] * r.im;
            }
        }
        let beta = match ata.solve(&atb) {
            Ok(b) => b,
            Err(_) => vec![T::zero(); d],
        };
        let mut worst = T::zero();
        let mut scale = T::zero();
        for (v, r) in &resid {
            let fitted = Complex::new(T::zero(), dot(&beta, v));
            let err = (*r - fitted).norm();
            if err > worst {
                worst = err;
            }
            let mag = self.c(v)?.norm();
            if mag > scale {
                scale = mag;
            }
        }
        Ok(StabilityReport {
            beta,
            max_residual: worst,
            scale,
            relative_residual: if scale > T::zero() { worst / scale } else { worst },
        })
    }
}

/// Result of the stability identity fit.
#[derive(Clone, Debug)]
pub struct StabilityReport<T> {
    pub beta: Vec<T>,
    pub max_residual: T,
    pub scale: T,
    pub relative_residual: T,
}

/// Projection of a driving measure onto a subset of blocks (the linear
/// parts preserve blocks, so this is again a valid spec).
pub fn project_mu<T: Real>(mu: &MuSpec<T>, keep: impl Fn(T) -> bool) -> Result<MuSpec<T>> {
    let blocks = mu.blocks();
    let kept: Vec<usize> = (0..blocks.n_blocks())
        .filter(|j| keep(blocks.exponents()[*j]))
        .collect();
    if kept.is_empty() {
        return Err(Error::Input("projection keeps no blocks".into()));
    }
    // exponents renormalized so the first kept block has exponent 1
    let lam0 = blocks.exponents()[kept[0]];
    let new_exponents: Vec<T> = kept.iter().map(|&j| blocks.exponents()[j] / lam0).collect();
    let new_dims: Vec<usize> = kept.iter().map(|&j| blocks.block_dims()[j]).collect();
    let new_blocks = Arc::new(BlockStructure::new(new_exponents, new_dims)?);
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| {
            let orth: Vec<Matrix<T>> = kept
                .iter()
                .map(|&j| a.map.orthogonal_parts()[j].clone())
                .collect();
            let mut shift = Vec::new();
            for &j in &kept {
                shift.extend_from_slice(&a.shift[blocks.block_range(j)]);
            }
            Ok(crate::measure::AffineAtom {
                prob: a.prob,
                map: crate::group::Similarity::new(
                    new_blocks.clone(),
                    a.map.norm().powf(lam0),
                    orth,
                )?,
                shift,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MuSpec::new(new_blocks, atoms, None)
}

/// One entry of a centering schedule: the normalized sum is
/// `blockwise_scale(S_n) − shift`.
#[derive(Clone, Debug)]
pub struct Normalization<T> {
    pub n: u64,
    /// per-block multiplicative factors applied to `S_n`
    pub block_factors: Vec<T>,
    pub shift: Vec<T>,
    /// lattice mode: whether `⌊|c|^{-α}⌋ = n` exactly
    pub exact: bool,
}

impl<T: Real> Normalization<T> {
    pub fn apply(&self, blocks: &BlockStructure<T>, s: &[T], out: &mut [T]) {
        for j in 0..blocks.n_blocks() {
            let f = self.block_factors[j];
            for i in blocks.block_range(j) {
                out[i] = s[i] * f - self.shift[i];
            }
        }
    }
}

/// Builds the centering schedule for a list of times per the regime.
pub fn centering_schedule<T: Real>(
    law: &LimitLaw<T>,
    n_list: &[u64],
) -> Result<Vec<Normalization<T>>> {
    let blocks = &law.blocks;
    let d = blocks.dim();
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let nf = T::of(n as f64);
        let entry = match law.regime {
            Regime::AlphaGt2 => {
                let c = nf.sqrt().recip();
                let shift: Vec<T> = law.mean.iter().map(|m| *m * nf * c).collect();
                Normalization {
                    n,
                    block_factors: vec![c; blocks.n_blocks()],
                    shift,
                    exact: true,
                }
            }
            Regime::AlphaEq2 => {
                // |c_n| √(n log n) → 1, snapped to the lattice when needed
                let raw = (nf * nf.ln().max(T::one())).sqrt().recip();
                let c = law.structure.snap_scale(raw);
                let shift: Vec<T> = law.mean.iter().map(|m| *m * nf * c).collect();
                Normalization {
                    n,
                    block_factors: vec![c; blocks.n_blocks()],
                    shift,
                    exact: true,
                }
            }
            Regime::MixedT3 => {
                let (c, exact) =
                    crate::group::normalizer_schedule(&law.structure, law.alpha, n)?;
                let half = law.alpha * T::of(0.5);
                let mut factors = Vec::with_capacity(blocks.n_blocks());
                for j in 0..blocks.n_blocks() {
                    let lam = blocks.exponents()[j];
                    if lam < half {
                        factors.push(nf.sqrt().recip());
                    } else {
                        factors.push(c.powf(lam));
                    }
                }
                // shift: (n m / √n) on V₋, n ξ₂(c_n) on V₊
                let stationary = law.stationary.as_ref().expect("built");
                let (_, xi2) = xi1_xi2(c, stationary, blocks, law.alpha)?;
                let mut shift = vec![T::zero(); d];
                for j in 0..blocks.n_blocks() {
                    let lam = blocks.exponents()[j];
                    for i in blocks.block_range(j) {
                        if lam < half {
                            shift[i] = law.mean[i] * nf / nf.sqrt();
                        } else {
                            shift[i] = xi2[i] * nf;
                        }
                    }
                }
                Normalization {
                    n,
                    block_factors: factors,
                    shift,
                    exact,
                }
            }
            Regime::AlphaLt1 => {
                let (c, exact) =
                    crate::group::normalizer_schedule(&law.structure, law.alpha, n)?;
                Normalization {
                    n,
                    block_factors: blocks.exponents().iter().map(|l| c.powf(*l)).collect(),
                    shift: vec![T::zero(); d],
                    exact,
                }
            }
            Regime::AlphaEq1 => {
                let (c, exact) =
                    crate::group::normalizer_schedule(&law.structure, law.alpha, n)?;
                let stationary = law.stationary.as_ref().expect("built");
                let (xi_c, _) = xi(c, stationary, blocks);
                Normalization {
                    n,
                    block_factors: blocks.exponents().iter().map(|l| c.powf(*l)).collect(),
                    shift: xi_c.iter().map(|x| *x * nf).collect(),
                    exact,
                }
            }
            Regime::Alpha1to2 => {
                let (c, exact) =
                    crate::group::normalizer_schedule(&law.structure, law.alpha, n)?;
                let cm = blocks.dilate(c, &law.mean);
                Normalization {
                    n,
                    block_factors: blocks.exponents().iter().map(|l| c.powf(*l)).collect(),
                    shift: cm.iter().map(|x| *x * nf).collect(),
                    exact,
                }
            }
        };
        out.push(entry);
    }
    Ok(out)
}

mod salt {
    pub const STAT: u64 = 0x9e37_79b9;
    pub const DUAL: u64 = 0x7f4a_7c15;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn law_for(mu: &MuSpec<f64>, seed: u64, opts: LawOptions) -> LimitLaw<f64> {
        let rep = mu.validate_hypothesis().unwrap();
        LimitLaw::estimate(mu, &rep, seed, opts).unwrap()
    }

    fn small_opts() -> LawOptions {
        LawOptions {
            n_stationary: 40_000,
            n_dual: 40_000,
            inner_cf_samples: 2048,
            lambda_max_samples: 20_000,
            ..LawOptions::default()
        }
    }

    #[test]
    fn c2plus_closed_form() {
        let q = Matrix::<f64>::from_rows(&[vec![6.0]]).unwrap();
        let z = Matrix::from_rows(&[vec![2.0 / 3.0]]).unwrap();
        let (c2, exponent) = c_2plus(&[1.0], &q, &z, &[3.0]).unwrap();
        assert!((exponent + 15.0).abs() < 1e-12, "exponent {exponent}");
        assert!((c2 + 19.5).abs() < 1e-12, "C2+ {c2}");
        let (_, e0) = c_2plus(&[0.0], &q, &z, &[3.0]).unwrap();
        assert_eq!(e0, 0.0);
        let (_, e2) = c_2plus(&[2.0], &q, &z, &[3.0]).unwrap();
        assert!((e2 - 4.0 * exponent).abs() < 1e-12);
    }

    #[test]
    fn gaussian_law_phi() {
        let mu = presets::alpha3_lattice::<f64>();
        let rep = mu.validate_hypothesis().unwrap();
        let law = LimitLaw::estimate(&mu, &rep, 7, small_opts()).unwrap();
        assert_eq!(law.regime, Regime::AlphaGt2);
        // empirical q ≈ 6 gives Φ(1) ≈ e^{−15}
        let c = law.c(&[1.0]).unwrap();
        assert!(
            (c.re + 15.0).abs() < 0.8,
            "C(1) = {c} (empirical covariance)"
        );
        assert_eq!(law.phi(&[0.0]).unwrap(), Complex::new(1.0, 0.0));
    }

    #[test]
    fn xi_zero_and_symmetry() {
        let mu = presets::alpha3_symmetric::<f64>();
        let batch =
            crate::engine::sample_stationary(&mu, 60, 3, 0, 50_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        let (x0, _) = xi(0.0, &batch, &blocks);
        assert_eq!(x0, vec![0.0]);
        let (xc, se) = xi(0.3, &batch, &blocks);
        assert!(xc[0].abs() < 3.0 * se + 1e-3, "ξ = {} ± {se}", xc[0]);
    }

    #[test]
    fn xi_log_bound() {
        let mu = presets::alpha1_lattice::<f64>();
        let batch =
            crate::engine::sample_stationary(&mu, 200, 5, 0, 100_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        // fitted front constant of |ξ(c)| ≤ I |c| |log c| stays bounded
        let mut ratios = Vec::new();
        for k in 2..9 {
            let c = 2.0f64.powi(-k);
            let (x, _) = xi(c, &batch, &blocks);
            ratios.push(x[0].abs() / (c * c.ln().abs()));
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && max < 10.0 * min.max(1e-6), "{ratios:?}");
    }

    #[test]
    fn covariance_matches_closed_form() {
        let mu = presets::alpha3_lattice::<f64>();
        let batch =
            crate::engine::sample_stationary(&mu, 60, 9, 0, 100_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        let (q, se) = covariance_q(&batch, &[3.0], &blocks, 3.0, None).unwrap();
        assert!(
            (q[(0, 0)] - 6.0).abs() < 3.0 * se[(0, 0)],
            "q = {} ± {}",
            q[(0, 0)],
            se[(0, 0)]
        );
        assert!(covariance_q(&batch, &[3.0], &blocks, 2.0, None).is_err());
    }

    #[test]
    fn covariance_psd_d2() {
        let mu = presets::d2_generic_alpha3::<f64>().unwrap();
        let batch = crate::engine::sample_stationary(&mu, 60, 4, 0, 40_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        let mean = batch.mean();
        let (q, _) = covariance_q(&batch, &mean, &blocks, 3.0, None).unwrap();
        assert!((q[(0, 1)] - q[(1, 0)]).abs() < 1e-12);
        // PSD for 2×2: diagonal ≥ 0 and det ≥ 0
        assert!(q[(0, 0)] >= 0.0 && q[(1, 1)] >= 0.0);
        assert!(q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)] >= -1e-9);
    }

    #[test]
    fn c_routes_zero_at_origin() {
        let mu = presets::alpha_half_lattice::<f64>();
        let law = law_for(&mu, 11, small_opts());
        assert_eq!(law.c_via_delta(&[0.0]).unwrap().value.norm(), 0.0);
        assert_eq!(law.c_direct(&[0.0]).unwrap().value.norm(), 0.0);
    }

    #[test]
    fn c_negative_real_part() {
        let mu = presets::alpha_half_lattice::<f64>();
        let law = law_for(&mu, 11, small_opts());
        for v in [0.5, 1.0, 2.0] {
            let c = law.c(&[v]).unwrap();
            assert!(c.re < 0.0, "Re C({v}) = {}", c.re);
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let mu = presets::alpha_half_lattice::<f64>();
        let law = law_for(&mu, 13, small_opts());
        let a = law.c(&[1.2]).unwrap();
        let b = law.c(&[-1.2]).unwrap();
        assert!((a - b.conj()).norm() < 1e-9, "{a} vs conj {b}");
    }

    #[test]
    fn homogeneity_along_lattice() {
        let mu = presets::alpha_half_lattice::<f64>();
        let law = law_for(&mu, 17, LawOptions::default());
        let base = law.c(&[1.0]).unwrap();
        let scaled = law.c(&[2.0]).unwrap();
        let expect = base * 2.0f64.powf(0.5);
        let rel = (scaled - expect).norm() / expect.norm();
        assert!(rel < 0.12, "C(2v) = {scaled}, |2|^α C(v) = {expect}");
    }

    #[test]
    fn stability_check_lattice_half() {
        let mu = presets::alpha_half_lattice::<f64>();
        let law = law_for(&mu, 19, LawOptions::default());
        let grid: Vec<Vec<f64>> = (1..=5).map(|i| vec![0.4 * i as f64]).collect();
        let rep = law.stability_check(0.5, &grid).unwrap();
        assert!(
            rep.relative_residual < 0.10,
            "residual {}",
            rep.relative_residual
        );
    }

    #[test]
    fn mixed_regime_splits() {
        let mu = presets::block_mixed_alpha3::<f64>().unwrap();
        let rep = mu.validate_hypothesis().unwrap();
        assert_eq!(regime_of(rep.alpha, mu.blocks()), Regime::MixedT3);
        let law = LimitLaw::estimate(&mu, &rep, 23, small_opts()).unwrap();
        let c = law.c(&[1.0, 0.5]).unwrap();
        assert!(c.re < 0.0);
        // product structure: frequencies supported on one factor only add
        let c_lo = law.c(&[1.0, 0.0]).unwrap();
        let c_hi = law.c(&[0.0, 0.5]).unwrap();
        assert!((c - (c_lo + c_hi)).norm() < 1e-9);
    }

    #[test]
    fn xi2_limit_matches_projected_mean() {
        let mu = presets::block_mixed_alpha3::<f64>().unwrap();
        let batch = crate::engine::sample_stationary(&mu, 80, 3, 0, 60_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        // ξ₂(c_n)/|c_n|^{λ_{k₀+1}} → ∫ u_{λ_{k₀+1}} ν₊(du): here exact since
        // the α block is empty, so ξ₂(c) = c·m₂ exactly
        let mean2 = batch.mean()[1];
        for c in [0.5, 0.25, 0.125] {
            let (_, xi2) = xi1_xi2(c, &batch, &blocks, 3.0).unwrap();
            let ratio = xi2[1] / c.powi(2);
            assert!(
                (ratio - mean2).abs() / mean2.abs() < 0.10,
                "ratio {ratio} vs {mean2}"
            );
        }
    }

    #[test]
    fn centering_schedule_regimes() {
        let mu = presets::alpha_half_lattice::<f64>();
        let law = law_for(&mu, 29, small_opts());
        let sched = centering_schedule(&law, &[4, 7, 8]).unwrap();
        assert!(sched[0].exact); // ⌊2^{4/2}⌋ = 4
        assert!(!sched[1].exact);
        assert!(sched[2].exact); // ⌊2^{6/2}⌋ = 8
        assert!(sched.iter().all(|e| e.shift.iter().all(|s| *s == 0.0)));
    }
}
