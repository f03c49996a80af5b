//! Tail estimation: tail exponent, per-scale tail constants, the angular
//! measure on the fundamental domain, and the tail functionals that
//! parameterize the limit laws.
//!
//! All scaling limits are taken along the detected scale group: in lattice
//! mode every reference scale is a power of the lattice base, because the
//! tail has a periodic multiplicative part and the limits only hold along
//! the group.

use num_complex::Complex;

use crate::engine::TrajectoryBatch;
use crate::error::{Error, Result};
use crate::group::{BlockStructure, GroupStructure, GroupVariant};
use crate::scalar::Real;
use crate::stats::quantile_sorted;

/// Regime tag for the compensated integrands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailRegime {
    Below1,
    At1,
    Between1And2,
    At2,
}

pub fn tail_regime<T: Real>(alpha: T) -> Result<TailRegime> {
    let tol = T::tol(1e-9);
    if (alpha - T::one()).abs() <= tol {
        Ok(TailRegime::At1)
    } else if (alpha - T::of(2.0)).abs() <= tol {
        Ok(TailRegime::At2)
    } else if alpha < T::one() {
        Ok(TailRegime::Below1)
    } else if alpha < T::of(2.0) {
        Ok(TailRegime::Between1And2)
    } else {
        Err(Error::Regime("tail functionals need α ≤ 2".into()))
    }
}

/// Monte Carlo estimate with a split-half statistical error and the
/// systematic spread across the reference-scale grid.
#[derive(Clone, Copy, Debug)]
pub struct Estimate<T> {
    pub value: Complex<T>,
    pub se: T,
    pub spread: T,
}

impl<T: Real> Estimate<T> {
    /// Combined error: statistical plus half the scale-window spread.
    pub fn combined_error(&self) -> T {
        self.se + self.spread * T::of(0.5)
    }
}

/// Hill estimator on the top `k_fraction` order statistics of the
/// homogeneous norms; `SE = α̂ / sqrt(k)`.
pub fn hill_alpha<T: Real>(tau_values: &[T], k_fraction: f64) -> Result<(T, T)> {
    if tau_values.len() < 1000 {
        return Err(Error::Estimation("Hill estimator needs N ≥ 1000".into()));
    }
    if !(k_fraction > 0.0 && k_fraction <= 0.2) {
        return Err(Error::Input("k_fraction must lie in (0, 0.2]".into()));
    }
    let mut v: Vec<T> = tau_values.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = ((tau_values.len() as f64) * k_fraction).floor() as usize;
    let k = k.max(2);
    let xk = v[k];
    if xk <= T::zero() {
        return Err(Error::Estimation("non-positive order statistic".into()));
    }
    let mut sum_log = T::zero();
    for x in &v[..k] {
        sum_log += (*x / xk).ln();
    }
    if sum_log <= T::zero() {
        return Err(Error::Estimation("degenerate top order statistics".into()));
    }
    let alpha = T::of(k as f64) / sum_log;
    let se = alpha / T::of(k as f64).sqrt();
    Ok((alpha, se))
}

/// One point of the tail-constant profile: `t^α P̂[τ > t]` with binomial SE.
#[derive(Clone, Debug)]
pub struct TailPoint<T> {
    pub t: T,
    pub constant: T,
    pub se: T,
    pub exceedances: u64,
}

#[derive(Clone, Debug)]
pub struct TailProfile<T> {
    pub alpha: T,
    pub points: Vec<TailPoint<T>>,
    /// max/min of the profile over the kept grid.
    pub flatness: T,
    /// true when trailing grid points were dropped for lack of exceedances.
    pub truncated: bool,
}

/// Per-scale tail constants `t^α P̂[τ(R) > t]` over a geometric `t` grid.
/// Grid points with fewer than 50 exceedances are dropped (with a warning
/// flag) since the binomial error there swamps the constant.
pub fn tail_constant_profile<T: Real>(
    tau_values: &[T],
    alpha: T,
    t_grid: &[T],
) -> Result<TailProfile<T>> {
    if t_grid.len() < 2 {
        return Err(Error::Input("t grid needs at least two points".into()));
    }
    let mut sorted = tau_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let max = *sorted.last().unwrap();
    let mut points = Vec::new();
    let mut truncated = false;
    for &t in t_grid {
        if t >= max {
            truncated = true;
            continue;
        }
        // count of τ > t via binary search
        let idx = sorted.partition_point(|x| *x <= t);
        let exceed = (n - idx) as u64;
        if exceed < 50 {
            truncated = true;
            continue;
        }
        let p = T::of(exceed as f64 / n as f64);
        let factor = t.powf(alpha);
        let se = factor * (p * (T::one() - p) / T::of(n as f64)).sqrt();
        points.push(TailPoint {
            t,
            constant: factor * p,
            se,
            exceedances: exceed,
        });
    }
    if points.len() < 2 {
        return Err(Error::Estimation(
            "fewer than two usable grid points in tail profile".into(),
        ));
    }
    let lo = points
        .iter()
        .map(|p| p.constant)
        .fold(T::infinity(), T::min);
    let hi = points
        .iter()
        .map(|p| p.constant)
        .fold(T::zero(), T::max);
    Ok(TailProfile {
        alpha,
        points,
        flatness: hi / lo,
        truncated,
    })
}

/// Geometric reference-scale grid between the `q_lo` and `q_hi` quantiles
/// of the radial coordinate, snapped to the scale group in lattice mode.
pub fn scale_grid<T: Real>(
    radials: &[T],
    structure: &GroupStructure<T>,
    q_lo: f64,
    q_hi: f64,
    n_points: usize,
) -> Result<Vec<T>> {
    let mut sorted = radials.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile_sorted(&sorted, q_lo);
    let hi = quantile_sorted(&sorted, q_hi);
    if !(lo > T::zero() && hi > lo) {
        return Err(Error::Estimation("degenerate radial quantiles".into()));
    }
    let mut grid = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let f = i as f64 / (n_points - 1).max(1) as f64;
        let s = (lo.ln() + T::of(f) * (hi.ln() - lo.ln())).exp();
        grid.push(structure.snap_scale(s));
    }
    grid.dedup_by(|a, b| ((*a - *b) / *b).abs() < T::tol(1e-12));
    if grid.len() < 2 {
        return Err(Error::Estimation(
            "scale window too narrow for the lattice".into(),
        ));
    }
    Ok(grid)
}

/// Geometric threshold grid for tail profiles: in lattice mode consecutive
/// powers of the base spanning at least `span` multiplicatively, anchored
/// near the `q_anchor` quantile.
pub fn default_t_grid<T: Real>(
    tau_values: &[T],
    structure: &GroupStructure<T>,
    q_anchor: f64,
    span: f64,
    n_points: usize,
) -> Result<Vec<T>> {
    let mut sorted = tau_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let t0 = quantile_sorted(&sorted, q_anchor);
    match structure.variant {
        GroupVariant::Dense => {
            let ratio = T::of(span.powf(1.0 / (n_points - 1) as f64));
            let mut t = t0;
            let mut grid = Vec::with_capacity(n_points);
            for _ in 0..n_points {
                grid.push(t);
                t *= ratio;
            }
            Ok(grid)
        }
        GroupVariant::Lattice(p) => {
            let t0 = structure.snap_scale(t0);
            let steps = (T::of(span).ln() / p.ln()).ceil().to_f64() as usize;
            let mut grid = Vec::new();
            let mut t = t0;
            for _ in 0..=steps.max(n_points - 1) {
                grid.push(t);
                t *= p;
            }
            Ok(grid)
        }
    }
}

/// Polar decomposition along the dilation orbit: `x = γ_r x̄` with
/// `r = a(x)` in dense mode and `r = p^⌊log_p a(x)⌋` in lattice mode, so
/// that the shell coordinate `x̄` lies in the fundamental domain.
pub fn polar<T: Real>(
    x: &[T],
    blocks: &BlockStructure<T>,
    structure: &GroupStructure<T>,
) -> (T, Vec<T>) {
    let a = blocks.radial(x);
    if a == T::zero() {
        return (T::zero(), x.to_vec());
    }
    let r = match structure.variant {
        GroupVariant::Dense => a,
        GroupVariant::Lattice(p) => p.powf((a.ln() / p.ln()).floor()),
    };
    let xbar = blocks.dilate(T::one() / r, x);
    (r, xbar)
}

/// Fixed binning of the fundamental domain.
///
/// d = 1: sign × log-radial bins (radial only in lattice mode);
/// d = 2: angle × log-radial bins; d ≥ 3: orthant bins (coarse).
#[derive(Clone, Debug)]
pub struct ShellBins<T> {
    dim: usize,
    n_angle: usize,
    n_radial: usize,
    lattice_base: Option<T>,
}

impl<T: Real> ShellBins<T> {
    pub fn new(dim: usize, structure: &GroupStructure<T>, n_angle: usize, n_radial: usize) -> Self {
        let lattice_base = structure.lattice_base();
        let n_radial = if lattice_base.is_some() { n_radial } else { 1 };
        ShellBins {
            dim,
            n_angle,
            n_radial,
            lattice_base,
        }
    }

    pub fn len(&self) -> usize {
        match self.dim {
            1 => 2 * self.n_radial,
            2 => self.n_angle * self.n_radial,
            d => 1 << d.min(8),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn radial_index(&self, xbar_radial: T) -> usize {
        match self.lattice_base {
            None => 0,
            Some(p) => {
                let f = (xbar_radial.ln() / p.ln()).to_f64().clamp(0.0, 0.999_999);
                ((f * self.n_radial as f64) as usize).min(self.n_radial - 1)
            }
        }
    }

    /// Bin index of a shell point (radial coordinate of `x̄` passed along
    /// to avoid recomputation; it is 1 in dense mode).
    pub fn index_of(&self, xbar: &[T], xbar_radial: T) -> usize {
        match self.dim {
            1 => {
                let sign = if xbar[0] < T::zero() { 1 } else { 0 };
                sign * self.n_radial + self.radial_index(xbar_radial)
            }
            2 => {
                let ang = xbar[1].atan2(xbar[0]).to_f64();
                let tau = std::f64::consts::TAU;
                let f = ((ang + tau) % tau) / tau;
                let ai = ((f * self.n_angle as f64) as usize).min(self.n_angle - 1);
                ai * self.n_radial + self.radial_index(xbar_radial)
            }
            _ => {
                let mut idx = 0usize;
                for (b, v) in xbar.iter().take(8).enumerate() {
                    if *v < T::zero() {
                        idx |= 1 << b;
                    }
                }
                idx
            }
        }
    }
}

/// Estimated angular measure: mass and mean representative per shell bin.
#[derive(Clone, Debug)]
pub struct AngularHistogram<T> {
    pub bins: Vec<AngularBin<T>>,
    pub total_mass: T,
    /// `(C₊, C₋)` for one-dimensional data.
    pub d1_constants: Option<(T, T)>,
}

#[derive(Clone, Debug)]
pub struct AngularBin<T> {
    pub rep: Vec<T>,
    pub mass: T,
    pub count: u64,
}

/// Estimates the angular measure from threshold exceedances.
///
/// The mass of a shell set `B` is `factor · s^α · P̂[r(x) ≥ s, x̄ ∈ B]`
/// averaged over thresholds `s`, with `factor = α` in dense mode and
/// `(1 − p^{−α})/log p` in lattice mode (Haar normalization of the radial
/// part).
pub fn angular_measure<T: Real>(
    batch: &TrajectoryBatch<T>,
    blocks: &BlockStructure<T>,
    structure: &GroupStructure<T>,
    alpha: T,
    thresholds: &[T],
    bins: &ShellBins<T>,
) -> Result<AngularHistogram<T>> {
    let n = batch.n_rows();
    let polars: Vec<(T, Vec<T>)> = batch
        .rows()
        .map(|r| polar(r, blocks, structure))
        .collect();
    let factor = radial_haar_factor(structure, alpha);
    let n_bins = bins.len();
    let mut mass_acc = vec![T::zero(); n_bins];
    let mut rep_acc = vec![vec![T::zero(); batch.dim]; n_bins];
    let mut counts = vec![0u64; n_bins];
    let mut used_thresholds = 0usize;
    for &s in thresholds {
        let mut exceed = 0u64;
        let mut bin_counts = vec![0u64; n_bins];
        for (r, xbar) in &polars {
            if *r >= s {
                exceed += 1;
                let (rr, _) = polar(xbar, blocks, structure);
                let idx = bins.index_of(xbar, rr.max(T::one()));
                bin_counts[idx] += 1;
            }
        }
        if exceed < 500 {
            continue;
        }
        used_thresholds += 1;
        let scale = factor * s.powf(alpha) / T::of(n as f64);
        for (i, c) in bin_counts.iter().enumerate() {
            mass_acc[i] += scale * T::of(*c as f64);
        }
    }
    if used_thresholds == 0 {
        return Err(Error::Estimation(
            "no threshold had at least 500 exceedances".into(),
        ));
    }
    // representatives from the largest threshold with enough exceedances
    let s_rep = thresholds
        .iter()
        .copied()
        .filter(|s| polars.iter().filter(|(r, _)| r >= s).count() >= 500)
        .fold(T::zero(), T::max);
    for (r, xbar) in &polars {
        if *r >= s_rep {
            let (rr, _) = polar(xbar, blocks, structure);
            let idx = bins.index_of(xbar, rr.max(T::one()));
            counts[idx] += 1;
            for (a, b) in rep_acc[idx].iter_mut().zip(xbar.iter()) {
                *a += *b;
            }
        }
    }
    let inv = T::one() / T::of(used_thresholds as f64);
    let mut out_bins = Vec::with_capacity(n_bins);
    let mut total = T::zero();
    for i in 0..n_bins {
        let mass = mass_acc[i] * inv;
        total += mass;
        let rep = if counts[i] > 0 {
            rep_acc[i]
                .iter()
                .map(|v| *v / T::of(counts[i] as f64))
                .collect()
        } else {
            vec![T::zero(); batch.dim]
        };
        out_bins.push(AngularBin {
            rep,
            mass,
            count: counts[i],
        });
    }
    let d1_constants = if batch.dim == 1 {
        let mut c_plus = T::zero();
        let mut c_minus = T::zero();
        for b in &out_bins {
            if b.rep[0] >= T::zero() {
                c_plus += b.mass;
            } else {
                c_minus += b.mass;
            }
        }
        Some((c_plus, c_minus))
    } else {
        None
    };
    Ok(AngularHistogram {
        bins: out_bins,
        total_mass: total,
        d1_constants,
    })
}

/// Haar normalization of the radial part of the tail measure.
pub fn radial_haar_factor<T: Real>(structure: &GroupStructure<T>, alpha: T) -> T {
    match structure.variant {
        GroupVariant::Dense => alpha,
        GroupVariant::Lattice(p) => (T::one() - p.powf(-alpha)) / p.ln(),
    }
}

/// Estimator of the tail functional `Λ̃` (and of general tail integrals)
/// from frozen stationary samples.
pub struct LambdaTilde<'a, T> {
    pub samples: &'a TrajectoryBatch<T>,
    pub blocks: &'a BlockStructure<T>,
    pub structure: &'a GroupStructure<T>,
    pub alpha: T,
    pub scale_grid: Vec<T>,
    /// Angular quadrature, required in the α = 2 regime.
    pub sigma: Option<&'a AngularHistogram<T>>,
    /// Evaluate on at most this many samples (0 = all).
    pub max_samples: usize,
}

impl<'a, T: Real> LambdaTilde<'a, T> {
    /// Builds the estimator with the default scale window
    /// `[q_0.99, q_0.9999]` of `τ(R)` (5 geometric points, group-snapped).
    pub fn with_default_grid(
        samples: &'a TrajectoryBatch<T>,
        blocks: &'a BlockStructure<T>,
        structure: &'a GroupStructure<T>,
        alpha: T,
        sigma: Option<&'a AngularHistogram<T>>,
    ) -> Result<Self> {
        let radials: Vec<T> = samples.rows().map(|r| blocks.radial(r)).collect();
        let grid = scale_grid(&radials, structure, 0.99, 0.9999, 5)?;
        Ok(LambdaTilde {
            samples,
            blocks,
            structure,
            alpha,
            scale_grid: grid,
            sigma,
            max_samples: 0,
        })
    }

    fn regime(&self) -> Result<TailRegime> {
        tail_regime(self.alpha)
    }

    /// `Λ̃(y)` per the regime-compensated integrand; at α = 2 the angular
    /// quadrature `−¼ ∫ ⟨y,w⟩² σ̂(dw)` is used instead.
    pub fn evaluate(&self, y: &[T]) -> Result<Estimate<T>> {
        let regime = self.regime()?;
        if regime == TailRegime::At2 {
            let sigma = self.sigma.ok_or_else(|| {
                Error::Input("α = 2 evaluation needs an angular histogram".into())
            })?;
            let mut acc = T::zero();
            for b in &sigma.bins {
                let ip = crate::linalg::dot(y, &b.rep);
                acc -= T::of(0.25) * ip * ip * b.mass;
            }
            return Ok(Estimate {
                value: Complex::new(acc, T::zero()),
                se: T::zero(),
                spread: T::zero(),
            });
        }
        self.integrate(|x| regime_integrand(regime, y, x))
    }

    /// Tail integral `Λ(f) ≈ s^α E[f(γ_{1/s} R)]` averaged over the scale
    /// window, with split-half SE and the window spread.
    pub fn integrate(&self, f: impl Fn(&[T]) -> Complex<T>) -> Result<Estimate<T>> {
        let n_all = self.samples.n_rows();
        let n = if self.max_samples == 0 {
            n_all
        } else {
            self.max_samples.min(n_all)
        };
        if n < 100 {
            return Err(Error::Estimation("too few samples for tail integral".into()));
        }
        let d = self.samples.dim;
        let mut per_scale = Vec::with_capacity(self.scale_grid.len());
        let mut half_sums = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
        let mut scaled = vec![T::zero(); d];
        for &s in &self.scale_grid {
            let factor = s.powf(self.alpha);
            let mut acc = Complex::new(T::zero(), T::zero());
            let mut acc_a = Complex::new(T::zero(), T::zero());
            for i in 0..n {
                let row = self.samples.row(i);
                scaled.copy_from_slice(row);
                self.blocks.dilate_in_place(T::one() / s, &mut scaled);
                let v = f(&scaled);
                acc += v;
                if i % 2 == 0 {
                    acc_a += v;
                }
            }
            let mean = acc * (factor / T::of(n as f64));
            per_scale.push(mean);
            let n_a = n.div_ceil(2);
            let n_b = n - n_a;
            half_sums.0 += acc_a * (factor / T::of(n_a as f64));
            half_sums.1 += (acc - acc_a) * (factor / T::of(n_b.max(1) as f64));
        }
        let k = T::of(per_scale.len() as f64);
        let value = per_scale
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + *b)
            / k;
        let se = (half_sums.0 / k - half_sums.1 / k).norm() * T::of(0.5);
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for v in &per_scale {
            let m = v.norm();
            lo = lo.min(m);
            hi = hi.max(m);
        }
        Ok(Estimate {
            value,
            se,
            spread: hi - lo,
        })
    }
}

/// The regime-compensated integrand of `Λ̃`, exactly as printed:
/// `χ_y − 1` below 1, with the bounded compensator `i⟨x,y⟩/(1+|y|²|x|²)`
/// at 1, and with the full linear compensator between 1 and 2.
pub fn regime_integrand<T: Real>(regime: TailRegime, y: &[T], x: &[T]) -> Complex<T> {
    let phase = crate::linalg::dot(y, x);
    let e = Complex::new(phase.cos() - T::one(), phase.sin());
    match regime {
        TailRegime::Below1 => e,
        TailRegime::At1 => {
            let ny = crate::linalg::norm2(y);
            let nx = crate::linalg::norm2(x);
            let denom = T::one() + ny * ny * nx * nx;
            e - Complex::new(T::zero(), phase / denom)
        }
        TailRegime::Between1And2 => e - Complex::new(T::zero(), phase),
        TailRegime::At2 => unreachable!("handled by the angular quadrature"),
    }
}

/// `Λ̃` tabulated on shell bins, so that dual-tail functionals can be
/// evaluated with table lookups.
pub struct ShellTable<T> {
    bins: ShellBins<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ShellTable<T> {
    pub fn build(lambda: &LambdaTilde<'_, T>, bins: ShellBins<T>) -> Result<Self> {
        // representatives: bin centers from the sample shell points
        let n_bins = bins.len();
        let mut rep_acc = vec![vec![T::zero(); lambda.samples.dim]; n_bins];
        let mut counts = vec![0u64; n_bins];
        for row in lambda.samples.rows() {
            let (_, xbar) = polar(row, lambda.blocks, lambda.structure);
            let (rr, _) = polar(&xbar, lambda.blocks, lambda.structure);
            let idx = bins.index_of(&xbar, rr.max(T::one()));
            counts[idx] += 1;
            for (a, b) in rep_acc[idx].iter_mut().zip(xbar.iter()) {
                *a += *b;
            }
        }
        let mut values = vec![Complex::new(T::zero(), T::zero()); n_bins];
        for i in 0..n_bins {
            if counts[i] == 0 {
                continue;
            }
            let rep: Vec<T> = rep_acc[i]
                .iter()
                .map(|v| *v / T::of(counts[i] as f64))
                .collect();
            values[i] = lambda.evaluate(&rep)?.value;
        }
        Ok(ShellTable { bins, values })
    }

    pub fn lookup(&self, xbar: &[T], xbar_radial: T) -> Complex<T> {
        self.values[self.bins.index_of(xbar, xbar_radial)]
    }
}

/// `Δ_v(Λ̃¹)`: the dual-chain tail applied to the shell-truncated `Λ̃`.
///
/// With `(r, w̄)` the polar coordinates of a dual sample `W`, this is
/// `avg_s s^α · mean[Λ̃(w̄) · 1{r ≥ s}]` over the reference-scale grid.
pub fn delta_v_of_lambda1<T: Real>(
    eta: &TrajectoryBatch<T>,
    table: &ShellTable<T>,
    blocks: &BlockStructure<T>,
    structure: &GroupStructure<T>,
    alpha: T,
    scale_grid: &[T],
    real_part_only: bool,
) -> Result<Estimate<T>> {
    let n = eta.n_rows();
    if n < 100 {
        return Err(Error::Estimation("too few dual samples".into()));
    }
    let polars: Vec<(T, Complex<T>)> = eta
        .rows()
        .map(|w| {
            let (r, wbar) = polar(w, blocks, structure);
            let (rr, _) = polar(&wbar, blocks, structure);
            let mut v = table.lookup(&wbar, rr.max(T::one()));
            if real_part_only {
                v = Complex::new(v.re, T::zero());
            }
            (r, v)
        })
        .collect();
    let max_r = polars.iter().map(|(r, _)| *r).fold(T::zero(), T::max);
    for &s in scale_grid {
        if s > max_r {
            return Err(Error::Input(
                "scale grid exceeds the dual sample range".into(),
            ));
        }
    }
    let mut per_scale = Vec::with_capacity(scale_grid.len());
    let mut half = (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()));
    for &s in scale_grid {
        let factor = s.powf(alpha);
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut acc_a = Complex::new(T::zero(), T::zero());
        for (i, (r, lv)) in polars.iter().enumerate() {
            if *r >= s {
                acc += *lv;
                if i % 2 == 0 {
                    acc_a += *lv;
                }
            }
        }
        let mean = acc * (factor / T::of(n as f64));
        per_scale.push(mean);
        let n_a = n.div_ceil(2);
        half.0 += acc_a * (factor / T::of(n_a as f64));
        half.1 += (acc - acc_a) * (factor / T::of((n - n_a).max(1) as f64));
    }
    let k = T::of(per_scale.len() as f64);
    let value = per_scale
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + *b)
        / k;
    let se = (half.0 / k - half.1 / k).norm() * T::of(0.5);
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for v in &per_scale {
        let m = v.norm();
        lo = lo.min(m);
        hi = hi.max(m);
    }
    Ok(Estimate {
        value,
        se,
        spread: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::sample_stationary;
    use crate::presets;
    use crate::rng::RngStream;

    fn pareto_sample(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..n)
            .map(|_| {
                let u: f64 = rng.uniform();
                (1.0 - u).powf(-1.0 / alpha)
            })
            .collect()
    }

    #[test]
    fn hill_recovers_pareto_index() {
        let xs = pareto_sample(2.0, 100_000, 7);
        let (a, _se) = hill_alpha(&xs, 0.05).unwrap();
        assert!(a > 1.85 && a < 2.15, "α̂ = {a}");
    }

    #[test]
    fn hill_rejects_degenerate() {
        let xs = vec![1.0; 5000];
        assert!(hill_alpha(&xs, 0.05).is_err());
        assert!(hill_alpha(&[1.0, 2.0], 0.05).is_err());
    }

    #[test]
    fn pareto_profile_is_flat_at_one() {
        let xs = pareto_sample(1.5, 200_000, 9);
        let grid: Vec<f64> = (0..8).map(|i| 2.0f64.powf(1.0 + i as f64 * 0.5)).collect();
        let prof = tail_constant_profile(&xs, 1.5, &grid).unwrap();
        for p in &prof.points {
            assert!(
                (p.constant - 1.0).abs() < 3.0 * p.se + 0.01,
                "t = {}, c = {} ± {}",
                p.t,
                p.constant,
                p.se
            );
        }
    }

    #[test]
    fn profile_truncates_out_of_range() {
        let xs = pareto_sample(1.5, 10_000, 11);
        let grid = vec![2.0, 4.0, 1e9];
        let prof = tail_constant_profile(&xs, 1.5, &grid).unwrap();
        assert!(prof.truncated);
        assert_eq!(prof.points.len(), 2);
    }

    #[test]
    fn polar_d1_lattice() {
        let blocks = BlockStructure::<f64>::euclidean(1);
        let structure = GroupStructure {
            variant: GroupVariant::Lattice(2.0),
            generator_scales: vec![],
        };
        let (r, xbar) = polar(&[-5.0], &blocks, &structure);
        assert_eq!(r, 4.0);
        assert!((xbar[0] + 1.25).abs() < 1e-12);
    }

    #[test]
    fn angular_positive_spec_has_no_negative_mass() {
        let mu = presets::alpha2_lattice::<f64>();
        let batch = sample_stationary(&mu, 80, 5, 0, 60_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        let structure = mu.scale_group().unwrap();
        let taus = batch.tau_values(&blocks);
        let thresholds = default_t_grid(&taus, &structure, 0.95, 8.0, 4).unwrap();
        let bins = ShellBins::new(1, &structure, 0, 16);
        let hist = angular_measure(&batch, &blocks, &structure, 2.0, &thresholds, &bins).unwrap();
        let (c_plus, c_minus) = hist.d1_constants.unwrap();
        assert!(c_plus > 0.0);
        assert!(c_minus.abs() < 1e-12, "C₋ = {c_minus}");
    }

    #[test]
    fn angular_symmetric_spec_balances() {
        let mu = presets::alpha3_symmetric::<f64>();
        let batch = sample_stationary(&mu, 60, 6, 0, 60_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        let structure = mu.scale_group().unwrap();
        let taus = batch.tau_values(&blocks);
        let thresholds = default_t_grid(&taus, &structure, 0.97, 4.0, 3).unwrap();
        let bins = ShellBins::new(1, &structure, 0, 8);
        let hist = angular_measure(&batch, &blocks, &structure, 3.0, &thresholds, &bins).unwrap();
        let (c_plus, c_minus) = hist.d1_constants.unwrap();
        let rel = (c_plus - c_minus).abs() / (c_plus + c_minus);
        assert!(rel < 0.15, "C₊ = {c_plus}, C₋ = {c_minus}");
    }

    #[test]
    fn rotation_invariant_spec_has_uniform_angles() {
        // the scale part is invariant under rotation by π/4, so the angular
        // measure must be uniform over π/4-aligned bins; this only shows up
        // past the pre-asymptotic region, hence the deep threshold
        let mu = presets::d2_rotating_alpha2::<f64>().unwrap();
        let batch = sample_stationary(&mu, 80, 8, 0, 500_000, 1e-6).unwrap();
        let blocks = mu.blocks().clone();
        let structure = mu.scale_group().unwrap();
        let taus = batch.tau_values(&blocks);
        let thresholds = default_t_grid(&taus, &structure, 0.997, 4.0, 3).unwrap();
        // 8 angle bins aligned with the 8-fold symmetry; lattice radial dim folded in
        let bins = ShellBins::new(2, &structure, 8, 1);
        let hist = angular_measure(&batch, &blocks, &structure, 2.0, &thresholds, &bins).unwrap();
        let counts: Vec<u64> = hist.bins.iter().map(|b| b.count).collect();
        let total: u64 = counts.iter().sum();
        let probs = vec![1.0 / counts.len() as f64; counts.len()];
        let (_stat, p) = crate::stats::chi_square_test(&counts, &probs, total);
        assert!(p > 0.001, "p = {p}, counts {counts:?}");
    }

    #[test]
    fn lambda_tilde_zero_frequency() {
        let mu = presets::alpha_half_lattice::<f64>();
        let batch = sample_stationary(&mu, 400, 10, 0, 20_000, 1e-4).unwrap();
        let blocks = mu.blocks().clone();
        let structure = mu.scale_group().unwrap();
        let lam = LambdaTilde::with_default_grid(&batch, &blocks, &structure, 0.5, None).unwrap();
        let est = lam.evaluate(&[0.0]).unwrap();
        assert_eq!(est.value.norm(), 0.0);
    }

    #[test]
    fn lambda_tilde_negative_real_part() {
        let mu = presets::alpha_half_lattice::<f64>();
        let batch = sample_stationary(&mu, 400, 10, 0, 50_000, 1e-4).unwrap();
        let blocks = mu.blocks().clone();
        let structure = mu.scale_group().unwrap();
        let lam = LambdaTilde::with_default_grid(&batch, &blocks, &structure, 0.5, None).unwrap();
        for y in [0.5, 1.0, -1.0, 2.0] {
            let est = lam.evaluate(&[y]).unwrap();
            assert!(est.value.re < 0.0, "Re Λ̃({y}) = {}", est.value.re);
        }
    }

    #[test]
    fn lambda_tilde_homogeneous_along_group() {
        let mu = presets::alpha_half_lattice::<f64>();
        let batch = sample_stationary(&mu, 400, 10, 0, 200_000, 1e-4).unwrap();
        let blocks = mu.blocks().clone();
        let structure = mu.scale_group().unwrap();
        let lam = LambdaTilde::with_default_grid(&batch, &blocks, &structure, 0.5, None).unwrap();
        // Λ̃(c* y) = |c|^α Λ̃(y) along the lattice, here c = 2
        let base = lam.evaluate(&[1.0]).unwrap().value;
        let scaled = lam.evaluate(&[2.0]).unwrap().value;
        let expect = base * 2.0f64.powf(0.5);
        let rel = (scaled - expect).norm() / expect.norm();
        assert!(rel < 0.10, "rel err {rel}: {scaled} vs {expect}");
    }

    #[test]
    fn delta_v_negative_real_part() {
        let mu = presets::alpha_half_lattice::<f64>();
        let batch = sample_stationary(&mu, 400, 10, 0, 50_000, 1e-4).unwrap();
        let eta = crate::engine::sample_eta(&mu, &[1.0], 400, 21, 0, 50_000).unwrap();
        let blocks = mu.blocks().clone();
        let structure = mu.scale_group().unwrap();
        let lam = LambdaTilde::with_default_grid(&batch, &blocks, &structure, 0.5, None).unwrap();
        let bins = ShellBins::new(1, &structure, 0, 24);
        let table = ShellTable::build(&lam, bins).unwrap();
        let radials: Vec<f64> = eta.rows().map(|w| blocks.radial(w)).collect();
        let grid = scale_grid(&radials, &structure, 0.99, 0.9999, 5).unwrap();
        let est =
            delta_v_of_lambda1(&eta, &table, &blocks, &structure, 0.5, &grid, true).unwrap();
        assert!(est.value.re < 0.0, "Δ_v(Re Λ̃¹) = {}", est.value.re);
    }

    #[test]
    fn tail_divergence_at_alpha() {
        // E τ(R)^α diverges: the truncated empirical moment grows with N
        let mu = presets::alpha2_lattice::<f64>();
        let mut means = Vec::new();
        for (n, seed) in [(2_000usize, 1u64), (20_000, 2), (200_000, 3)] {
            let batch = sample_stationary(&mu, 80, seed, 0, n, 1e-6).unwrap();
            let m: f64 =
                batch.rows().map(|r| (r[0] * r[0]).abs()).sum::<f64>() / n as f64;
            means.push(m);
        }
        assert!(means[2] > means[0], "{means:?}");
    }

    #[test]
    fn dual_moment_stable_in_truncation() {
        let mu = presets::alpha2_lattice::<f64>();
        let blocks = mu.blocks().clone();
        let mut vals = Vec::new();
        for trunc in [100u64, 200, 400] {
            let eta = crate::engine::sample_eta(&mu, &[1.0], trunc, 31, 0, 20_000).unwrap();
            let m: f64 = eta
                .rows()
                .map(|w| blocks.tau(w).unwrap().powf(1.6))
                .sum::<f64>()
                / 20_000.0;
            vals.push(m);
        }
        let rel = (vals[2] - vals[0]).abs() / vals[0];
        assert!(rel < 0.25, "{vals:?}");
    }
}
