//! Simulation of the forward chain, the backward stationary series, the
//! dual chain, and partial sums, plus an exact enumeration oracle for tiny
//! instances.
//!
//! Every batch function keys the random stream by trajectory index, so a
//! batch is a pure function of `(seed, stream offset, N)` no matter how the
//! work is scheduled across threads.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measure::MuSpec;
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::stats::det_par_chunks;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainKind {
    Forward,
    Stationary,
    Dual,
    PartialSum,
    ZSeries,
}

impl ChainKind {
    pub fn tag(self) -> u8 {
        match self {
            ChainKind::Forward => 0,
            ChainKind::Stationary => 1,
            ChainKind::Dual => 2,
            ChainKind::PartialSum => 3,
            ChainKind::ZSeries => 4,
        }
    }
}

/// A batch of sampled vectors (row-major `N × d`) with its provenance.
#[derive(Clone, Debug)]
pub struct TrajectoryBatch<T> {
    pub data: Vec<T>,
    pub dim: usize,
    pub kind: ChainKind,
    pub chain_len: u64,
    pub seed: u64,
    pub stream_offset: u64,
    /// Truncation bias bound in mean-θ (backward/dual series only).
    pub truncation_bound: f64,
    pub truncation_warning: bool,
}

impl<T: Real> TrajectoryBatch<T> {
    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    /// Homogeneous norms of all rows.
    pub fn tau_values(&self, blocks: &crate::group::BlockStructure<T>) -> Vec<T> {
        self.rows()
            .map(|r| blocks.tau(r).expect("row dimension"))
            .collect()
    }

    /// Componentwise mean.
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r.iter()) {
                *a += *b;
            }
        }
        let n = T::of(self.n_rows() as f64);
        for a in &mut m {
            *a /= n;
        }
        m
    }

    /// One row per trajectory, comma-separated columns.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for r in self.rows() {
            let cells: Vec<String> = r.iter().map(|v| format!("{:?}", v.to_f64())).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Compact binary column format.
    ///
    /// Header: magic `KBAT` (4 bytes), version u32 = 1, rows u64, dim u32,
    /// kind u8, 3 padding bytes; then one f64 little-endian column per
    /// dimension.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"KBAT")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&[self.kind.tag(), 0, 0, 0])?;
        for j in 0..self.dim {
            for i in 0..self.n_rows() {
                w.write_all(&self.row(i)[j].to_f64().to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Reads the binary column format back (always as `f64`).
pub fn read_binary_batch<R: std::io::Read>(mut r: R) -> Result<TrajectoryBatch<f64>> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head)?;
    if &head[0..4] != b"KBAT" {
        return Err(Error::Input("bad magic in batch file".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != 1 {
        return Err(Error::Input(format!("unsupported batch version {version}")));
    }
    let rows = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
    let kind = match head[20] {
        0 => ChainKind::Forward,
        1 => ChainKind::Stationary,
        2 => ChainKind::Dual,
        3 => ChainKind::PartialSum,
        4 => ChainKind::ZSeries,
        k => return Err(Error::Input(format!("unknown chain kind {k}"))),
    };
    let mut cols = vec![0.0f64; rows * dim];
    let mut buf = [0u8; 8];
    for j in 0..dim {
        for i in 0..rows {
            r.read_exact(&mut buf)?;
            cols[i * dim + j] = f64::from_le_bytes(buf);
        }
    }
    Ok(TrajectoryBatch {
        data: cols,
        dim,
        kind,
        chain_len: 0,
        seed: 0,
        stream_offset: 0,
        truncation_bound: 0.0,
        truncation_warning: false,
    })
}

/// Truncation depth making the mean-θ tail bound `E τ(Q)^θ κ(θ)^N/(1−κ(θ))`
/// fall below `tol`, at `θ = 0.8 α`.
pub fn default_truncation<T: Real>(mu: &MuSpec<T>, alpha: T, tol: f64) -> (u64, f64) {
    let theta = alpha * T::of(0.8);
    let k = mu.kappa(theta).to_f64();
    let c = mu.moment_shift_alpha(theta).to_f64().max(1e-30);
    if k >= 1.0 {
        return (1000, f64::INFINITY);
    }
    let mut n = ((tol * (1.0 - k) / c).ln() / k.ln()).ceil();
    if !n.is_finite() || n < 1.0 {
        n = 1.0;
    }
    let n = (n as u64).min(2_000_000);
    let bound = c * k.powf(n as f64) / (1.0 - k);
    (n, bound)
}

/// Forward path `X_0 = x0`, `X_k = M_k X_{k-1} + Q_k`, all states returned.
pub fn simulate_forward<T: Real>(
    mu: &MuSpec<T>,
    x0: &[T],
    n: u64,
    rng: &mut RngStream,
) -> Result<Vec<Vec<T>>> {
    let d = mu.dim();
    if x0.len() != d {
        return Err(Error::Input("x0 has wrong dimension".into()));
    }
    let blocks = mu.blocks().clone();
    let mut path = Vec::with_capacity(n as usize + 1);
    path.push(x0.to_vec());
    let mut x = x0.to_vec();
    let mut tmp = vec![T::zero(); d];
    for _ in 0..n {
        let drawn = mu.draw(rng);
        drawn.apply_map_into(&blocks, &x, &mut tmp);
        for (t, q) in tmp.iter_mut().zip(drawn.shift().iter()) {
            *t += *q;
        }
        x.copy_from_slice(&tmp);
        path.push(x.clone());
    }
    Ok(path)
}

/// Two forward paths driven by the same randomness, and the product
/// `Π_n = M_n ⋯ M_1`, for checking the exact coupling identity
/// `X_n^x − X_n^y = Π_n (x − y)`.
pub fn simulate_coupled<T: Real>(
    mu: &MuSpec<T>,
    x0: &[T],
    y0: &[T],
    n: u64,
    rng: &mut RngStream,
) -> Result<(Vec<T>, Vec<T>, Matrix<T>)> {
    let d = mu.dim();
    let blocks = mu.blocks().clone();
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut tmp = vec![T::zero(); d];
    let mut prod = Matrix::identity(d);
    for _ in 0..n {
        let drawn = mu.draw(rng);
        drawn.apply_map_into(&blocks, &x, &mut tmp);
        for (t, q) in tmp.iter_mut().zip(drawn.shift().iter()) {
            *t += *q;
        }
        x.copy_from_slice(&tmp);
        drawn.apply_map_into(&blocks, &y, &mut tmp);
        for (t, q) in tmp.iter_mut().zip(drawn.shift().iter()) {
            *t += *q;
        }
        y.copy_from_slice(&tmp);
        let m = drawn_matrix(&blocks, &drawn, d);
        prod = m.matmul(&prod).expect("square");
    }
    Ok((x, y, prod))
}

fn drawn_matrix<T: Real>(
    blocks: &crate::group::BlockStructure<T>,
    drawn: &crate::measure::Drawn<'_, T>,
    d: usize,
) -> Matrix<T> {
    let mut m = Matrix::zeros(d, d);
    let mut e = vec![T::zero(); d];
    let mut col = vec![T::zero(); d];
    for j in 0..d {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        drawn.apply_map_into(blocks, &e, &mut col);
        for i in 0..d {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Samples the truncated backward series
/// `R ≈ Σ_{k=0}^{trunc} M_0 ⋯ M_{k-1} Q_k`, one stream per trajectory.
pub fn sample_stationary<T: Real>(
    mu: &MuSpec<T>,
    trunc: u64,
    seed: u64,
    stream_offset: u64,
    n_batch: usize,
    tol: f64,
) -> Result<TrajectoryBatch<T>> {
    if trunc < 1 {
        return Err(Error::Input("truncation depth must be ≥ 1".into()));
    }
    let d = mu.dim();
    let blocks = mu.blocks().clone();
    let chunks = det_par_chunks(n_batch, |range| {
        let mut out = Vec::with_capacity(range.len() * d);
        let mut accum = vec![T::zero(); d];
        let mut term = vec![T::zero(); d];
        let mut tmp = vec![T::zero(); d];
        for i in range {
            let mut rng = RngStream::new(seed, stream_offset + i as u64);
            // k = 0 term is Q_0; thereafter carry x_k = M_0 ⋯ M_{k-1} Q_k
            // by composing similarities on the fly. Because the maps are
            // block similarities, the running product is itself one,
            // tracked here through its action on the new shift only:
            // term_{k} = Π_{k-1} Q_k, Π_k = Π_{k-1} M_k realized as a
            // matrix product.
            let drawn = mu.draw(&mut rng);
            accum.copy_from_slice(drawn.shift());
            let mut pi = drawn_matrix(&blocks, &drawn, d);
            for _ in 1..=trunc {
                let drawn = mu.draw(&mut rng);
                pi.matvec_into(drawn.shift(), &mut term);
                for (a, b) in accum.iter_mut().zip(term.iter()) {
                    *a += *b;
                }
                let m = drawn_matrix(&blocks, &drawn, d);
                pi = pi.matmul(&m).expect("square");
                let _ = &mut tmp;
            }
            out.extend_from_slice(&accum);
        }
        out
    });
    let mut data = Vec::with_capacity(n_batch * d);
    for c in chunks {
        data.extend_from_slice(&c);
    }
    let alpha_guess = mu.solve_alpha().unwrap_or_else(|_| T::one());
    let (needed, bound) = default_truncation(mu, alpha_guess, tol);
    Ok(TrajectoryBatch {
        data,
        dim: d,
        kind: ChainKind::Stationary,
        chain_len: trunc,
        seed,
        stream_offset,
        truncation_bound: bound,
        truncation_warning: trunc < needed,
    })
}

/// Samples the truncated dual series `Z* = Σ_{k=1}^{trunc} (M_{k-1} ⋯ M_0)*`
/// as matrices, one stream per trajectory. `Z* v` is then distributed as the
/// stationary law of the dual chain started from any `v ≠ 0`.
pub fn sample_dual_operators<T: Real>(
    mu: &MuSpec<T>,
    trunc: u64,
    seed: u64,
    stream_offset: u64,
    n_batch: usize,
) -> Result<Vec<Matrix<T>>> {
    if trunc < 1 {
        return Err(Error::Input("truncation depth must be ≥ 1".into()));
    }
    let d = mu.dim();
    let blocks = mu.blocks().clone();
    let chunks = det_par_chunks(n_batch, |range| {
        let mut out = Vec::with_capacity(range.len());
        let mut e = vec![T::zero(); d];
        let mut col = vec![T::zero(); d];
        for i in range {
            let mut rng = RngStream::new(seed, stream_offset + i as u64);
            // A_k = M_0* ∘ ⋯ ∘ M_{k-1}*: A_k = A_{k-1} · M_{k-1}* as matrices
            let mut a = Matrix::<T>::identity(d);
            let mut zstar = Matrix::<T>::zeros(d, d);
            let mut madj = Matrix::<T>::zeros(d, d);
            for _ in 0..trunc {
                let drawn = mu.draw(&mut rng);
                for j in 0..d {
                    e.iter_mut().for_each(|v| *v = T::zero());
                    e[j] = T::one();
                    drawn.apply_adjoint_into(&blocks, &e, &mut col);
                    for r in 0..d {
                        madj[(r, j)] = col[r];
                    }
                }
                a = a.matmul(&madj).expect("square");
                zstar.add_assign_scaled(&a, T::one());
            }
            out.push(zstar);
        }
        out
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Samples `W = Z* v` (the stationary law of the dual chain).
pub fn sample_eta<T: Real>(
    mu: &MuSpec<T>,
    v: &[T],
    trunc: u64,
    seed: u64,
    stream_offset: u64,
    n_batch: usize,
) -> Result<TrajectoryBatch<T>> {
    if crate::linalg::norm2(v) == T::zero() {
        return Err(Error::Input(
            "dual chain start must be nonzero (the law at 0 is degenerate)".into(),
        ));
    }
    let ops = sample_dual_operators(mu, trunc, seed, stream_offset, n_batch)?;
    let d = mu.dim();
    let mut data = Vec::with_capacity(n_batch * d);
    for z in &ops {
        data.extend_from_slice(&z.matvec(v));
    }
    Ok(TrajectoryBatch {
        data,
        dim: d,
        kind: ChainKind::Dual,
        seed,
        stream_offset,
        chain_len: trunc,
        truncation_bound: 0.0,
        truncation_warning: false,
    })
}

/// Partial sums `S_n = Σ_{k=1}^n X_k` (the starting point `X_0` is
/// excluded), streamed for every requested `n` in one pass.
pub fn partial_sums<T: Real>(
    mu: &MuSpec<T>,
    x0: &[T],
    n_list: &[u64],
    seed: u64,
    stream_offset: u64,
    n_batch: usize,
) -> Result<Vec<TrajectoryBatch<T>>> {
    let d = mu.dim();
    if x0.len() != d {
        return Err(Error::Input("x0 has wrong dimension".into()));
    }
    let mut sorted: Vec<u64> = n_list.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n_max = *sorted
        .last()
        .ok_or_else(|| Error::Input("empty n list".into()))?;
    let blocks = mu.blocks().clone();
    let n_outputs = sorted.len();
    let chunks = det_par_chunks(n_batch, |range| {
        let mut outs: Vec<Vec<T>> = vec![Vec::with_capacity(range.len() * d); n_outputs];
        let mut x = vec![T::zero(); d];
        let mut s = vec![T::zero(); d];
        let mut tmp = vec![T::zero(); d];
        for i in range.clone() {
            let mut rng = RngStream::new(seed, stream_offset + i as u64);
            x.copy_from_slice(x0);
            s.iter_mut().for_each(|v| *v = T::zero());
            let mut next = 0usize;
            while next < n_outputs && sorted[next] == 0 {
                outs[next].extend_from_slice(&s);
                next += 1;
            }
            for k in 1..=n_max {
                let drawn = mu.draw(&mut rng);
                drawn.apply_map_into(&blocks, &x, &mut tmp);
                for (t, q) in tmp.iter_mut().zip(drawn.shift().iter()) {
                    *t += *q;
                }
                x.copy_from_slice(&tmp);
                for (sv, xv) in s.iter_mut().zip(x.iter()) {
                    *sv += *xv;
                }
                while next < n_outputs && sorted[next] == k {
                    outs[next].extend_from_slice(&s);
                    next += 1;
                }
            }
        }
        outs
    });
    let mut merged: Vec<Vec<T>> = vec![Vec::with_capacity(n_batch * d); n_outputs];
    for chunk in chunks {
        for (dst, src) in merged.iter_mut().zip(chunk.into_iter()) {
            dst.extend_from_slice(&src);
        }
    }
    Ok(merged
        .into_iter()
        .zip(sorted)
        .map(|(data, n)| TrajectoryBatch {
            data,
            dim: d,
            kind: ChainKind::PartialSum,
            chain_len: n,
            seed,
            stream_offset,
            truncation_bound: 0.0,
            truncation_warning: false,
        })
        .collect())
}

/// Exact law target for the enumeration oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BruteTarget {
    State,
    PartialSum,
}

/// The exact discrete law of `X_n` or `S_n` for a finite mixture.
#[derive(Clone, Debug)]
pub struct DiscreteLaw<T> {
    pub support: Vec<Vec<T>>,
    pub probs: Vec<f64>,
}

impl<T: Real> DiscreteLaw<T> {
    /// Characteristic function of the exact law.
    pub fn cf(&self, v: &[T]) -> num_complex::Complex<T> {
        let mut acc = num_complex::Complex::new(T::zero(), T::zero());
        for (x, p) in self.support.iter().zip(self.probs.iter()) {
            let phase = crate::linalg::dot(x, v);
            acc += num_complex::Complex::new(phase.cos(), phase.sin()) * T::of(*p);
        }
        acc
    }
}

/// Full branch enumeration of `X_n` or `S_n` for a finite mixture,
/// guarded at `atoms^n ≤ 10^7` branches.
pub fn brute_force_distribution<T: Real>(
    mu: &MuSpec<T>,
    x0: &[T],
    n: u64,
    target: BruteTarget,
) -> Result<DiscreteLaw<T>> {
    if !mu.is_finite_mixture() {
        return Err(Error::Unsupported(
            "enumeration needs a finite mixture".into(),
        ));
    }
    let n_atoms = mu.atoms().len();
    let branches = (n_atoms as f64).powf(n as f64);
    if branches > 1e7 {
        return Err(Error::Size(format!(
            "{n_atoms}^{n} branches exceed the enumeration guard"
        )));
    }
    let d = mu.dim();
    let mut tmp = vec![T::zero(); d];
    let mut states: Vec<(Vec<T>, Vec<T>, f64)> = vec![(x0.to_vec(), vec![T::zero(); d], 1.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(states.len() * n_atoms);
        for (x, s, p) in &states {
            for atom in mu.atoms() {
                atom.map.apply_into(x, &mut tmp);
                for (t, q) in tmp.iter_mut().zip(atom.shift.iter()) {
                    *t += *q;
                }
                let nx = tmp.clone();
                let mut ns = s.clone();
                for (sv, xv) in ns.iter_mut().zip(nx.iter()) {
                    *sv += *xv;
                }
                next.push((nx, ns, p * atom.prob.to_f64()));
            }
        }
        states = next;
    }
    let mut points: Vec<(Vec<T>, f64)> = states
        .into_iter()
        .map(|(x, s, p)| match target {
            BruteTarget::State => (x, p),
            BruteTarget::PartialSum => (s, p),
        })
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut support: Vec<Vec<T>> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    for (x, p) in points {
        if let (Some(last), Some(lp)) = (support.last(), probs.last_mut()) {
            let scale = T::one() + crate::linalg::norm2(last);
            if crate::linalg::norm2(&crate::linalg::sub(last, &x)) <= T::tol(1e-9) * scale {
                *lp += p;
                continue;
            }
        }
        support.push(x);
        probs.push(p);
    }
    let total: f64 = probs.iter().sum();
    debug_assert!((total - 1.0).abs() < 1e-12, "probabilities sum to {total}");
    Ok(DiscreteLaw { support, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::mu_1d;

    fn spec_alpha3() -> MuSpec<f64> {
        mu_1d(&[(2.0, false, 1.0 / 9.0, 1.0), (0.5, false, 8.0 / 9.0, 1.0)]).unwrap()
    }

    #[test]
    fn forward_first_step_deterministic() {
        let mu = spec_alpha3();
        let mut rng = RngStream::new(1, 0);
        let path = simulate_forward(&mu, &[0.0], 1, &mut rng).unwrap();
        assert_eq!(path[1], vec![1.0]); // M·0 + 1
    }

    #[test]
    fn forward_two_step_support() {
        let mu = spec_alpha3();
        for s in 0..50 {
            let mut rng = RngStream::new(7, s);
            let path = simulate_forward(&mu, &[0.0], 2, &mut rng).unwrap();
            let x2 = path[2][0];
            assert!((x2 - 3.0).abs() < 1e-12 || (x2 - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_reruns_identically() {
        let mu = spec_alpha3();
        let mut a = RngStream::new(9, 3);
        let mut b = RngStream::new(9, 3);
        let pa = simulate_forward(&mu, &[0.5], 64, &mut a).unwrap();
        let pb = simulate_forward(&mu, &[0.5], 64, &mut b).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn stationary_mean_matches_closed_form() {
        let mu = spec_alpha3();
        let (trunc, _) = default_truncation(&mu, 3.0, 1e-6);
        let batch = sample_stationary(&mu, trunc, 11, 0, 50_000, 1e-6).unwrap();
        assert!(!batch.truncation_warning);
        let xs: Vec<f64> = batch.rows().map(|r| r[0]).collect();
        let m = crate::stats::mean(&xs);
        let se = crate::stats::se_mean(&xs);
        assert!((m - 3.0).abs() < 3.0 * se, "mean {m}, se {se}");
    }

    #[test]
    fn stationary_second_moment() {
        let mu = spec_alpha3();
        let batch = sample_stationary(&mu, 60, 12, 0, 100_000, 1e-6).unwrap();
        let sq: Vec<f64> = batch.rows().map(|r| r[0] * r[0]).collect();
        let m2 = crate::stats::mean(&sq);
        let se = crate::stats::se_mean(&sq);
        assert!((m2 - 15.0).abs() < 3.0 * se, "ER² {m2}, se {se}");
    }

    #[test]
    fn dual_mean_matches_geometric_series() {
        let mu = spec_alpha3();
        let batch = sample_eta(&mu, &[1.0], 60, 13, 0, 50_000).unwrap();
        let xs: Vec<f64> = batch.rows().map(|r| r[0]).collect();
        let m = crate::stats::mean(&xs);
        let se = crate::stats::se_mean(&xs);
        // E W = z/(1−z) = 2 for z = 2/3
        assert!((m - 2.0).abs() < 3.0 * se, "mean {m}, se {se}");
    }

    #[test]
    fn eta_rejects_zero_start() {
        let mu = spec_alpha3();
        assert!(sample_eta(&mu, &[0.0], 10, 1, 0, 10).is_err());
    }

    #[test]
    fn partial_sum_one_step() {
        let mu = spec_alpha3();
        let batches = partial_sums(&mu, &[0.0], &[0, 1], 3, 0, 100).unwrap();
        assert!(batches[0].rows().all(|r| r[0] == 0.0));
        assert!(batches[1].rows().all(|r| (r[0] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn brute_force_matches_hand_enumeration() {
        let mu = spec_alpha3();
        let law = brute_force_distribution(&mu, &[0.0], 2, BruteTarget::PartialSum).unwrap();
        assert_eq!(law.support.len(), 2);
        assert!((law.support[0][0] - 2.5).abs() < 1e-12);
        assert!((law.probs[0] - 8.0 / 9.0).abs() < 1e-12);
        assert!((law.support[1][0] - 4.0).abs() < 1e-12);
        assert!((law.probs[1] - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_n1_and_n0() {
        let mu = spec_alpha3();
        let law = brute_force_distribution(&mu, &[0.0], 1, BruteTarget::State).unwrap();
        assert_eq!(law.support.len(), 1);
        assert!((law.probs[0] - 1.0).abs() < 1e-12);
        let law = brute_force_distribution(&mu, &[0.25], 0, BruteTarget::State).unwrap();
        assert_eq!(law.support, vec![vec![0.25]]);
    }

    #[test]
    fn brute_force_guard() {
        let mu = spec_alpha3();
        assert!(brute_force_distribution(&mu, &[0.0], 40, BruteTarget::State).is_err());
    }

    #[test]
    fn coupling_identity_exact() {
        let mu = spec_alpha3();
        let mut rng = RngStream::new(5, 2);
        let (x, y, pi) = simulate_coupled(&mu, &[2.0], &[-1.0], 40, &mut rng).unwrap();
        let expect = pi.matvec(&[3.0]);
        assert!(((x[0] - y[0]) - expect[0]).abs() <= 1e-10 * (1.0 + expect[0].abs()));
    }

    #[test]
    fn batch_deterministic_under_thread_count() {
        let mu = spec_alpha3();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap();
        let a = pool1.install(|| sample_stationary(&mu, 50, 42, 0, 20_000, 1e-6).unwrap());
        let b = pool8.install(|| sample_stationary(&mu, 50, 42, 0, 20_000, 1e-6).unwrap());
        let bits_a: Vec<u64> = a.data.iter().map(|x| x.to_bits()).collect();
        let bits_b: Vec<u64> = b.data.iter().map(|x| x.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn binary_roundtrip() {
        let mu = spec_alpha3();
        let batch = sample_stationary(&mu, 30, 2, 0, 100, 1e-6).unwrap();
        let mut buf = Vec::new();
        batch.write_binary(&mut buf).unwrap();
        let back = read_binary_batch(buf.as_slice()).unwrap();
        assert_eq!(back.dim, 1);
        assert_eq!(back.n_rows(), 100);
        assert_eq!(back.data, batch.data);
    }
}
