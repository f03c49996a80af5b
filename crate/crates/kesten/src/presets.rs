//! Ready-made driving measures used by the CLI examples and the test
//! suites. All have `Q ≢ 0` and no common fixed point.

use std::sync::Arc;

use crate::error::Result;
use crate::group::{BlockStructure, Similarity};
use crate::measure::{mu_1d, AffineAtom, MuSpec};
use crate::scalar::Real;

/// `M ∈ {2 w.p. 1/9, 1/2 w.p. 8/9}`, `Q ≡ 1`: tail index 3, lattice scale
/// group `2^ℤ`, stationary mean 3 and variance 6, CLT variance 30.
pub fn alpha3_lattice<T: Real>() -> MuSpec<T> {
    mu_1d(&[(2.0, false, 1.0 / 9.0, 1.0), (0.5, false, 8.0 / 9.0, 1.0)]).expect("valid")
}

/// `M ∈ {2 w.p. 1/5, 1/2 w.p. 4/5}`, `Q ≡ 1`: tail index 2, lattice.
pub fn alpha2_lattice<T: Real>() -> MuSpec<T> {
    mu_1d(&[(2.0, false, 0.2, 1.0), (0.5, false, 0.8, 1.0)]).expect("valid")
}

/// `M ∈ {2 w.p. 1/3, 1/2 w.p. 2/3}`, `Q ≡ 1`: tail index 1, lattice.
pub fn alpha1_lattice<T: Real>() -> MuSpec<T> {
    mu_1d(&[(2.0, false, 1.0 / 3.0, 1.0), (0.5, false, 2.0 / 3.0, 1.0)]).expect("valid")
}

/// `M ∈ {2 w.p. √2−1, 1/2 w.p. 2−√2}`, `Q ≡ 1`: tail index 1/2, lattice.
pub fn alpha_half_lattice<T: Real>() -> MuSpec<T> {
    let p = std::f64::consts::SQRT_2 - 1.0;
    mu_1d(&[(2.0, false, p, 1.0), (0.5, false, 1.0 - p, 1.0)]).expect("valid")
}

/// Dense-scale spec with tail index 3 and the same first three scale
/// moments as [`alpha3_lattice`] (so mean 3, variance 6, CLT variance 30):
/// scales `(2, 1/2, 3, 1/3, 1)` with exact rational weights
/// `(16/225, 128/225, 3/400, 81/400, 3/20)`.
pub fn alpha3_dense<T: Real>() -> MuSpec<T> {
    mu_1d(&[
        (2.0, false, 16.0 / 225.0, 1.0),
        (0.5, false, 128.0 / 225.0, 1.0),
        (3.0, false, 3.0 / 400.0, 1.0),
        (1.0 / 3.0, false, 81.0 / 400.0, 1.0),
        (1.0, false, 3.0 / 20.0, 1.0),
    ])
    .expect("valid")
}

/// Dense-scale spec with tail index 1/2: scales `{2, 1/3}` with the weight
/// solving `p·2^{1/2} + (1−p)·3^{−1/2} = 1`.
pub fn alpha_half_dense<T: Real>() -> MuSpec<T> {
    let r3 = 1.0 / 3.0f64.sqrt();
    let p = (1.0 - r3) / (std::f64::consts::SQRT_2 - r3);
    mu_1d(&[(2.0, false, p, 1.0), (1.0 / 3.0, false, 1.0 - p, 1.0)]).expect("valid")
}

/// Sign-symmetric variant of [`alpha3_lattice`]: `Q = ±1` with equal
/// probability, independent of the scale. The stationary law is symmetric.
pub fn alpha3_symmetric<T: Real>() -> MuSpec<T> {
    mu_1d(&[
        (2.0, false, 1.0 / 18.0, 1.0),
        (2.0, false, 1.0 / 18.0, -1.0),
        (0.5, false, 4.0 / 9.0, 1.0),
        (0.5, false, 4.0 / 9.0, -1.0),
    ])
    .expect("valid")
}

/// Planar spec with an 8-fold rotation-symmetric scale part: `M = a·R(πk/4)`
/// with `a ∈ {2, 1/2}` at the tail-index-2 weights, `Q = (1, 0)`.
pub fn d2_rotating_alpha2<T: Real>() -> Result<MuSpec<T>> {
    let blocks = Arc::new(BlockStructure::<T>::euclidean(2));
    let mut atoms = Vec::new();
    for k in 0..8 {
        let angle = T::of(std::f64::consts::FRAC_PI_4 * k as f64);
        atoms.push(AffineAtom {
            prob: T::of(0.2 / 8.0),
            map: Similarity::rotation2(T::of(2.0), angle)?,
            shift: vec![T::one(), T::zero()],
        });
        atoms.push(AffineAtom {
            prob: T::of(0.8 / 8.0),
            map: Similarity::rotation2(T::of(0.5), angle)?,
            shift: vec![T::one(), T::zero()],
        });
    }
    MuSpec::new(blocks, atoms, None)
}

/// Generic planar spec with tail index 3 (two fixed rotations, lattice
/// scales).
pub fn d2_generic_alpha3<T: Real>() -> Result<MuSpec<T>> {
    let blocks = Arc::new(BlockStructure::<T>::euclidean(2));
    let atoms = vec![
        AffineAtom {
            prob: T::of(1.0 / 9.0),
            map: Similarity::rotation2(T::of(2.0), T::of(1.0))?,
            shift: vec![T::one(), T::of(0.5)],
        },
        AffineAtom {
            prob: T::of(8.0 / 9.0),
            map: Similarity::rotation2(T::of(0.5), T::of(2.3))?,
            shift: vec![T::one(), T::of(0.5)],
        },
    ];
    MuSpec::new(blocks, atoms, None)
}

/// Two-block spec (exponents 1 and 2, one dimension each) with base-scale
/// tail index 3; exercises the mixed Gaussian/stable normalization since
/// the block exponents straddle α/2 = 3/2.
pub fn block_mixed_alpha3<T: Real>() -> Result<MuSpec<T>> {
    let blocks = Arc::new(BlockStructure::new(
        vec![T::one(), T::of(2.0)],
        vec![1, 1],
    )?);
    let id = |_d: usize| crate::linalg::Matrix::<T>::identity(1);
    let atoms = vec![
        AffineAtom {
            prob: T::of(1.0 / 9.0),
            map: Similarity::new(blocks.clone(), T::of(2.0), vec![id(1), id(1)])?,
            shift: vec![T::one(), T::one()],
        },
        AffineAtom {
            prob: T::of(8.0 / 9.0),
            map: Similarity::new(blocks.clone(), T::of(0.5), vec![id(1), id(1)])?,
            shift: vec![T::one(), T::one()],
        },
    ];
    MuSpec::new(blocks, atoms, None)
}

/// Dense one-dimensional spec with a log-uniform continuous scale family,
/// tuned so that the tail index is 2: the family has scale on `[1/4, 2]`
/// (log-mean < 0) mixed with a fixed expanding atom.
pub fn continuous_dense_alpha2<T: Real>() -> Result<MuSpec<T>> {
    use crate::measure::ContinuousScaleFamily;
    let blocks = Arc::new(BlockStructure::<T>::euclidean(1));
    // weight w on atom scale 2 solves 4w + (1-w)·g = 1 at s = 2 where
    // g = E a² for the log-uniform family on [1/4, 2]
    let lo = 0.25f64;
    let hi = 2.0f64;
    let l = (hi / lo).ln();
    let g = (hi * hi - lo * lo) / (2.0 * l);
    let w = (1.0 - g) / (4.0 - g);
    let atoms = vec![AffineAtom {
        prob: T::of(w),
        map: Similarity::scalar(T::of(2.0), false)?,
        shift: vec![T::one()],
    }];
    let fam = ContinuousScaleFamily {
        prob: T::of(1.0 - w),
        scale_lo: T::of(lo),
        scale_hi: T::of(hi),
        orthogonal: vec![crate::linalg::Matrix::identity(1)],
        shift: vec![T::one()],
    };
    MuSpec::new(blocks, atoms, Some(fam))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for (name, mu, alpha) in [
            ("a3", alpha3_lattice::<f64>(), 3.0),
            ("a2", alpha2_lattice::<f64>(), 2.0),
            ("a1", alpha1_lattice::<f64>(), 1.0),
            ("ah", alpha_half_lattice::<f64>(), 0.5),
            ("a3d", alpha3_dense::<f64>(), 3.0),
            ("ahd", alpha_half_dense::<f64>(), 0.5),
            ("sym", alpha3_symmetric::<f64>(), 3.0),
        ] {
            let rep = mu.validate_hypothesis().unwrap();
            assert!((rep.alpha - alpha).abs() < 1e-10, "{name}: α = {}", rep.alpha);
            assert!(rep.fixed_point_free, "{name}");
        }
    }

    #[test]
    fn dense_presets_are_dense() {
        assert!(!alpha3_dense::<f64>().scale_group().unwrap().is_lattice());
        assert!(!alpha_half_dense::<f64>().scale_group().unwrap().is_lattice());
        assert!(alpha3_lattice::<f64>().scale_group().unwrap().is_lattice());
    }

    #[test]
    fn dense_alpha3_matches_lattice_moments() {
        let mu = alpha3_dense::<f64>();
        assert!((mu.kappa(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((mu.kappa(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((mu.kappa(3.0) - 1.0).abs() < 1e-15);
        let (z, m) = mu.mean_operator_and_mean(3.0).unwrap();
        assert!((z[(0, 0)] - 2.0 / 3.0).abs() < 1e-14);
        assert!((m[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn planar_presets_validate() {
        let rep = d2_rotating_alpha2::<f64>().unwrap().validate_hypothesis().unwrap();
        assert!((rep.alpha - 2.0).abs() < 1e-10);
        assert!(rep.fixed_point_free);
        let rep = d2_generic_alpha3::<f64>().unwrap().validate_hypothesis().unwrap();
        assert!((rep.alpha - 3.0).abs() < 1e-10);
    }

    #[test]
    fn block_preset_validates() {
        let mu = block_mixed_alpha3::<f64>().unwrap();
        let rep = mu.validate_hypothesis().unwrap();
        assert!((rep.alpha - 3.0).abs() < 1e-10);
        assert!(rep.structure.is_lattice());
    }

    #[test]
    fn continuous_preset_is_dense_alpha2() {
        let mu = continuous_dense_alpha2::<f64>().unwrap();
        let rep = mu.validate_hypothesis().unwrap();
        assert!((rep.alpha - 2.0).abs() < 1e-10);
        assert!(!rep.structure.is_lattice());
    }
}
