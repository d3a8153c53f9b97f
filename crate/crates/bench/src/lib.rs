//! Fixtures shared by the kernel benchmarks.

use perilimit::{Matrix, ScalarProfile, StoredEnergy};

/// `α = β = 1`, `g(t) = (t − 1)²`.
pub fn mooney_rivlin() -> StoredEnergy {
    StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).expect("valid moduli")
}

/// A fixed, non-symmetric 3×3 test matrix.
pub fn sample_matrix() -> Matrix {
    Matrix::from_rows(&[&[1.2, 0.3, -0.4], &[0.1, 0.9, 0.2], &[-0.3, 0.5, 1.1]]).expect("3x3")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_finite() {
        assert!(mooney_rivlin().eval(&sample_matrix()).unwrap().is_finite());
    }
}
