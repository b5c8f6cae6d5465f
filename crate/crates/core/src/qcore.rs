//! Dense complex linear algebra and qubit-state primitives.
//!
//! Every operator in the simulator lives on at most four qubits, so all
//! matrices are dense `DMatrix<Complex64>` values. Qubit 0 is the most
//! significant tensor factor: in the 16-dimensional network state the order
//! is Alice, Bob (from source 1), Bob (from source 2), Charlie.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Dense square complex matrix.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Default Hermiticity and positivity tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Builds a matrix from real row-major entries.
pub fn from_real(dim: usize, entries: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_iterator(
        dim,
        dim,
        // from_iterator fills column-major; transpose the row-major input.
        (0..dim * dim).map(|k| {
            let (col, row) = (k / dim, k % dim);
            Complex64::new(entries[row * dim + col], 0.0)
        }),
    )
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `u · rho · u†`
pub fn sandwich(u: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    u * rho * u.adjoint()
}

/// Lifts a single-qubit operator onto `qubit` of an `n_qubits` register.
pub fn embed(op: &ComplexMatrix, qubit: usize, n_qubits: usize) -> ComplexMatrix {
    assert!(qubit < n_qubits, "qubit {qubit} outside {n_qubits}-qubit register");
    let left = identity(1 << qubit);
    let right = identity(1 << (n_qubits - qubit - 1));
    kron(&kron(&left, op), &right)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// A possibly unnormalized positive-semidefinite operator.
///
/// Post-measurement states in the pipeline are kept unnormalized; their
/// trace is the probability of the outcome sequence that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Wraps `matrix` after checking it against the density-operator
    /// invariants at [`DEFAULT_TOLERANCE`].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix)?;
        let report = validate_density(&rho, DEFAULT_TOLERANCE);
        if !report.valid {
            return Err(Error::DimensionMismatch(format!(
                "not a density operator: hermiticity deviation {:e}, min eigenvalue {:e}, trace {}",
                report.hermiticity_deviation, report.min_eigenvalue, report.trace
            )));
        }
        Ok(rho)
    }

    /// Wraps `matrix` checking only shape and finiteness.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Minimum eigenvalue of the Hermitian part `(A + A†)/2`.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = hermitian_part(&self.matrix);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_part(&self.matrix)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Reduces `rho` onto the subsystems listed in `keep`.
///
/// `subsystem_dims` gives the dimension of every tensor factor in order; the
/// kept factors appear in the output in ascending index order.
pub fn partial_trace(rho: &DensityOperator, subsystem_dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
    let total: usize = subsystem_dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {subsystem_dims:?} multiply to {total}, state has dim {}",
            rho.dim()
        )));
    }
    if keep.is_empty() || keep.iter().any(|&k| k >= subsystem_dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} must be a nonempty subset of 0..{}",
            subsystem_dims.len()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..subsystem_dims.len()).filter(|k| !kept.contains(k)).collect();

    // Row-major strides of each factor in the full index.
    let mut strides = vec![1usize; subsystem_dims.len()];
    for k in (0..subsystem_dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * subsystem_dims[k + 1];
    }
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize];
        for &f in factors {
            let stride = strides[f];
            out = out
                .iter()
                .flat_map(|&base| (0..subsystem_dims[f]).map(move |d| base + d * stride))
                .collect();
        }
        out
    };
    let kept_offsets = offsets(&kept);
    let traced_offsets = offsets(&traced);

    let out_dim = kept_offsets.len();
    let m = rho.matrix();
    let reduced = ComplexMatrix::from_fn(out_dim, out_dim, |r, c| {
        traced_offsets
            .iter()
            .map(|&t| m[(kept_offsets[r] + t, kept_offsets[c] + t)])
            .sum()
    });
    DensityOperator::from_matrix_unchecked(reduced)
}

/// Bell projector for Bell-measurement outcome `b0 b1`:
/// 00 → φ+, 01 → φ−, 10 → ψ+, 11 → ψ−.
pub fn bell_state(b0: bool, b1: bool) -> DensityOperator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if b1 { -s } else { s };
    let ket = if b0 { [0.0, s, sign, 0.0] } else { [s, 0.0, 0.0, sign] };
    let entries: Vec<f64> = (0..16).map(|k| ket[k / 4] * ket[k % 4]).collect();
    DensityOperator {
        matrix: from_real(4, &entries),
    }
}

/// Bell projector indexed by the two-bit outcome `b = 2*b0 + b1`.
pub fn bell_projector(b: usize) -> DensityOperator {
    bell_state(b & 2 != 0, b & 1 != 0)
}

/// Werner state `v |φ+⟩⟨φ+| + (1 − v) I/4`.
pub fn werner_state(v: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidVisibility(v));
    }
    let phi = bell_state(false, false).into_matrix();
    let matrix = phi.scale(v) + identity(4).scale((1.0 - v) / 4.0);
    Ok(DensityOperator { matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityReport {
    pub hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub trace_imaginary: f64,
    pub valid: bool,
}

/// Checks Hermiticity, positivity and trace bounds of `rho` at tolerance `tol`.
pub fn validate_density(rho: &DensityOperator, tol: f64) -> DensityReport {
    let m = rho.matrix();
    let hermiticity_deviation = max_abs_diff(m, &m.adjoint());
    let min_eigenvalue = rho.min_eigenvalue();
    let trace = rho.trace();
    let valid = hermiticity_deviation <= tol
        && min_eigenvalue >= -tol
        && trace.im.abs() <= tol
        && trace.re >= -tol
        && trace.re <= 1.0 + tol;
    DensityReport {
        hermiticity_deviation,
        min_eigenvalue,
        trace: trace.re,
        trace_imaginary: trace.im,
        valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(d: &[f64]) -> ComplexMatrix {
        let n = d.len();
        ComplexMatrix::from_fn(n, n, |r, c| if r == c { Complex64::new(d[r], 0.0) } else { ZERO })
    }

    #[test]
    fn kron_of_identities_is_identity() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn kron_of_pauli_z_is_diagonal() {
        assert_eq!(kron(&pauli_z(), &pauli_z()), diag(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_block_structure() {
        let ket0 = diag(&[1.0, 0.0]);
        let k = kron(&ket0, &pauli_x());
        let expected = from_real(
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert_eq!(k, expected);
    }

    #[test]
    fn from_real_is_row_major() {
        let m = from_real(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m[(0, 1)].re, 2.0);
        assert_eq!(m[(1, 0)].re, 3.0);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let phi = bell_state(false, false);
        let red = partial_trace(&phi, &[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(red.matrix(), &identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = from_real(2, &[0.7, 0.2, 0.2, 0.3]);
        let sigma = from_real(2, &[0.5, 0.0, 0.0, 0.25]);
        let joint = DensityOperator::from_matrix_unchecked(kron(&rho, &sigma)).unwrap();
        let keep0 = partial_trace(&joint, &[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(keep0.matrix(), &rho.scale(0.75)) < 1e-15);
        let keep1 = partial_trace(&joint, &[2, 2], &[1]).unwrap();
        assert!(max_abs_diff(keep1.matrix(), &sigma) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = DensityOperator::from_matrix_unchecked(identity(4)).unwrap();
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(partial_trace(&rho, &[2, 2], &[]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[2]).is_err());
    }

    #[test]
    fn partial_trace_of_middle_qubits_matches_brute_force() {
        // |φ+⟩⟨φ+| ⊗ |φ+⟩⟨φ+| projected on φ+ in the middle, then qubits 1, 2
        // traced out. Oracle: explicit double sum over the traced indices.
        let phi = bell_state(false, false).into_matrix();
        let full = kron(&phi, &phi);
        let proj = kron(&kron(&identity(2), &phi), &identity(2));
        let projected = sandwich(&proj, &full);
        let mut oracle = ComplexMatrix::zeros(4, 4);
        for a in 0..2 {
            for c in 0..2 {
                for a2 in 0..2 {
                    for c2 in 0..2 {
                        let mut acc = ZERO;
                        for b1 in 0..2 {
                            for b2 in 0..2 {
                                let r = a * 8 + b1 * 4 + b2 * 2 + c;
                                let s = a2 * 8 + b1 * 4 + b2 * 2 + c2;
                                acc += projected[(r, s)];
                            }
                        }
                        oracle[(a * 2 + c, a2 * 2 + c2)] = acc;
                    }
                }
            }
        }
        let rho = DensityOperator::from_matrix_unchecked(projected).unwrap();
        let reduced = partial_trace(&rho, &[2, 2, 2, 2], &[0, 3]).unwrap();
        assert!(max_abs_diff(reduced.matrix(), &oracle) < 1e-15);
        // Entanglement swapping: the result is |φ+⟩⟨φ+| / 4.
        assert!(max_abs_diff(reduced.matrix(), &phi.scale(0.25)) < 1e-15);
    }

    #[test]
    fn bell_state_definitions() {
        let phi_plus = from_real(
            4,
            &[
                0.5, 0.0, 0.0, 0.5, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.5, 0.0, 0.0, 0.5,
            ],
        );
        assert!(max_abs_diff(bell_state(false, false).matrix(), &phi_plus) < 1e-15);
        let psi_minus = from_real(
            4,
            &[
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.5, -0.5, 0.0, //
                0.0, -0.5, 0.5, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert!(max_abs_diff(bell_state(true, true).matrix(), &psi_minus) < 1e-15);
    }

    #[test]
    fn bell_projectors_resolve_identity() {
        let total = (0..4).fold(ComplexMatrix::zeros(4, 4), |acc, b| acc + bell_projector(b).matrix());
        assert!(max_abs_diff(&total, &identity(4)) < 1e-12);
        for b in 0..4 {
            let p = bell_projector(b).into_matrix();
            assert!(max_abs_diff(&(&p * &p), &p) < 1e-12);
            for b2 in (0..4).filter(|&x| x != b) {
                let q = bell_projector(b2).into_matrix();
                assert!(max_abs_diff(&(&p * &q), &ComplexMatrix::zeros(4, 4)) < 1e-12);
            }
        }
    }

    #[test]
    fn werner_limits() {
        let w1 = werner_state(1.0).unwrap();
        assert!(max_abs_diff(w1.matrix(), bell_state(false, false).matrix()) < 1e-15);
        let w0 = werner_state(0.0).unwrap();
        assert!(max_abs_diff(w0.matrix(), &identity(4).scale(0.25)) < 1e-15);
        assert_eq!(werner_state(1.5), Err(Error::InvalidVisibility(1.5)));
        assert!(werner_state(-0.1).is_err());
    }

    #[test]
    fn werner_half_spectrum() {
        // Oracle: φ+ is an eigenvector with eigenvalue v + (1-v)/4, the
        // orthogonal complement has (1-v)/4.
        let ev = werner_state(0.5).unwrap().eigenvalues();
        let expected = [0.125, 0.125, 0.125, 0.625];
        for (got, want) in ev.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn werner_trace_and_min_eigenvalue_on_grid() {
        for k in 0..=10 {
            let v = k as f64 / 10.0;
            let w = werner_state(v).unwrap();
            assert_abs_diff_eq!(w.trace().re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(w.min_eigenvalue(), (1.0 - v) / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn validate_density_reports() {
        let mixed = DensityOperator::from_matrix_unchecked(identity(2).scale(0.5)).unwrap();
        assert!(validate_density(&mixed, 1e-12).valid);
        let sx = DensityOperator::from_matrix_unchecked(pauli_x()).unwrap();
        let report = validate_density(&sx, 1e-12);
        assert!(!report.valid);
        assert_abs_diff_eq!(report.min_eigenvalue, -1.0, epsilon = 1e-12);
        assert!(DensityOperator::new(pauli_x()).is_err());
    }

    #[test]
    fn non_square_and_non_finite_rejected() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(DensityOperator::from_matrix_unchecked(rect).is_err());
        let mut bad = identity(2);
        bad[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(DensityOperator::from_matrix_unchecked(bad), Err(Error::NonFinite));
    }

    #[test]
    fn embed_places_operator() {
        let z0 = embed(&pauli_z(), 0, 2);
        assert_eq!(z0, kron(&pauli_z(), &identity(2)));
        let z3 = embed(&pauli_z(), 3, 4);
        assert_eq!(z3, kron(&identity(8), &pauli_z()));
    }
}
