//! Small dense complex-matrix helpers shared by the Clifford engine and the simulator.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::pauli::PauliOperator;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Dense matrix of a Pauli, qubit `q` on bit `q` of the basis index.
pub fn pauli_matrix(p: &PauliOperator) -> CMatrix {
    let n = p.num_qubits();
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    let (x, z) = (p.x_bits() as usize, p.z_bits() as usize);
    let y_count = (x & z).count_ones();
    // i^{#Y} X^x Z^z acting on |c>: Z^z gives (-1)^{c.z}, X^x maps c -> c ^ x
    let base = I.powu(y_count);
    for c in 0..dim {
        let sign = if (c & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(c ^ x, c)] = base * sign;
    }
    m
}

/// `exp(-i theta/2 sigma)` for `sigma` in {X, Y, Z} given as a 1-qubit Pauli digit.
pub fn rotation(axis: usize, theta: f64) -> CMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut m = identity(2) * Complex64::new(c, 0.0);
    let sigma = pauli_matrix(&PauliOperator::from_index(1, axis));
    m -= sigma * (I * s);
    m
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Kronecker product with `b` on the low-order bits: `a (x) b` where `b` acts
/// on the qubits that occupy the least significant index bits.
pub fn kron(high: &CMatrix, low: &CMatrix) -> CMatrix {
    high.kronecker(low)
}

/// Max-entry distance between `a` and `b` after removing the best global phase.
pub fn distance_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    let tr = (b.adjoint() * a).trace();
    let phase = if tr.norm() > 1e-300 { tr / tr.norm() } else { ONE };
    (a - b * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    let d = u.nrows();
    let prod = u.adjoint() * u;
    (prod - identity(d)).iter().all(|z| z.norm() <= tol)
}
