//! Dense density matrix with in-place local updates.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::PauliChannelProbs;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE, ZERO};

use super::device::MAX_SIM_QUBITS;

/// Superoperator of a one-qubit map on the vectorized block `(00, 01, 10, 11)`
/// indexed by (row bit, column bit).
pub type Superop1 = [[Complex64; 4]; 4];

pub fn superop_from_kraus(kraus: &[CMatrix]) -> Superop1 {
    let mut s = [[ZERO; 4]; 4];
    for k in kraus {
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        s[2 * a + b][2 * c + d] += k[(a, c)] * k[(b, d)].conj();
                    }
                }
            }
        }
    }
    s
}

pub fn superop_compose(after: &Superop1, before: &Superop1) -> Superop1 {
    let mut out = [[ZERO; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| after[i][k] * before[k][j]).sum();
        }
    }
    out
}

/// Row-major `2^n x 2^n` density matrix; qubit `q` is bit `q` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    n: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityState {
    /// `|0...0><0...0|`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_SIM_QUBITS {
            return Err(Error::Config(format!("simulator supports 1..={MAX_SIM_QUBITS} qubits, got {n}")));
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::Dimension { expected: dim, got: index });
        }
        let mut data = vec![ZERO; dim * dim];
        data[index * dim + index] = ONE;
        Ok(Self { n, dim, data })
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        let dim = m.nrows();
        let n = dim.trailing_zeros() as usize;
        if m.ncols() != dim || dim != 1 << n {
            return Err(Error::State("density matrix must be square with power-of-two size".into()));
        }
        let mut s = Self::zero(n)?;
        for r in 0..dim {
            for c in 0..dim {
                s.data[r * dim + c] = m[(r, c)];
            }
        }
        Ok(s)
    }

    pub fn to_matrix(&self) -> CMatrix {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.data[r * self.dim + c])
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Computational-basis populations.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// Check Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        for r in 0..self.dim {
            for c in r..self.dim {
                if (self.get(r, c) - self.get(c, r).conj()).norm() > 1e-10 {
                    return Err(Error::State(format!("not Hermitian at ({r}, {c})")));
                }
            }
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::State(format!("trace is {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::State(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Apply a one-qubit superoperator to qubit `q`.
    pub fn apply_superop(&mut self, q: usize, s: &Superop1) {
        let bit = 1usize << q;
        let dim = self.dim;
        for r in (0..dim).filter(|r| r & bit == 0) {
            for c in (0..dim).filter(|c| c & bit == 0) {
                let idx = [r * dim + c, r * dim + (c | bit), (r | bit) * dim + c, (r | bit) * dim + (c | bit)];
                let v = idx.map(|i| self.data[i]);
                for (k, &i) in idx.iter().enumerate() {
                    self.data[i] = s[k][0] * v[0] + s[k][1] * v[1] + s[k][2] * v[2] + s[k][3] * v[3];
                }
            }
        }
    }

    /// `rho -> U rho U^dagger` for `U` acting on `qubits` (first listed qubit = least significant bit of `U`).
    pub fn apply_unitary(&mut self, qubits: &[usize], u: &CMatrix) -> Result<()> {
        self.check_targets(qubits, u)?;
        if qubits.len() == 1 {
            let s = superop_from_kraus(std::slice::from_ref(u));
            self.apply_superop(qubits[0], &s);
            return Ok(());
        }
        self.left_multiply(qubits, u);
        self.right_multiply_adjoint(qubits, u);
        Ok(())
    }

    /// `rho -> sum_k K rho K^dagger` on `qubits`.
    pub fn apply_kraus(&mut self, qubits: &[usize], kraus: &[CMatrix]) -> Result<()> {
        if let [q] = qubits {
            for k in kraus {
                self.check_targets(qubits, k)?;
            }
            self.apply_superop(*q, &superop_from_kraus(kraus));
            return Ok(());
        }
        let original = self.data.clone();
        let mut acc = vec![ZERO; self.data.len()];
        for k in kraus {
            self.check_targets(qubits, k)?;
            self.data.clone_from(&original);
            self.left_multiply(qubits, k);
            self.right_multiply_adjoint(qubits, k);
            acc.iter_mut().zip(&self.data).for_each(|(a, v)| *a += v);
        }
        self.data = acc;
        Ok(())
    }

    /// Multiply entry `(r, c)` by `phase[r] * conj(phase[c])` (a diagonal unitary).
    pub fn apply_diagonal_unitary(&mut self, phase: &[Complex64]) {
        let dim = self.dim;
        for r in 0..dim {
            for c in 0..dim {
                self.data[r * dim + c] *= phase[r] * phase[c].conj();
            }
        }
    }

    /// `rho -> sum_i p_i P_i rho P_i`.
    pub fn apply_pauli_channel(&mut self, p: &PauliChannelProbs) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension { expected: self.n, got: p.num_qubits() });
        }
        let dim = self.dim;
        let mut acc = vec![ZERO; self.data.len()];
        for (i, &w) in p.probs().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let op = crate::pauli::PauliOperator::from_index(self.n, i);
            let (x, z) = (op.x_bits() as usize, op.z_bits() as usize);
            for r in 0..dim {
                let sr = if (r & z).count_ones() & 1 == 1 { -w } else { w };
                let rs = r ^ x;
                for c in 0..dim {
                    // (P rho P)(r, c) = (-1)^{r.z + c.z} rho(r^x, c^x)
                    let s = if (c & z).count_ones() & 1 == 1 { -sr } else { sr };
                    acc[r * dim + c] += self.data[rs * dim + (c ^ x)] * s;
                }
            }
        }
        self.data = acc;
        Ok(())
    }

    /// Apply the Pauli `(x, z)` (one sample of a Pauli channel).
    pub fn apply_pauli(&mut self, x: u64, z: u64) {
        let dim = self.dim;
        let (x, z) = (x as usize, z as usize);
        let old = self.data.clone();
        for r in 0..dim {
            for c in 0..dim {
                let odd = ((r & z).count_ones() + (c & z).count_ones()) & 1 == 1;
                let v = old[(r ^ x) * dim + (c ^ x)];
                self.data[r * dim + c] = if odd { -v } else { v };
            }
        }
    }

    fn check_targets(&self, qubits: &[usize], u: &CMatrix) -> Result<()> {
        let k = qubits.len();
        if u.nrows() != 1 << k || u.ncols() != 1 << k {
            return Err(Error::Dimension { expected: 1 << k, got: u.nrows() });
        }
        let mut mask = 0usize;
        for &q in qubits {
            if q >= self.n || mask >> q & 1 == 1 {
                return Err(Error::Layout(format!("invalid target qubit list {qubits:?}")));
            }
            mask |= 1 << q;
        }
        Ok(())
    }

    fn offsets(qubits: &[usize]) -> (usize, Vec<usize>) {
        let mask = qubits.iter().fold(0usize, |m, &q| m | 1 << q);
        let offs = (0..1usize << qubits.len())
            .map(|a| qubits.iter().enumerate().map(|(t, &q)| (a >> t & 1) << q).sum())
            .collect();
        (mask, offs)
    }

    fn left_multiply(&mut self, qubits: &[usize], u: &CMatrix) {
        let (mask, offs) = Self::offsets(qubits);
        let dim = self.dim;
        let k = offs.len();
        let mut v = vec![ZERO; k];
        for base in (0..dim).filter(|r| r & mask == 0) {
            for c in 0..dim {
                for (a, &o) in offs.iter().enumerate() {
                    v[a] = self.data[(base | o) * dim + c];
                }
                for (a, &o) in offs.iter().enumerate() {
                    self.data[(base | o) * dim + c] = (0..k).map(|b| u[(a, b)] * v[b]).sum();
                }
            }
        }
    }

    fn right_multiply_adjoint(&mut self, qubits: &[usize], u: &CMatrix) {
        let (mask, offs) = Self::offsets(qubits);
        let dim = self.dim;
        let k = offs.len();
        let mut v = vec![ZERO; k];
        for r in 0..dim {
            for base in (0..dim).filter(|c| c & mask == 0) {
                for (a, &o) in offs.iter().enumerate() {
                    v[a] = self.data[r * dim + (base | o)];
                }
                for (a, &o) in offs.iter().enumerate() {
                    self.data[r * dim + (base | o)] = (0..k).map(|b| v[b] * u[(a, b)].conj()).sum();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, kron, pauli_matrix, rotation};
    use crate::pauli::PauliOperator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_apply(rho: &CMatrix, full: &CMatrix) -> CMatrix {
        full * rho * full.adjoint()
    }

    fn random_state(n: usize, seed: u64) -> DensityState {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 << n;
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        DensityState::from_matrix(&(rho / tr)).unwrap()
    }

    #[test]
    fn local_unitaries_match_dense_kron() {
        let rho = random_state(3, 1);
        let u = rotation(1, 0.7);
        let mut s = rho.clone();
        s.apply_unitary(&[1], &u).unwrap();
        let full = kron(&kron(&identity(2), &u), &identity(2));
        let want = dense_apply(&rho.to_matrix(), &full);
        assert!((s.to_matrix() - want).iter().all(|z| z.norm() < 1e-14));

        // two-qubit unitary on qubits (2, 0): qubit 2 is the low bit of u2
        let u2 = kron(&rotation(2, 0.3), &rotation(1, 1.1));
        let mut s = rho.clone();
        s.apply_unitary(&[2, 0], &u2).unwrap();
        // qubit 2 gets rotation(1, 1.1) (high factor of u2), qubit 0 gets rotation(2, 0.3)
        let full = kron(&kron(&rotation(1, 1.1), &identity(2)), &rotation(2, 0.3));
        let want = dense_apply(&rho.to_matrix(), &full);
        assert!((s.to_matrix() - want).iter().all(|z| z.norm() < 1e-14));
        assert!(s.apply_unitary(&[1, 1], &u2).is_err());
    }

    #[test]
    fn pauli_channel_matches_dense() {
        let rho = random_state(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = PauliChannelProbs::random(2, 0.5, &mut rng);
        let mut s = rho.clone();
        s.apply_pauli_channel(&p).unwrap();
        let mut want = CMatrix::zeros(4, 4);
        for i in 0..16 {
            let m = pauli_matrix(&PauliOperator::from_index(2, i));
            want += dense_apply(&rho.to_matrix(), &m) * Complex64::new(p.probs()[i], 0.0);
        }
        assert!((s.to_matrix() - want).iter().all(|z| z.norm() < 1e-14));
        let mut t = rho.clone();
        let op: PauliOperator = "YZ".parse().unwrap();
        t.apply_pauli(op.x_bits(), op.z_bits());
        let want = dense_apply(&rho.to_matrix(), &pauli_matrix(&op));
        assert!((t.to_matrix() - want).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn validation_catches_bad_states() {
        random_state(2, 4).validate().unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        assert!(DensityState::from_matrix(&m).unwrap().validate().is_err());
        assert!(DensityState::zero(7).is_err());
    }
}
