//! Subsystem Clifford gates (1 and 2 qubits): stabilizer tableaux with phases,
//! uniform sampling, composition, inversion, unitary synthesis and the
//! `X/Y ±pi/2` generator decomposition used for pulse-level schedules.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::PauliOperator;

/// `i^phase X^x Z^z` on at most two qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
struct PhasedPauli {
    x: u8,
    z: u8,
    phase: u8,
}

impl PhasedPauli {
    fn mul(self, rhs: PhasedPauli) -> PhasedPauli {
        // Z^z1 X^x2 = (-1)^{z1.x2} X^x2 Z^z1
        let swap = ((self.z & rhs.x).count_ones() & 1) as u8;
        PhasedPauli {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: (self.phase + rhs.phase + 2 * swap) & 3,
        }
    }

    /// The Hermitian Pauli with this symplectic part and sign `(-1)^neg`.
    fn hermitian(x: u8, z: u8, neg: bool) -> PhasedPauli {
        let y = (x & z).count_ones() as u8;
        PhasedPauli { x, z, phase: (y + if neg { 2 } else { 0 }) & 3 }
    }

    fn is_negative(self) -> bool {
        let y = (self.x & self.z).count_ones() as u8;
        (self.phase + 4 - (y & 3)) & 3 == 2
    }
}

/// A Clifford on `n <= 2` qubits, stored as the images of `X_q` and `Z_q`
/// under conjugation. Global phase is not represented.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CliffordElement {
    n: u8,
    images: [PhasedPauli; 4],
}

impl fmt::Debug for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for k in 0..2 * self.n as usize {
            let (neg, p) = self.image(k);
            list.entry(&format!("{}{}", if neg { "-" } else { "+" }, p));
        }
        list.finish()
    }
}

impl CliffordElement {
    pub fn identity(n: usize) -> Result<Self> {
        check_size(n)?;
        let mut images = [PhasedPauli::default(); 4];
        for q in 0..n {
            images[q] = PhasedPauli { x: 1 << q, z: 0, phase: 0 };
            images[n + q] = PhasedPauli { x: 0, z: 1 << q, phase: 0 };
        }
        Ok(Self { n: n as u8, images })
    }

    pub fn num_qubits(&self) -> usize {
        self.n as usize
    }

    /// Image of generator `k` (`X_0..X_{n-1}, Z_0..Z_{n-1}`) as (negative sign, Pauli).
    pub fn image(&self, k: usize) -> (bool, PauliOperator) {
        let img = self.images[k];
        let p = PauliOperator::new(self.n as usize, img.x as u64, img.z as u64)
            .expect("tableau bits fit the register");
        (img.is_negative(), p)
    }

    /// Conjugate a Hermitian Pauli: returns `(negative, P')` with `C P C^dag = +-P'`.
    pub fn conjugate(&self, p: &PauliOperator) -> Result<(bool, PauliOperator)> {
        if p.num_qubits() != self.num_qubits() {
            return Err(Error::SizeMismatch(self.num_qubits(), p.num_qubits()));
        }
        let input = PhasedPauli::hermitian(p.x_bits() as u8, p.z_bits() as u8, false);
        let out = self.apply(input);
        let q = PauliOperator::new(self.num_qubits(), out.x as u64, out.z as u64)?;
        Ok((out.is_negative(), q))
    }

    fn apply(&self, p: PhasedPauli) -> PhasedPauli {
        let n = self.n as usize;
        let mut out = PhasedPauli { x: 0, z: 0, phase: p.phase };
        for q in 0..n {
            if (p.x >> q) & 1 == 1 {
                out = out.mul(self.images[q]);
            }
        }
        for q in 0..n {
            if (p.z >> q) & 1 == 1 {
                out = out.mul(self.images[n + q]);
            }
        }
        out
    }

    /// `self . other`: `other` acts first.
    pub fn compose(&self, other: &CliffordElement) -> Result<CliffordElement> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.num_qubits(), other.num_qubits()));
        }
        let mut images = [PhasedPauli::default(); 4];
        for (k, img) in images.iter_mut().enumerate().take(2 * self.n as usize) {
            *img = self.apply(other.images[k]);
        }
        Ok(CliffordElement { n: self.n, images })
    }

    pub fn inverse(&self) -> CliffordElement {
        let n = self.n as usize;
        let generator = |k: usize| -> PhasedPauli {
            if k < n {
                PhasedPauli { x: 1 << k, z: 0, phase: 0 }
            } else {
                PhasedPauli { x: 0, z: 1 << (k - n), phase: 0 }
            }
        };
        let omega = |a: PhasedPauli, b: PhasedPauli| ((a.x & b.z) ^ (a.z & b.x)).count_ones() & 1;
        // symplectic inverse: component on e_l is omega(C(dual(e_l)), v)
        let mut cand = CliffordElement { n: self.n, images: [PhasedPauli::default(); 4] };
        for k in 0..2 * n {
            let v = generator(k);
            let (mut x, mut z) = (0u8, 0u8);
            for l in 0..n {
                if omega(self.images[n + l], v) == 1 {
                    x |= 1 << l;
                }
                if omega(self.images[l], v) == 1 {
                    z |= 1 << l;
                }
            }
            cand.images[k] = PhasedPauli::hermitian(x, z, false);
        }
        // fix signs so that self . cand is the identity
        let check = self.compose(&cand).expect("same size");
        for k in 0..2 * n {
            if check.images[k] != generator(k) {
                cand.images[k].phase = (cand.images[k].phase + 2) & 3;
            }
        }
        cand
    }

    pub fn is_identity(&self) -> bool {
        *self == CliffordElement::identity(self.num_qubits()).expect("valid size")
    }

    /// Images obey the canonical commutation relations and are Hermitian.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n as usize;
        let omega = |a: PhasedPauli, b: PhasedPauli| ((a.x & b.z) ^ (a.z & b.x)).count_ones() & 1;
        for a in 0..2 * n {
            let img = self.images[a];
            if (img.phase + 4 - ((img.x & img.z).count_ones() as u8 & 3)) & 1 == 1 {
                return false;
            }
            for b in 0..2 * n {
                let expected = u32::from(a % n == b % n && a != b);
                if omega(img, self.images[b]) != expected {
                    return false;
                }
            }
        }
        true
    }

    /// Dense unitary (global phase arbitrary).
    pub fn to_unitary(&self) -> CMatrix {
        let table = group_table(self.num_qubits());
        let idx = table.index[&self.key()];
        table.unitaries[idx].clone()
    }

    /// Tableau of a Clifford unitary. Errors if `u` is not a Clifford on 1 or 2 qubits.
    pub fn from_unitary(u: &CMatrix) -> Result<CliffordElement> {
        let dim = u.nrows();
        let n = match dim {
            2 => 1,
            4 => 2,
            _ => return Err(Error::UnsupportedSize(dim.trailing_zeros() as usize)),
        };
        let ud = u.adjoint();
        let mut el = CliffordElement::identity(n)?;
        for k in 0..2 * n {
            let g = if k < n {
                PauliOperator::new(n, 1 << k, 0)?
            } else {
                PauliOperator::new(n, 0, 1 << (k - n))?
            };
            let m = u * linalg::pauli_matrix(&g) * &ud;
            let mut found = None;
            for i in 0..1usize << (2 * n) {
                let p = PauliOperator::from_index(n, i);
                let t: Complex64 = (linalg::pauli_matrix(&p) * &m).trace() / dim as f64;
                if (t.norm() - 1.0).abs() < 1e-9 {
                    if t.im.abs() > 1e-9 {
                        return Err(Error::State("conjugated Pauli is not Hermitian".into()));
                    }
                    found = Some(PhasedPauli::hermitian(p.x_bits() as u8, p.z_bits() as u8, t.re < 0.0));
                    break;
                }
            }
            el.images[k] = found.ok_or_else(|| Error::State("matrix is not a Clifford".into()))?;
        }
        Ok(el)
    }

    fn key(&self) -> u32 {
        self.images
            .iter()
            .take(2 * self.n as usize)
            .fold(0u32, |acc, p| (acc << 8) | ((p.x as u32) << 4) | ((p.z as u32) << 2) | p.phase as u32)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > 2 {
        return Err(Error::UnsupportedSize(n));
    }
    Ok(())
}

struct GroupTable {
    elements: Vec<CliffordElement>,
    unitaries: Vec<CMatrix>,
    index: HashMap<u32, usize>,
}

/// Closure of `{H, S}` (plus CNOT for two qubits) by breadth-first search.
fn build_group(n: usize) -> GroupTable {
    let h = {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[s, s, s, -s].map(|v| Complex64::new(v, 0.0)))
    };
    let s = CMatrix::from_row_slice(
        2,
        2,
        &[linalg::ONE, linalg::ZERO, linalg::ZERO, linalg::I],
    );
    let id2 = linalg::identity(2);
    let mut gens = Vec::new();
    if n == 1 {
        gens.push(h.clone());
        gens.push(s.clone());
    } else {
        // qubit 0 on the low bit: kron(q1, q0)
        gens.push(linalg::kron(&id2, &h));
        gens.push(linalg::kron(&h, &id2));
        gens.push(linalg::kron(&id2, &s));
        gens.push(linalg::kron(&s, &id2));
        // CNOT control 0, target 1
        let mut cx = CMatrix::zeros(4, 4);
        for c in 0..4usize {
            let t = if c & 1 == 1 { c ^ 2 } else { c };
            cx[(t, c)] = linalg::ONE;
        }
        gens.push(cx);
    }
    let id = linalg::identity(1 << n);
    let mut table = GroupTable { elements: Vec::new(), unitaries: Vec::new(), index: HashMap::new() };
    let mut queue = VecDeque::new();
    let e = CliffordElement::from_unitary(&id).expect("identity is Clifford");
    table.index.insert(e.key(), 0);
    table.elements.push(e);
    table.unitaries.push(id);
    queue.push_back(0usize);
    while let Some(i) = queue.pop_front() {
        for g in &gens {
            let u = g * &table.unitaries[i];
            let el = CliffordElement::from_unitary(&u).expect("generators are Clifford");
            if let std::collections::hash_map::Entry::Vacant(v) = table.index.entry(el.key()) {
                v.insert(table.elements.len());
                table.elements.push(el);
                table.unitaries.push(u);
                queue.push_back(table.elements.len() - 1);
            }
        }
    }
    table
}

fn group_table(n: usize) -> &'static GroupTable {
    static ONE_QUBIT: OnceLock<GroupTable> = OnceLock::new();
    static TWO_QUBIT: OnceLock<GroupTable> = OnceLock::new();
    match n {
        1 => ONE_QUBIT.get_or_init(|| build_group(1)),
        2 => TWO_QUBIT.get_or_init(|| build_group(2)),
        _ => unreachable!("size checked by caller"),
    }
}

/// All elements of the `n`-qubit Clifford group (global phase removed).
pub fn enumerate_group(n: usize) -> Result<&'static [CliffordElement]> {
    check_size(n)?;
    Ok(&group_table(n).elements)
}

/// Uniformly random `n`-qubit Clifford.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordElement> {
    check_size(n)?;
    let table = group_table(n);
    Ok(table.elements[rng.random_range(0..table.elements.len())])
}

/// One of the four physical `pi/2` pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pulse {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
}

impl Pulse {
    pub const ALL: [Pulse; 4] = [Pulse::XPlus, Pulse::XMinus, Pulse::YPlus, Pulse::YMinus];

    /// Pauli digit of the rotation axis (X = 1, Y = 2).
    pub fn axis(self) -> usize {
        match self {
            Pulse::XPlus | Pulse::XMinus => 1,
            Pulse::YPlus | Pulse::YMinus => 2,
        }
    }

    /// +1 or -1.
    pub fn sign(self) -> f64 {
        match self {
            Pulse::XPlus | Pulse::YPlus => 1.0,
            Pulse::XMinus | Pulse::YMinus => -1.0,
        }
    }

    pub fn angle(self) -> f64 {
        self.sign() * FRAC_PI_2
    }

    pub fn unitary(self) -> CMatrix {
        linalg::rotation(self.axis(), self.angle())
    }
}

/// Pulses in time order.
pub type GeneratorWord = Vec<Pulse>;

/// Product of a word's pulse unitaries (last pulse leftmost).
pub fn word_unitary(word: &[Pulse]) -> CMatrix {
    word.iter().fold(linalg::identity(2), |acc, p| p.unitary() * acc)
}

fn word_table() -> &'static HashMap<u32, GeneratorWord> {
    static WORDS: OnceLock<HashMap<u32, GeneratorWord>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let mut words: HashMap<u32, GeneratorWord> = HashMap::new();
        let id = CliffordElement::identity(1).expect("valid size");
        words.insert(id.key(), Vec::new());
        let mut frontier = vec![(Vec::new(), linalg::identity(2))];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (word, u) in &frontier {
                for p in Pulse::ALL {
                    let v = p.unitary() * u;
                    let el = CliffordElement::from_unitary(&v).expect("pulses are Clifford");
                    if let std::collections::hash_map::Entry::Vacant(slot) = words.entry(el.key()) {
                        let mut w: GeneratorWord = word.clone();
                        w.push(p);
                        slot.insert(w.clone());
                        next.push((w, v));
                    }
                }
            }
            frontier = next;
        }
        assert_eq!(words.len(), 24, "generator words must reach the whole 1-qubit group");
        words
    })
}

/// Shortest `X/Y +-pi/2` word implementing a 1-qubit Clifford.
pub fn decompose_generators(g: &CliffordElement) -> Result<GeneratorWord> {
    if g.num_qubits() != 1 {
        return Err(Error::UnsupportedSize(g.num_qubits()));
    }
    Ok(word_table()[&g.key()].clone())
}

/// Longest word in the decomposition table.
pub fn max_word_length() -> usize {
    word_table().values().map(Vec::len).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_group(1).unwrap().len(), 24);
        assert_eq!(enumerate_group(2).unwrap().len(), 11520);
        assert!(matches!(enumerate_group(3), Err(Error::UnsupportedSize(3))));
    }

    #[test]
    fn every_element_is_symplectic_and_unitary() {
        for n in 1..=2 {
            for g in enumerate_group(n).unwrap() {
                assert!(g.is_symplectic(), "{g:?}");
                assert!(linalg::is_unitary(&g.to_unitary(), 1e-12));
            }
        }
    }

    #[test]
    fn inverse_of_identity() {
        let id = CliffordElement::identity(2).unwrap();
        assert!(id.inverse().is_identity());
        assert!(CliffordElement::identity(3).is_err());
    }

    #[test]
    fn inverse_composes_to_identity_for_all_elements() {
        for n in 1..=2 {
            for g in enumerate_group(n).unwrap() {
                let inv = g.inverse();
                assert!(inv.compose(g).unwrap().is_identity());
                assert!(g.compose(&inv).unwrap().is_identity());
            }
        }
    }

    #[test]
    fn compose_matches_unitary_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let g = sample_uniform(2, &mut rng).unwrap();
            let h = sample_uniform(2, &mut rng).unwrap();
            let gh = g.compose(&h).unwrap();
            let d = linalg::distance_up_to_phase(&gh.to_unitary(), &(g.to_unitary() * h.to_unitary()));
            assert!(d < 1e-12);
        }
        let a = CliffordElement::identity(1).unwrap();
        let b = CliffordElement::identity(2).unwrap();
        assert!(a.compose(&b).is_err());
    }

    #[test]
    fn conjugation_agrees_with_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = sample_uniform(2, &mut rng).unwrap();
            let u = g.to_unitary();
            for i in 0..16 {
                let p = PauliOperator::from_index(2, i);
                let (neg, q) = g.conjugate(&p).unwrap();
                let lhs = &u * linalg::pauli_matrix(&p) * u.adjoint();
                let rhs = linalg::pauli_matrix(&q) * Complex64::new(if neg { -1.0 } else { 1.0 }, 0.0);
                assert!((lhs - rhs).iter().all(|z| z.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| sample_uniform(2, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_uniform(3, &mut rng).is_err());
    }

    #[test]
    fn one_qubit_sampling_is_uniform() {
        let group = enumerate_group(1).unwrap();
        let mut counts = vec![0usize; 24];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..24_000 {
            let g = sample_uniform(1, &mut rng).unwrap();
            counts[group.iter().position(|h| *h == g).unwrap()] += 1;
        }
        // binomial sigma for p = 1/24 over 24000 draws
        let sigma = (24_000.0_f64 * (1.0 / 24.0) * (23.0 / 24.0)).sqrt();
        for c in &counts {
            assert!((*c as f64 - 1000.0).abs() < 5.0 * sigma, "{counts:?}");
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
        // 23 dof, p = 0.001 critical value
        assert!(chi2 < 49.73, "chi2 = {chi2}");
    }

    #[test]
    fn generator_decomposition() {
        let id = CliffordElement::identity(1).unwrap();
        assert!(decompose_generators(&id).unwrap().is_empty());
        let xh = CliffordElement::from_unitary(&Pulse::XPlus.unitary()).unwrap();
        assert_eq!(decompose_generators(&xh).unwrap(), vec![Pulse::XPlus]);
        for g in enumerate_group(1).unwrap() {
            let w = decompose_generators(g).unwrap();
            assert!(linalg::distance_up_to_phase(&word_unitary(&w), &g.to_unitary()) < 1e-10);
        }
        assert!(max_word_length() <= 4);
        let two = CliffordElement::identity(2).unwrap();
        assert!(decompose_generators(&two).is_err());
    }

    #[test]
    fn bfs_word_lengths_match_brute_force() {
        // brute force over all words of length <= 4
        let mut best: HashMap<u32, usize> = HashMap::new();
        let mut words: Vec<Vec<Pulse>> = vec![vec![]];
        for len in 0..=4 {
            for w in &words {
                let el = CliffordElement::from_unitary(&word_unitary(w)).unwrap();
                best.entry(el.key()).or_insert(len);
            }
            words = words
                .iter()
                .flat_map(|w| Pulse::ALL.iter().map(move |p| [w.clone(), vec![*p]].concat()))
                .collect();
        }
        assert_eq!(best.len(), 24);
        for g in enumerate_group(1).unwrap() {
            assert_eq!(decompose_generators(g).unwrap().len(), best[&g.key()]);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn random_word_times_inverse_is_identity(seed in any::<u64>(), n in 1usize..=2) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut acc = CliffordElement::identity(n).unwrap();
                for _ in 0..20 {
                    acc = sample_uniform(n, &mut rng).unwrap().compose(&acc).unwrap();
                }
                prop_assert!(acc.inverse().compose(&acc).unwrap().is_identity());
            }
        }
    }
}
