//! Symplectic Pauli algebra, subsystem partitions and support patterns.
//!
//! Paulis carry no phase. Qubit `q` is stored in bit `q` of the `x` and `z`
//! masks: `X = (1,0)`, `Y = (1,1)`, `Z = (0,1)`. The text form `"XIZI"` lists
//! qubit 0 first.
//!
//! Support patterns are integers with bit `j` set when subsystem `j` is in
//! the pattern, so every `2^m`-length vector in the crate is indexed by the
//! pattern integer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register handled anywhere in the crate.
pub const MAX_QUBITS: usize = 16;

/// Phase-free n-qubit Pauli operator in symplectic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliOperator {
    pub fn new(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::Dimension { expected: MAX_QUBITS, got: n });
        }
        let mask = low_mask(n);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::Dimension { expected: n, got: 64 - (x | z).leading_zeros() as usize });
        }
        Ok(Self { n, x, z })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, x: 0, z: 0 }
    }

    /// Pauli from its base-4 index (`I=0, X=1, Y=2, Z=3`, qubit 0 least significant).
    pub fn from_index(n: usize, index: usize) -> Self {
        let mut x = 0u64;
        let mut z = 0u64;
        for q in 0..n {
            match (index >> (2 * q)) & 3 {
                1 => x |= 1 << q,
                2 => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                3 => z |= 1 << q,
                _ => {}
            }
        }
        Self { n, x, z }
    }

    pub fn index(&self) -> usize {
        (0..self.n).fold(0usize, |acc, q| acc | (self.local_digit(q) << (2 * q)))
    }

    /// `0..4` code of the single-qubit factor on qubit `q`.
    pub fn local_digit(&self, q: usize) -> usize {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => 3,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of qubits on which the operator acts non-trivially.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            let c = ['I', 'X', 'Y', 'Z'][self.local_digit(q)];
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::PauliParse(s.to_string()));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, c) in s.chars().enumerate() {
            match c.to_ascii_uppercase() {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                'Z' => z |= 1 << q,
                _ => return Err(Error::PauliParse(s.to_string())),
            }
        }
        Ok(Self { n, x, z })
    }
}

/// Symplectic product over GF(2): 0 iff the two Paulis commute.
pub fn symplectic_omega(p: &PauliOperator, q: &PauliOperator) -> Result<u8> {
    if p.n != q.n {
        return Err(Error::Dimension { expected: p.n, got: q.n });
    }
    Ok(omega_bits(p.x, p.z, q.x, q.z))
}

#[inline]
pub(crate) fn omega_bits(px: u64, pz: u64, qx: u64, qz: u64) -> u8 {
    (((px & qz) ^ (pz & qx)).count_ones() & 1) as u8
}

/// Ordered partition of `n_total` qubits into disjoint subsystems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    subsystems: Vec<Vec<usize>>,
    n_total: usize,
}

impl Partition {
    pub fn new(subsystems: Vec<Vec<usize>>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::Partition("at least one subsystem is required".into()));
        }
        if subsystems.len() > 16 {
            return Err(Error::Partition("at most 16 subsystems are supported".into()));
        }
        let mut subsystems = subsystems;
        let mut seen = Vec::new();
        for s in subsystems.iter_mut() {
            if s.is_empty() {
                return Err(Error::Partition("empty subsystem".into()));
            }
            s.sort_unstable();
            seen.extend_from_slice(s);
        }
        let n_total = seen.len();
        if n_total > MAX_QUBITS {
            return Err(Error::Partition(format!("{n_total} qubits exceeds limit {MAX_QUBITS}")));
        }
        seen.sort_unstable();
        if seen.iter().copied().ne(0..n_total) {
            return Err(Error::Partition(format!(
                "subsystems must be disjoint and cover 0..{n_total}: {subsystems:?}"
            )));
        }
        Ok(Self { subsystems, n_total })
    }

    /// One subsystem per qubit.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new((0..n).map(|q| vec![q]).collect())
    }

    pub fn subsystems(&self) -> &[Vec<usize>] {
        &self.subsystems
    }

    pub fn subsystem(&self, j: usize) -> &[usize] {
        &self.subsystems[j]
    }

    /// Number of subsystems `m`.
    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subsystems.iter().map(Vec::len).collect()
    }

    pub fn num_patterns(&self) -> usize {
        1 << self.len()
    }

    pub fn all_single_qubit(&self) -> bool {
        self.subsystems.iter().all(|s| s.len() == 1)
    }

    /// Qubit mask of subsystem `j`.
    pub fn qubit_mask(&self, j: usize) -> u64 {
        self.subsystems[j].iter().fold(0, |m, &q| m | (1 << q))
    }

    /// Union of the qubit masks of every subsystem in the pattern.
    pub fn pattern_qubit_mask(&self, s: SupportPattern) -> u64 {
        (0..self.len())
            .filter(|&j| s.contains(j))
            .fold(0, |m, j| m | self.qubit_mask(j))
    }

    /// Index of the subsystem containing qubit `q`.
    pub fn subsystem_of(&self, q: usize) -> Option<usize> {
        self.subsystems.iter().position(|s| s.contains(&q))
    }

    /// All `2^m` patterns in integer order.
    pub fn patterns(&self) -> impl Iterator<Item = SupportPattern> + '_ {
        let m = self.len();
        (0..1u32 << m).map(move |bits| SupportPattern { bits, m })
    }

    fn check_pattern(&self, s: SupportPattern) -> Result<()> {
        if s.m != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: s.m });
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = Error;

    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.subsystems
    }
}

/// Set of subsystems, stored as an `m`-bit string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportPattern {
    bits: u32,
    m: usize,
}

impl SupportPattern {
    pub fn new(bits: u32, m: usize) -> Result<Self> {
        if m > 16 || (m < 32 && bits >> m != 0) {
            return Err(Error::Dimension { expected: m, got: 32 - bits.leading_zeros() as usize });
        }
        Ok(Self { bits, m })
    }

    pub fn empty(m: usize) -> Self {
        Self { bits: 0, m }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Pattern integer, used as an array index.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, j: usize) -> bool {
        (self.bits >> j) & 1 == 1
    }

    pub fn intersects(&self, other: &SupportPattern) -> bool {
        self.bits & other.bits != 0
    }

    /// Text form, subsystem 0 first (`"1010"`).
    pub fn label(&self) -> String {
        (0..self.m).map(|j| if self.contains(j) { '1' } else { '0' }).collect()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = 0u32;
        for (j, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << j,
                _ => return Err(Error::Config(format!("invalid pattern string {s:?}"))),
            }
        }
        Self::new(bits, s.chars().count())
    }
}

impl fmt::Display for SupportPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Subsystems on which `p` acts non-trivially.
pub fn support_pattern(p: &PauliOperator, b: &Partition) -> Result<SupportPattern> {
    if p.n != b.n_total() {
        return Err(Error::Dimension { expected: b.n_total(), got: p.n });
    }
    let support = p.x | p.z;
    let bits = (0..b.len())
        .filter(|&j| support & b.qubit_mask(j) != 0)
        .fold(0u32, |acc, j| acc | (1 << j));
    Ok(SupportPattern { bits, m: b.len() })
}

/// Number of Paulis with support exactly `s`: `prod_{j in s} (4^{n_j} - 1)`.
pub fn subspace_size(s: SupportPattern, b: &Partition) -> Result<u64> {
    b.check_pattern(s)?;
    Ok(b.subsystems()
        .iter()
        .enumerate()
        .filter(|(j, _)| s.contains(*j))
        .map(|(_, q)| (1u64 << (2 * q.len())) - 1)
        .product())
}

/// Every Pauli whose support pattern is exactly `s`.
///
/// Ordered lexicographically by subsystem (subsystem 0 outermost) and then by
/// local Pauli index (`X < Y < Z`, first qubit of the subsystem most
/// significant).
pub fn enumerate_pattern_paulis(s: SupportPattern, b: &Partition) -> Result<Vec<PauliOperator>> {
    b.check_pattern(s)?;
    let active: Vec<usize> = (0..b.len()).filter(|&j| s.contains(j)).collect();
    let mut out = vec![PauliOperator::identity(b.n_total())];
    for &j in &active {
        let qubits = b.subsystem(j);
        let local_count = 1usize << (2 * qubits.len());
        let mut next = Vec::with_capacity(out.len() * (local_count - 1));
        for base in &out {
            for local in 1..local_count {
                let mut p = *base;
                for (k, &q) in qubits.iter().enumerate() {
                    // first qubit is the most significant base-4 digit
                    let shift = 2 * (qubits.len() - 1 - k);
                    match (local >> shift) & 3 {
                        1 => p.x |= 1 << q,
                        2 => {
                            p.x |= 1 << q;
                            p.z |= 1 << q;
                        }
                        3 => p.z |= 1 << q,
                        _ => {}
                    }
                }
                next.push(p);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Precomputed symplectic masks and patterns for all `4^n` Paulis.
#[derive(Debug, Clone)]
pub struct PauliBasis {
    n: usize,
    pub(crate) x: Vec<u64>,
    pub(crate) z: Vec<u64>,
}

impl PauliBasis {
    pub fn new(n: usize) -> Self {
        let size = 1usize << (2 * n);
        let mut x = Vec::with_capacity(size);
        let mut z = Vec::with_capacity(size);
        for i in 0..size {
            let p = PauliOperator::from_index(n, i);
            x.push(p.x);
            z.push(p.z);
        }
        Self { n, x, z }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn omega(&self, i: usize, j: usize) -> u8 {
        omega_bits(self.x[i], self.z[i], self.x[j], self.z[j])
    }

    /// Pattern index of every Pauli in the basis.
    pub fn patterns(&self, b: &Partition) -> Vec<usize> {
        let masks: Vec<u64> = (0..b.len()).map(|j| b.qubit_mask(j)).collect();
        (0..self.len())
            .map(|i| {
                let support = self.x[i] | self.z[i];
                masks
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| support & m != 0)
                    .fold(0usize, |acc, (j, _)| acc | (1 << j))
            })
            .collect()
    }
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn omega_examples() {
        assert_eq!(symplectic_omega(&p("XI"), &p("ZI")).unwrap(), 1);
        assert_eq!(symplectic_omega(&p("XX"), &p("ZZ")).unwrap(), 0);
        assert_eq!(symplectic_omega(&p("IIXI"), &p("IIZZ")).unwrap(), 1);
        assert!(symplectic_omega(&p("X"), &p("XX")).is_err());
    }

    #[test]
    fn string_round_trip() {
        for s in ["XIZI", "YYZX", "IIII", "Z"] {
            assert_eq!(p(s).to_string(), s);
            assert_eq!(PauliOperator::from_index(s.len(), p(s).index()), p(s));
        }
        assert!("XQ".parse::<PauliOperator>().is_err());
        assert!(p("IIII").is_identity());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0], vec![0]]).is_err());
        assert!(Partition::new(vec![vec![0], vec![2]]).is_err());
        assert!(Partition::new(vec![]).is_err());
        assert!(Partition::new(vec![vec![1, 0], vec![2]]).is_ok());
        let b: Partition = serde_json::from_str("[[0],[1,2]]").unwrap();
        assert_eq!(b.sizes(), vec![1, 2]);
        assert!(serde_json::from_str::<Partition>("[[0],[0]]").is_err());
    }

    #[test]
    fn support_pattern_examples() {
        let singles = Partition::singletons(4).unwrap();
        assert_eq!(support_pattern(&p("XIZI"), &singles).unwrap().label(), "1010");
        assert_eq!(support_pattern(&p("IIII"), &singles).unwrap().label(), "0000");
        let pairs = Partition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(support_pattern(&p("XIZI"), &pairs).unwrap().label(), "11");
        assert!(support_pattern(&p("XI"), &pairs).is_err());
    }

    #[test]
    fn subspace_size_examples() {
        let b = Partition::singletons(2).unwrap();
        assert_eq!(subspace_size(SupportPattern::parse("11").unwrap(), &b).unwrap(), 9);
        assert_eq!(subspace_size(SupportPattern::empty(2), &b).unwrap(), 1);
        let b2 = Partition::new(vec![vec![0, 1]]).unwrap();
        assert_eq!(subspace_size(SupportPattern::parse("1").unwrap(), &b2).unwrap(), 15);
    }

    #[test]
    fn enumerate_examples() {
        let b = Partition::singletons(2).unwrap();
        let ps = enumerate_pattern_paulis(SupportPattern::parse("10").unwrap(), &b).unwrap();
        let labels: Vec<String> = ps.iter().map(ToString::to_string).collect();
        assert_eq!(labels, ["XI", "YI", "ZI"]);
        let ps = enumerate_pattern_paulis(SupportPattern::parse("11").unwrap(), &b).unwrap();
        assert_eq!(ps.len(), 9);
        assert!(ps.iter().all(|p| p.weight() == 2));
        assert_eq!(ps[0].to_string(), "XX");
        assert_eq!(ps[1].to_string(), "XY");
    }

    #[test]
    fn patterns_cover_all_paulis_exactly_once() {
        let partitions = [
            vec![vec![0], vec![1], vec![2]],
            vec![vec![0, 2], vec![1]],
            vec![vec![0, 1, 2]],
            vec![vec![0], vec![1, 2], vec![3]],
        ];
        for subsystems in partitions {
            let b = Partition::new(subsystems).unwrap();
            let n = b.n_total();
            let mut seen = HashSet::new();
            let mut total = 0u64;
            for s in b.patterns() {
                let ps = enumerate_pattern_paulis(s, &b).unwrap();
                assert_eq!(ps.len() as u64, subspace_size(s, &b).unwrap());
                total += ps.len() as u64;
                for q in ps {
                    assert_eq!(support_pattern(&q, &b).unwrap(), s);
                    assert!(seen.insert(q.index()));
                }
            }
            assert_eq!(total, 1 << (2 * n));
            assert_eq!(seen.len(), 1 << (2 * n));
        }
    }

    #[test]
    fn basis_patterns_match_support_pattern() {
        let b = Partition::new(vec![vec![0, 1], vec![2]]).unwrap();
        let basis = PauliBasis::new(3);
        let pats = basis.patterns(&b);
        for (i, &pat) in pats.iter().enumerate() {
            let p = PauliOperator::from_index(3, i);
            assert_eq!(support_pattern(&p, &b).unwrap().index(), pat);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
            (0..1usize << (2 * n)).prop_map(move |i| PauliOperator::from_index(n, i))
        }

        proptest! {
            #[test]
            fn omega_symmetric_and_bilinear(a in pauli(4), b in pauli(4), c in pauli(4)) {
                let w = |p: &PauliOperator, q: &PauliOperator| symplectic_omega(p, q).unwrap();
                prop_assert_eq!(w(&a, &b), w(&b, &a));
                let ab = PauliOperator::new(4, a.x_bits() ^ b.x_bits(), a.z_bits() ^ b.z_bits()).unwrap();
                prop_assert_eq!(w(&ab, &c), w(&a, &c) ^ w(&b, &c));
            }

            #[test]
            fn pauli_is_in_its_own_pattern(i in 0usize..256) {
                let b = Partition::new(vec![vec![0, 3], vec![1], vec![2]]).unwrap();
                let p = PauliOperator::from_index(4, i);
                let s = support_pattern(&p, &b).unwrap();
                prop_assert!(enumerate_pattern_paulis(s, &b).unwrap().contains(&p));
            }
        }
    }
}
