//! Bit vectors and vector sets over GF(2).
//!
//! Everything here is desk scale: vectors are a few dozen bits long, sets
//! hold at most a few dozen vectors, and exhaustive loops over candidate
//! strings are expected to be cheap. Bits are stored one `bool` per entry;
//! index 0 is the leftmost character of the textual form (`"0110"` has bit 0
//! equal to `false`).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("bit vector must be nonempty")]
    Empty,
    #[error("invalid bit character at position {0}, expected '0' or '1'")]
    BadChar(usize),
    #[error("vector set must hold at least one vector")]
    EmptySet,
    #[error("vector length {found} does not match set length {expected}")]
    MixedLengths { expected: usize, found: usize },
    #[error("cannot pick {count} independent vectors of length {n}")]
    Infeasible { n: usize, count: usize },
    #[error("vectors are linearly dependent, rank {rank} of {count}")]
    RankDeficient { rank: usize, count: usize },
    #[error("candidate set members must be distinct and of equal length")]
    BadCandidates,
}

/// Hash recovery over a candidate set either pins down a unique string or it
/// does not; both failure shapes count toward failure statistics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecoveryFailure {
    #[error("no candidate matches the parities")]
    NoMatch,
    #[error("{0} candidates match the parities")]
    Ambiguous(usize),
}

/// Fixed-length bit string. Always nonempty.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn new(bits: Vec<bool>) -> Result<Self, Gf2Error> {
        if bits.is_empty() {
            return Err(Gf2Error::Empty);
        }
        Ok(Self { bits })
    }

    /// All-zero vector of length `n`. Panics if `n` is 0.
    #[must_use]
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "bit vector length must be positive");
        Self { bits: vec![false; n] }
    }

    /// Uniformly random vector of length `n`.
    #[must_use]
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n > 0, "bit vector length must be positive");
        Self { bits: (0..n).map(|_| rng.gen_bool(0.5)).collect() }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// Always false; kept so clippy-style `len` users have the pair.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[must_use]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    #[must_use]
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// GF(2) scalar product. Panics if the lengths differ.
    #[must_use]
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(
            self.len(),
            other.len(),
            "dot product needs equal lengths"
        );
        self.bits
            .iter()
            .zip(&other.bits)
            .fold(false, |acc, (&a, &b)| acc ^ (a && b))
    }

    /// Bitwise sum over GF(2). Panics if the lengths differ.
    #[must_use]
    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "xor needs equal lengths");
        Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a ^ b)
                .collect(),
        }
    }

    /// Interprets the low `n` bits of `value` as a vector, index 0 taking the
    /// most significant of those bits.
    #[must_use]
    pub fn from_index(value: usize, n: usize) -> Self {
        assert!(n > 0, "bit vector length must be positive");
        Self {
            bits: (0..n).map(|i| (value >> (n - 1 - i)) & 1 == 1).collect(),
        }
    }

    /// Inverse of `from_index`. Panics for vectors longer than the index width.
    #[must_use]
    pub fn to_index(&self) -> usize {
        assert!(self.len() <= usize::BITS as usize);
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(Gf2Error::Empty);
        }
        let mut bits = Vec::with_capacity(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Gf2Error::BadChar(i)),
            }
        }
        Ok(Self { bits })
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Role a vector set plays: hash vectors turn a reconciled string into key
/// bits, parity vectors define the syndrome measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Hash,
    Parity,
}

/// Nonempty list of equal-length bit vectors with a role tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSet {
    kind: SetKind,
    vectors: Vec<BitVector>,
}

impl VectorSet {
    pub fn new(kind: SetKind, vectors: Vec<BitVector>) -> Result<Self, Gf2Error> {
        let Some(first) = vectors.first() else {
            return Err(Gf2Error::EmptySet);
        };
        let expected = first.len();
        for v in &vectors {
            if v.len() != expected {
                return Err(Gf2Error::MixedLengths { expected, found: v.len() });
            }
        }
        Ok(Self { kind, vectors })
    }

    #[must_use]
    pub fn kind(&self) -> SetKind {
        self.kind
    }

    /// Number of vectors in the set.
    #[must_use]
    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    /// Common vector length.
    #[must_use]
    pub fn n(&self) -> usize {
        self.vectors[0].len()
    }

    #[must_use]
    pub fn vectors(&self) -> &[BitVector] {
        &self.vectors
    }

    #[must_use]
    pub fn get(&self, i: usize) -> &BitVector {
        &self.vectors[i]
    }

    /// Rank of the set as rows of a matrix over GF(2), by elimination.
    #[must_use]
    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<bool>> =
            self.vectors.iter().map(|v| v.bits.clone()).collect();
        gaussian_rank(&mut rows)
    }

    /// Draws `count` vectors of length `n`, uniform over all linearly
    /// independent sequences, by drawing uniform vectors and rejecting any
    /// that fall inside the span of those already accepted.
    pub fn random_li_set<R: Rng + ?Sized>(
        n: usize,
        count: usize,
        kind: SetKind,
        rng: &mut R,
    ) -> Result<Self, Gf2Error> {
        if count == 0 || count > n {
            return Err(Gf2Error::Infeasible { n, count });
        }
        // Row-echelon basis of the span so far, tagged by pivot column.
        let mut basis: Vec<(usize, Vec<bool>)> = Vec::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let v = BitVector::random(n, rng);
            let mut reduced = v.bits.clone();
            for (pivot, row) in &basis {
                if reduced[*pivot] {
                    for (r, b) in reduced.iter_mut().zip(row) {
                        *r ^= b;
                    }
                }
            }
            if let Some(pivot) = reduced.iter().position(|&b| b) {
                basis.push((pivot, reduced));
                out.push(v);
            }
        }
        Ok(Self { kind, vectors: out })
    }

    /// Basis of the space orthogonal to every vector in `self`: the returned
    /// set holds N - m independent vectors V with dot(V, W_j) = 0 for all j.
    /// The role tag flips (the dual of a parity set is a hash set).
    pub fn dual_set(&self) -> Result<Self, Gf2Error> {
        let m = self.count();
        let n = self.n();
        if m >= n {
            return Err(Gf2Error::Infeasible { n, count: n - m + 1 });
        }
        let mut rows: Vec<Vec<bool>> =
            self.vectors.iter().map(|v| v.bits.clone()).collect();
        let pivots = reduced_echelon(&mut rows);
        if pivots.len() < m {
            return Err(Gf2Error::RankDeficient { rank: pivots.len(), count: m });
        }
        let mut out = Vec::with_capacity(n - m);
        for free in 0..n {
            if pivots.contains(&free) {
                continue;
            }
            let mut bits = vec![false; n];
            bits[free] = true;
            for (row, &p) in rows.iter().zip(&pivots) {
                bits[p] = row[free];
            }
            out.push(BitVector { bits });
        }
        let kind = match self.kind {
            SetKind::Hash => SetKind::Parity,
            SetKind::Parity => SetKind::Hash,
        };
        Ok(Self { kind, vectors: out })
    }
}

impl fmt::Display for VectorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vectors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct VectorSetRepr {
    kind: SetKind,
    vectors: Vec<BitVector>,
}

impl Serialize for VectorSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VectorSetRepr { kind: self.kind, vectors: self.vectors.clone() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VectorSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = VectorSetRepr::deserialize(deserializer)?;
        VectorSet::new(repr.kind, repr.vectors).map_err(D::Error::custom)
    }
}

/// Finite set of equal-length strings one of which is the true measured
/// string; `label` identifies the coarse outcome the set belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    label: u64,
    members: Vec<BitVector>,
}

impl CandidateSet {
    pub fn new(label: u64, members: Vec<BitVector>) -> Result<Self, Gf2Error> {
        let Some(first) = members.first() else {
            return Err(Gf2Error::EmptySet);
        };
        let n = first.len();
        for (i, m) in members.iter().enumerate() {
            if m.len() != n || members[..i].contains(m) {
                return Err(Gf2Error::BadCandidates);
            }
        }
        Ok(Self { label, members })
    }

    #[must_use]
    pub fn label(&self) -> u64 {
        self.label
    }

    #[must_use]
    pub fn members(&self) -> &[BitVector] {
        &self.members
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.members[0].len()
    }
}

/// Picks the unique member of `t` consistent with every observed parity
/// `(w, p)`, meaning dot(member, w) == p. Zero or multiple consistent
/// members are both recovery failures.
pub fn hash_recover(
    t: &CandidateSet,
    parities: &[(BitVector, bool)],
) -> Result<BitVector, RecoveryFailure> {
    let mut found: Option<&BitVector> = None;
    let mut matches = 0usize;
    for x in t.members() {
        if parities.iter().all(|(w, p)| x.dot(w) == *p) {
            matches += 1;
            found.get_or_insert(x);
        }
    }
    match matches {
        0 => Err(RecoveryFailure::NoMatch),
        1 => Ok(found.expect("one match recorded").clone()),
        k => Err(RecoveryFailure::Ambiguous(k)),
    }
}

/// In-place elimination; returns the rank. Rows end up in echelon form.
fn gaussian_rank(rows: &mut [Vec<bool>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let n = rows[0].len();
    let mut r = 0;
    for col in 0..n {
        let Some(pivot) = (r..rows.len()).find(|&i| rows[i][col]) else {
            continue;
        };
        rows.swap(r, pivot);
        let (head, tail) = rows.split_at_mut(r + 1);
        let lead = &head[r];
        for row in tail.iter_mut() {
            if row[col] {
                for (a, b) in row.iter_mut().zip(lead) {
                    *a ^= b;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Full reduced echelon form; returns pivot columns in order. Rows below the
/// rank are zeroed.
fn reduced_echelon(rows: &mut [Vec<bool>]) -> Vec<usize> {
    if rows.is_empty() {
        return Vec::new();
    }
    let n = rows[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(pivot) = (r..rows.len()).find(|&i| rows[i][col]) else {
            continue;
        };
        rows.swap(r, pivot);
        for i in 0..rows.len() {
            if i != r && rows[i][col] {
                let lead = rows[r].clone();
                for (a, b) in rows[i].iter_mut().zip(&lead) {
                    *a ^= b;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}
