//! Multi-qubit Pauli strings and sparse operator polynomials.
//!
//! A string is stored in the symplectic representation: one x-bit and one
//! z-bit per site, with `I = (0,0)`, `X = (1,0)`, `Y = (1,1)`, `Z = (0,1)`.
//! Each Hermitian string is read as `i^{x·z} X^x Z^z`, which makes the phase
//! of a product a handful of popcounts per 64-site word.
//!
//! Strings are totally ordered site-major: site 1 is compared first, and
//! letters compare as `I < X < Y < Z`. [`OperatorPoly`] keeps its terms in
//! that order so every derived list (constraints, moment registrations) is
//! deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this are removed after arithmetic.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Single-site Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    #[inline]
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    #[inline]
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A fourth root of unity `i^k`, stored as `k mod 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// Tensor product of single-qubit Pauli operators on `n` sites.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    // x-words followed by z-words; site `s` lives at bit `s % 64` of word `s / 64`.
    words: SmallVec<[u64; 2]>,
}

#[inline]
fn word_count(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let nw = word_count(n);
        PauliString { n, words: SmallVec::from_elem(0, 2 * nw) }
    }

    /// String with letter `p` on `site` (0-based) and identity elsewhere.
    pub fn single(n: usize, site: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(site, p);
        s
    }

    /// Builds a string from `(site, letter)` pairs with 0-based sites.
    pub fn from_sites(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &(site, p) in sites {
            if site >= n {
                return Err(Error::Shape(format!("site {} outside a {n}-qubit system", site + 1)));
            }
            s.set(site, p);
        }
        Ok(s)
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut s = Self::identity(letters.len());
        for (site, &p) in letters.iter().enumerate() {
            s.set(site, p);
        }
        s
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn nw(&self) -> usize {
        self.words.len() / 2
    }

    #[inline]
    pub fn x_words(&self) -> &[u64] {
        &self.words[..self.nw()]
    }

    #[inline]
    pub fn z_words(&self) -> &[u64] {
        &self.words[self.nw()..]
    }

    #[inline]
    pub fn get(&self, site: usize) -> Pauli {
        debug_assert!(site < self.n);
        let (w, b) = (site / 64, site % 64);
        let nw = self.nw();
        Pauli::from_bits((self.words[w] >> b) & 1 == 1, (self.words[nw + w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, site: usize, p: Pauli) {
        assert!(site < self.n, "site {site} out of range for {} qubits", self.n);
        let (w, b) = (site / 64, site % 64);
        let nw = self.nw();
        let (x, z) = p.bits();
        let mask = 1u64 << b;
        self.words[w] = (self.words[w] & !mask) | if x { mask } else { 0 };
        self.words[nw + w] = (self.words[nw + w] & !mask) | if z { mask } else { 0 };
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        let nw = self.nw();
        (0..nw).map(|w| (self.words[w] | self.words[nw + w]).count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Non-identity sites in increasing order (0-based).
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        let nw = self.nw();
        (0..nw).flat_map(move |w| {
            let mut bits = self.words[w] | self.words[nw + w];
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + b)
                }
            })
        })
    }

    /// `(site, letter)` pairs for the non-identity sites.
    pub fn sites(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.support().map(move |s| (s, self.get(s)))
    }

    pub fn letters(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n).map(move |s| self.get(s))
    }

    pub fn contains_letter(&self, p: Pauli) -> bool {
        self.sites().any(|(_, q)| q == p)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        let nw = self.nw();
        let mut parity = 0u32;
        for w in 0..nw {
            parity ^=
                (self.words[w] & other.words[nw + w]).count_ones() ^ (self.words[nw + w] & other.words[w]).count_ones();
        }
        parity & 1 == 0
    }

    /// Product `self · other` without the size check.
    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> PhasedString {
        let nw = self.nw();
        let mut words = SmallVec::from_elem(0u64, 2 * nw);
        let mut k: u32 = 0;
        for w in 0..nw {
            let (x1, z1) = (self.words[w], self.words[nw + w]);
            let (x2, z2) = (other.words[w], other.words[nw + w]);
            let (x3, z3) = (x1 ^ x2, z1 ^ z2);
            // i^{x1 z1} X^{x1} Z^{z1} i^{x2 z2} X^{x2} Z^{z2}
            //   = i^{x1 z1 + x2 z2 + 2 z1 x2 - x3 z3} (i^{x3 z3} X^{x3} Z^{z3})
            k = k
                .wrapping_add((x1 & z1).count_ones())
                .wrapping_add((x2 & z2).count_ones())
                .wrapping_add(2 * (z1 & x2).count_ones())
                .wrapping_add(4 * 64 - (x3 & z3).count_ones());
            words[w] = x3;
            words[nw + w] = z3;
        }
        PhasedString { phase: Phase((k % 4) as u8), string: PauliString { n: self.n, words } }
    }

    /// Dense letter form, e.g. `"XIZ"`.
    pub fn to_dense_string(&self) -> String {
        self.letters().map(Pauli::as_char).collect()
    }

    /// Parses the dense letter form, e.g. `"XIZ"`.
    pub fn parse_dense(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter `{c}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_letters(&letters))
    }

    /// Parses the sparse text form (`"X1 Y3"`, 1-based sites, `"I"` for the
    /// identity) on an `n`-qubit system.
    pub fn parse_sparse(s: &str, n: usize) -> Result<Self> {
        let mut out = Self::identity(n);
        let s = s.trim();
        if s.is_empty() || s == "I" {
            return Ok(out);
        }
        for tok in s.split(|c: char| c.is_whitespace() || c == '*').filter(|t| !t.is_empty()) {
            let mut chars = tok.chars();
            let letter = chars
                .next()
                .and_then(Pauli::from_char)
                .ok_or_else(|| Error::Parse(format!("bad token `{tok}` in `{s}`")))?;
            let site: usize = chars.as_str().parse().map_err(|_| Error::Parse(format!("bad site index in `{tok}`")))?;
            if site == 0 || site > n {
                return Err(Error::Shape(format!("site {site} outside a {n}-qubit system")));
            }
            if out.get(site - 1) != Pauli::I {
                return Err(Error::Parse(format!("site {site} repeated in `{s}`")));
            }
            out.set(site - 1, letter);
        }
        Ok(out)
    }
}

/// Product of two strings, with the phase kept separately.
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PhasedString> {
    if a.n != b.n {
        return Err(Error::Shape(format!("cannot multiply strings on {} and {} qubits", a.n, b.n)));
    }
    Ok(a.mul_unchecked(b))
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.n.cmp(&other.n) {
            Ordering::Equal => {}
            o => return o,
        }
        let nw = self.nw();
        let code = |x: u64, z: u64, b: u32| -> u8 {
            let (x, z) = ((x >> b) & 1, (z >> b) & 1);
            match (x, z) {
                (0, 0) => 0,
                (1, 0) => 1,
                (1, 1) => 2,
                _ => 3,
            }
        };
        for w in 0..nw {
            let (xa, za) = (self.words[w], self.words[nw + w]);
            let (xb, zb) = (other.words[w], other.words[nw + w]);
            let diff = (xa ^ xb) | (za ^ zb);
            if diff != 0 {
                let b = diff.trailing_zeros();
                return code(xa, za, b).cmp(&code(xb, zb, b));
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        let mut first = true;
        for (s, p) in self.sites() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{}{}", p.as_char(), s + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// A string with a fourth-root-of-unity prefactor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhasedString {
    pub phase: Phase,
    pub string: PauliString,
}

impl PhasedString {
    pub fn coefficient(&self) -> Complex64 {
        self.phase.to_complex()
    }
}

/// Sparse linear combination of Pauli strings with complex coefficients.
#[derive(Clone, PartialEq)]
pub struct OperatorPoly {
    n: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl OperatorPoly {
    pub fn zero(n: usize) -> Self {
        OperatorPoly { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_string(PauliString::identity(n), Complex64::new(1.0, 0.0))
    }

    pub fn from_string(s: PauliString, coeff: Complex64) -> Self {
        let mut p = Self::zero(s.num_qubits());
        p.add_term(s, coeff);
        p
    }

    /// Builds a polynomial from `(coefficient, string)` pairs, summing repeats.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        let mut p = Self::zero(n);
        for (c, s) in terms {
            if s.num_qubits() != n {
                return Err(Error::Shape(format!("term on {} qubits in a {n}-qubit polynomial", s.num_qubits())));
            }
            p.add_term(s, c);
        }
        Ok(p)
    }

    pub fn from_real_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        Self::from_terms(n, terms.into_iter().map(|(c, s)| (Complex64::new(c, 0.0), s)))
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical string order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, Complex64)> + '_ {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> + '_ {
        self.terms.keys()
    }

    pub fn coeff(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    /// Accumulates `coeff · s`, dropping the entry if it cancels.
    pub fn add_term(&mut self, s: PauliString, coeff: Complex64) {
        debug_assert_eq!(s.num_qubits(), self.n);
        use std::collections::btree_map::Entry;
        match self.terms.entry(s) {
            Entry::Vacant(v) => {
                if coeff.norm() > DROP_TOLERANCE {
                    v.insert(coeff);
                }
            }
            Entry::Occupied(mut o) => {
                let c = *o.get() + coeff;
                if c.norm() > DROP_TOLERANCE {
                    *o.get_mut() = c;
                } else {
                    o.remove();
                }
            }
        }
    }

    fn check_size(&self, other: &OperatorPoly) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Shape(format!("polynomials on {} and {} qubits", self.n, other.n)));
        }
        Ok(())
    }

    pub fn add(&self, other: &OperatorPoly) -> Result<OperatorPoly> {
        self.check_size(other)?;
        let mut out = self.clone();
        for (s, c) in other.terms() {
            out.add_term(s.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OperatorPoly) -> Result<OperatorPoly> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> OperatorPoly {
        let mut out = Self::zero(self.n);
        for (s, v) in self.terms() {
            out.add_term(s.clone(), v * c);
        }
        out
    }

    pub fn scale_real(&self, c: f64) -> OperatorPoly {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Adjoint; Pauli strings are Hermitian so only coefficients conjugate.
    pub fn conjugate_transpose(&self) -> OperatorPoly {
        OperatorPoly { n: self.n, terms: self.terms.iter().map(|(s, c)| (s.clone(), c.conj())).collect() }
    }

    pub fn multiply_poly(&self, other: &OperatorPoly) -> Result<OperatorPoly> {
        self.check_size(other)?;
        let mut out = Self::zero(self.n);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let p = a.mul_unchecked(b);
                out.add_term(p.string, ca * cb * p.phase.to_complex());
            }
        }
        Ok(out)
    }

    /// `self · s` for a single string.
    pub fn mul_string(&self, s: &PauliString) -> Result<OperatorPoly> {
        self.multiply_poly(&OperatorPoly::from_string(s.clone(), Complex64::new(1.0, 0.0)))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Real parts of the coefficients, in canonical order.
    pub fn real_terms(&self) -> impl Iterator<Item = (&PauliString, f64)> + '_ {
        self.terms.iter().map(|(s, c)| (s, c.re))
    }

    /// Sum of absolute coefficients; an upper bound on the operator norm.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &OperatorPoly) -> f64 {
        let mut m: f64 = 0.0;
        for (s, c) in self.terms() {
            m = m.max((c - other.coeff(s)).norm());
        }
        for (s, c) in other.terms() {
            if !self.terms.contains_key(s) {
                m = m.max(c.norm());
            }
        }
        m
    }

    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            num_qubits: self.n,
            terms: self.terms().map(|(s, c)| PolyTermJson { re: c.re, im: c.im, string: s.to_string() }).collect(),
        }
    }

    pub fn from_json(j: &PolyJson) -> Result<Self> {
        let mut p = Self::zero(j.num_qubits);
        for t in &j.terms {
            let s = PauliString::parse_sparse(&t.string, j.num_qubits)?;
            p.add_term(s, Complex64::new(t.re, t.im));
        }
        Ok(p)
    }
}

impl fmt::Debug for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorPoly[{}](", self.n)?;
        for (i, (s, c)) in self.terms().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·{s}", c.re)?;
            } else {
                write!(f, "({}{:+}i)·{s}", c.re, c.im)?;
            }
        }
        f.write_str(")")
    }
}

/// JSON shape of a polynomial: a coefficient–string list.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyJson {
    pub num_qubits: usize,
    pub terms: Vec<PolyTermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyTermJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub string: String,
}

/// `[H, P]` for a polynomial `H` and a single string `P`.
///
/// Only anticommuting terms survive, each as `2 c φ Q` where `h·P = φ Q`.
pub fn commutator(h: &OperatorPoly, p: &PauliString) -> Result<OperatorPoly> {
    if h.num_qubits() != p.num_qubits() {
        return Err(Error::Shape(format!(
            "commutator of {}-qubit polynomial with {}-qubit string",
            h.num_qubits(),
            p.num_qubits()
        )));
    }
    let mut out = OperatorPoly::zero(h.num_qubits());
    for (s, c) in h.terms() {
        if !s.commutes_with(p) {
            let prod = s.mul_unchecked(p);
            out.add_term(prod.string, 2.0 * c * prod.phase.to_complex());
        }
    }
    Ok(out)
}

/// `{A, B}` for two polynomials.
pub fn anticommutator(a: &OperatorPoly, b: &OperatorPoly) -> Result<OperatorPoly> {
    a.multiply_poly(b)?.add(&b.multiply_poly(a)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str, n: usize) -> PauliString {
        PauliString::parse_sparse(s, n).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_site_products() {
        let p = multiply(&ps("X1", 1), &ps("Y1", 1)).unwrap();
        assert_eq!(p.phase, Phase::I);
        assert_eq!(p.string, ps("Z1", 1));
        let p = multiply(&ps("Y1", 1), &ps("X1", 1)).unwrap();
        assert_eq!(p.phase, Phase::MINUS_I);
        let p = multiply(&ps("Z1", 1), &ps("X1", 1)).unwrap();
        assert_eq!((p.phase, p.string), (Phase::I, ps("Y1", 1)));
    }

    #[test]
    fn z_times_xx_phases() {
        let p = multiply(&ps("Z1", 2), &ps("X1 X2", 2)).unwrap();
        assert_eq!(p.phase, Phase::I);
        assert_eq!(p.string, ps("Y1 X2", 2));
        let p = multiply(&ps("Z2", 2), &ps("X1 X2", 2)).unwrap();
        assert_eq!((p.phase, p.string), (Phase::I, ps("X1 Y2", 2)));
    }

    #[test]
    fn involution() {
        let p = multiply(&ps("Z1 Z2", 2), &ps("Z1 Z2", 2)).unwrap();
        assert_eq!(p.phase, Phase::ONE);
        assert!(p.string.is_identity());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(multiply(&ps("X1", 1), &ps("X1", 2)), Err(Error::Shape(_))));
        let h = OperatorPoly::from_string(ps("Z1", 2), c(1.0, 0.0));
        assert!(commutator(&h, &ps("X1", 3)).is_err());
    }

    #[test]
    fn canonical_order_is_site_major() {
        let mut v = [ps("Z1", 2), ps("X2", 2), ps("I", 2), ps("X1 Z2", 2), ps("Y1", 2), ps("X1", 2)];
        v.sort();
        let names: Vec<String> = v.iter().map(|s| s.to_dense_string()).collect();
        assert_eq!(names, ["II", "IX", "XI", "XZ", "YI", "ZI"]);
    }

    #[test]
    fn order_spans_words() {
        let n = 70;
        let a = PauliString::single(n, 66, Pauli::X);
        let b = PauliString::single(n, 3, Pauli::X);
        // a has I at site 4 where b has X.
        assert!(a < b);
        let c2 = PauliString::single(n, 66, Pauli::Z);
        assert!(a < c2);
    }

    #[test]
    fn text_round_trip() {
        let s = ps("X1 Y3", 4);
        assert_eq!(s.to_string(), "X1 Y3");
        assert_eq!(s.to_dense_string(), "XIYI");
        assert_eq!(PauliString::parse_dense("XIYI").unwrap(), s);
        assert_eq!(ps("I", 3).to_string(), "I");
        assert!(PauliString::parse_sparse("X5", 4).is_err());
        assert!(PauliString::parse_sparse("Q1", 4).is_err());
        assert!(PauliString::parse_sparse("X1 Z1", 4).is_err());
    }

    #[test]
    fn weight_and_support() {
        let s = ps("X2 Z5 Y70", 80);
        assert_eq!(s.weight(), 3);
        assert_eq!(s.support().collect::<Vec<_>>(), vec![1, 4, 69]);
        assert_eq!(s.get(69), Pauli::Y);
    }

    #[test]
    fn commutator_examples() {
        let z1 = OperatorPoly::from_string(ps("Z1", 1), c(1.0, 0.0));
        let r = commutator(&z1, &ps("X1", 1)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.coeff(&ps("Y1", 1)), c(0.0, 2.0));
        assert!(commutator(&z1, &ps("Z1", 1)).unwrap().is_empty());
    }

    #[test]
    fn add_cancels_to_empty() {
        let x = OperatorPoly::from_string(ps("X1", 1), c(1.0, 0.0));
        let r = x.add(&x.scale_real(-1.0)).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn raising_lowering_product() {
        let sp = OperatorPoly::from_terms(1, [(c(0.5, 0.0), ps("X1", 1)), (c(0.0, 0.5), ps("Y1", 1))]).unwrap();
        let sm = sp.conjugate_transpose();
        assert_eq!(sm.coeff(&ps("Y1", 1)), c(0.0, -0.5));
        let prod = sp.multiply_poly(&sm).unwrap();
        assert!((prod.coeff(&ps("I", 1)) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((prod.coeff(&ps("Z1", 1)) - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(prod.len(), 2);
    }

    #[test]
    fn drop_tolerance_removes_residue() {
        let mut p = OperatorPoly::zero(1);
        p.add_term(ps("X1", 1), c(1.0, 0.0));
        p.add_term(ps("X1", 1), c(-1.0 + 1e-16, 0.0));
        assert!(p.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let p = OperatorPoly::from_terms(3, [(c(0.5, 0.0), ps("X1 X2", 3)), (c(-1.0, 0.25), ps("Z3", 3))]).unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back = OperatorPoly::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
