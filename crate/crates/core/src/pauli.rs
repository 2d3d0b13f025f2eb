//! Pauli strings and sparse Pauli expansions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::config::check_capacity;
use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, C64, ZERO};

/// Coefficients with magnitude below this are dropped by [`expand`].
pub const DROP_TOL: f64 = 1e-12;

const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// A tensor product of single-qubit Paulis, packed two bits per wire with
/// wire 0 in the highest bits (so the derived order is lexicographic).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    qubits: u8,
    bits: u64,
}

impl PauliString {
    pub const MAX_QUBITS: usize = 31;

    pub fn identity(qubits: usize) -> Self {
        assert!(qubits <= Self::MAX_QUBITS);
        Self { qubits: qubits as u8, bits: 0 }
    }

    pub fn new(letters: &[u8]) -> Result<Self> {
        if letters.len() > Self::MAX_QUBITS {
            return Err(Error::Capacity { requested: letters.len(), limit: Self::MAX_QUBITS });
        }
        let mut bits = 0u64;
        for &l in letters {
            if l > 3 {
                return Err(Error::arg(format!("Pauli letter {l} not in 0..=3")));
            }
            bits = bits << 2 | l as u64;
        }
        Ok(Self { qubits: letters.len() as u8, bits })
    }

    /// Single non-identity letter on one wire.
    pub fn single(qubits: usize, wire: usize, letter: u8) -> Result<Self> {
        if wire >= qubits {
            return Err(Error::arg(format!("wire {wire} out of range for {qubits} qubits")));
        }
        let mut letters = vec![0u8; qubits];
        letters[wire] = letter;
        Self::new(&letters)
    }

    /// Builds from the packed index used by dense coefficient arrays.
    pub fn from_index(qubits: usize, index: u64) -> Self {
        debug_assert!(qubits <= Self::MAX_QUBITS && index >> (2 * qubits) == 0);
        Self { qubits: qubits as u8, bits: index }
    }

    pub fn index(&self) -> u64 {
        self.bits
    }

    pub fn qubits(&self) -> usize {
        self.qubits as usize
    }

    pub fn letter(&self, wire: usize) -> u8 {
        let shift = 2 * (self.qubits() - 1 - wire);
        (self.bits >> shift & 3) as u8
    }

    pub fn letters(&self) -> Vec<u8> {
        (0..self.qubits()).map(|w| self.letter(w)).collect()
    }

    pub fn weight(&self) -> usize {
        (0..self.qubits()).filter(|&w| self.letter(w) != 0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.qubits()).filter(|&w| self.letter(w) != 0).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.bits == 0
    }

    /// Restriction to `wires`, in the given order.
    pub fn restrict(&self, wires: &[usize]) -> PauliString {
        let letters: Vec<u8> = wires.iter().map(|&w| self.letter(w)).collect();
        Self::new(&letters).expect("restriction is smaller than the source")
    }

    /// Concatenation `self (x) other`.
    pub fn concat(&self, other: &PauliString) -> Result<PauliString> {
        let mut l = self.letters();
        l.extend(other.letters());
        Self::new(&l)
    }

    /// Bit masks over basis indices (bit `q-1-w` is wire `w`): wires that
    /// flip (X or Y), wires carrying Y, wires that contribute a sign (Y or Z).
    pub(crate) fn masks(&self) -> (usize, usize, usize) {
        let q = self.qubits();
        let (mut flip, mut y, mut sign) = (0, 0, 0);
        for w in 0..q {
            let bit = 1usize << (q - 1 - w);
            match self.letter(w) {
                1 => flip |= bit,
                2 => {
                    flip |= bit;
                    y |= bit;
                    sign |= bit;
                }
                3 => sign |= bit,
                _ => {}
            }
        }
        (flip, y, sign)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in 0..self.qubits() {
            write!(f, "{}", LETTERS[self.letter(w) as usize])?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                other => Err(Error::arg(format!("bad Pauli letter '{other}'"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(&letters)
    }
}

/// Phase `i^k`.
fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Visits the nonzero entries `(row, col, value)` of `B_sigma`.
pub(crate) fn for_each_entry(s: &PauliString, mut f: impl FnMut(usize, usize, C64)) {
    let (flip, y, sign) = s.masks();
    let base = i_pow(y.count_ones());
    for col in 0..1usize << s.qubits() {
        let v = if (col & sign).count_ones() % 2 == 1 { -base } else { base };
        f(col ^ flip, col, v);
    }
}

/// The matrix `B_sigma`.
pub fn pauli_matrix(s: &PauliString) -> Result<DenseOperator> {
    check_capacity(s.qubits())?;
    let mut m = DenseOperator::zeros(s.qubits()).into_matrix();
    for_each_entry(s, |r, c, v| m[(r, c)] = v);
    Ok(DenseOperator::from_parts(s.qubits(), m))
}

/// `2^-q Tr(B_sigma a)` for a single string, in `O(2^q)`.
pub fn coefficient(a: &DenseOperator, s: &PauliString) -> Result<C64> {
    if a.qubits() != s.qubits() {
        return Err(Error::arg("Pauli string and operator differ in qubit count"));
    }
    let mut acc = ZERO;
    // Tr(B a) = sum_{r,c} B[r,c] a[c,r]
    for_each_entry(s, |r, c, v| acc += v * a.get(c, r));
    Ok(acc / a.dim() as f64)
}

/// All `4^q` Pauli coefficients, indexed by [`PauliString::index`].
pub fn expand_dense(a: &DenseOperator) -> Vec<C64> {
    let q = a.qubits();
    let d = a.dim();
    // Interleave row and column bits: slot for wire w holds (r_w, c_w).
    let mut v = vec![ZERO; d * d];
    for r in 0..d {
        for c in 0..d {
            v[interleave(r, c, q)] = a.get(r, c);
        }
    }
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    for w in 0..q {
        let stride = 1usize << (2 * (q - 1 - w));
        for base in 0..v.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            let a00 = v[base];
            let a01 = v[base + stride];
            let a10 = v[base + 2 * stride];
            let a11 = v[base + 3 * stride];
            v[base] = (a00 + a11) * half;
            v[base + stride] = (a01 + a10) * half;
            v[base + 2 * stride] = i * (a01 - a10) * half;
            v[base + 3 * stride] = (a00 - a11) * half;
        }
    }
    v
}

fn interleave(r: usize, c: usize, q: usize) -> usize {
    let mut out = 0;
    for w in 0..q {
        let bit = q - 1 - w;
        let slot = 2 * bit;
        out |= (r >> bit & 1) << (slot + 1) | (c >> bit & 1) << slot;
    }
    out
}

/// Sparse Pauli expansion of `a`, dropping coefficients below [`DROP_TOL`].
pub fn expand(a: &DenseOperator) -> PauliExpansion {
    let q = a.qubits();
    let coeffs = expand_dense(a)
        .into_iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= DROP_TOL)
        .map(|(i, c)| (PauliString::from_index(q, i as u64), c))
        .collect();
    PauliExpansion { qubits: q, coeffs }
}

/// Inverse of [`expand_dense`].
pub fn synthesize_dense(qubits: usize, coeffs: &[C64]) -> Result<DenseOperator> {
    check_capacity(qubits)?;
    let d = 1usize << qubits;
    if coeffs.len() != d * d {
        return Err(Error::arg("dense coefficient array has wrong length"));
    }
    let mut v = coeffs.to_vec();
    let i = C64::new(0.0, 1.0);
    for w in 0..qubits {
        let stride = 1usize << (2 * (qubits - 1 - w));
        for base in 0..v.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            let (ci, cx, cy, cz) = (v[base], v[base + stride], v[base + 2 * stride], v[base + 3 * stride]);
            v[base] = ci + cz;
            v[base + stride] = cx - i * cy;
            v[base + 2 * stride] = cx + i * cy;
            v[base + 3 * stride] = ci - cz;
        }
    }
    Ok(DenseOperator::from_fn(qubits, |r, c| v[interleave(r, c, qubits)]))
}

/// Sparse map from Pauli strings to complex coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PauliExpansion {
    qubits: usize,
    coeffs: BTreeMap<PauliString, C64>,
}

impl PauliExpansion {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, coeffs: BTreeMap::new() }
    }

    pub fn from_terms(qubits: usize, terms: impl IntoIterator<Item = (PauliString, C64)>) -> Result<Self> {
        let mut p = Self::new(qubits);
        for (s, c) in terms {
            p.add_term(s, c)?;
        }
        Ok(p)
    }

    /// Single term `c * B_sigma`.
    pub fn monomial(s: PauliString, c: C64) -> Self {
        let mut p = Self::new(s.qubits());
        p.coeffs.insert(s, c);
        p
    }

    /// Parses strings like `"ZIX"` into the unit monomial.
    pub fn parse_monomial(s: &str) -> Result<Self> {
        Ok(Self::monomial(s.parse()?, C64::new(1.0, 0.0)))
    }

    /// Adds `c` to the coefficient of `s`; exact zeros are removed.
    pub fn add_term(&mut self, s: PauliString, c: C64) -> Result<()> {
        if s.qubits() != self.qubits {
            return Err(Error::arg(format!(
                "Pauli string {s} does not have {} qubits",
                self.qubits
            )));
        }
        let e = self.coeffs.entry(s).or_insert(ZERO);
        *e += c;
        if *e == ZERO {
            self.coeffs.remove(&s);
        }
        Ok(())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, s: &PauliString) -> C64 {
        self.coeffs.get(s).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &C64)> {
        self.coeffs.iter()
    }

    /// Largest weight among stored terms; 0 for the empty expansion.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|s| s.weight()).max().unwrap_or(0)
    }

    /// Keeps the terms of weight at most `d`.
    pub fn truncate_degree(&self, d: usize) -> Self {
        Self {
            qubits: self.qubits,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(s, _)| s.weight() <= d)
                .map(|(s, c)| (*s, *c))
                .collect(),
        }
    }

    /// Normalized Schatten-2 norm, via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            qubits: self.qubits,
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, c * s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (s, c) in &other.coeffs {
            out.add_term(*s, *c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Dense coefficient vector of length `4^q`.
    pub fn to_dense_coeffs(&self) -> Vec<C64> {
        let mut v = vec![ZERO; 1usize << (2 * self.qubits)];
        for (s, c) in &self.coeffs {
            v[s.index() as usize] = *c;
        }
        v
    }

    /// Writes `sigma_string,weight,re,im` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sigma_string", "weight", "re", "im"])?;
        for (s, c) in &self.coeffs {
            w.write_record([
                s.to_string(),
                s.weight().to_string(),
                c.re.to_string(),
                c.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`PauliExpansion::write_csv`]. The weight
    /// column is ignored; repeated strings accumulate.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut out: Option<Self> = None;
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::invalid(format!("expansion CSV: {e}")))?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
            let bad = |what: &str| Error::invalid(format!("expansion CSV row {}: bad {what}", line + 1));
            let s: PauliString = field(0).parse().map_err(|_| bad("sigma_string"))?;
            let re: f64 = field(2).parse().map_err(|_| bad("re"))?;
            let im: f64 = field(3).parse().map_err(|_| bad("im"))?;
            out.get_or_insert_with(|| Self::new(s.qubits())).add_term(s, C64::new(re, im))?;
        }
        out.ok_or_else(|| Error::invalid("expansion CSV has no rows"))
    }
}

/// `sum_sigma c_sigma B_sigma` as a dense operator.
pub fn synthesize(p: &PauliExpansion) -> Result<DenseOperator> {
    let q = p.qubits;
    check_capacity(q)?;
    // Each term costs 2^q directly; the transform costs about q 4^q.
    if (p.len() as u128) < (q.max(1) as u128) << q {
        let mut m = DenseOperator::zeros(q).into_matrix();
        for (s, c) in &p.coeffs {
            for_each_entry(s, |r, col, v| m[(r, col)] += c * v);
        }
        Ok(DenseOperator::from_parts(q, m))
    } else {
        synthesize_dense(q, &p.to_dense_coeffs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_and_display_round_trip() {
        let s: PauliString = "IXZY".parse().unwrap();
        assert_eq!(s.letters(), vec![0, 1, 3, 2]);
        assert_eq!(s.to_string(), "IXZY");
        assert_eq!(s.weight(), 3);
        assert_eq!(s.support(), vec![1, 2, 3]);
        assert!("IQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn z_matrix_is_diag() {
        let z = pauli_matrix(&"Z".parse().unwrap()).unwrap();
        let expect = DenseOperator::from_diagonal(1, &[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unwrap();
        assert_eq!(z, expect);
        let y = pauli_matrix(&"Y".parse().unwrap()).unwrap();
        assert_eq!(y.get(0, 1), C64::new(0.0, -1.0));
        assert_eq!(y.get(1, 0), C64::new(0.0, 1.0));
    }

    #[test]
    fn identity_expands_to_single_term() {
        let p = expand(&DenseOperator::identity(3));
        assert_eq!(p.len(), 1);
        assert!((p.get(&PauliString::identity(3)) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn sparse_and_dense_synthesis_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random::ginibre(2, &mut rng);
        let p = expand(&a);
        assert_eq!(p.len(), 16);
        let direct = synthesize_dense(2, &p.to_dense_coeffs()).unwrap();
        let mut sparse = DenseOperator::zeros(2).into_matrix();
        for (s, c) in p.iter() {
            for_each_entry(s, |r, col, v| sparse[(r, col)] += c * v);
        }
        assert!(direct.max_abs_diff(&a) < 1e-12);
        assert!(DenseOperator::new(2, sparse).unwrap().max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn single_coefficient_matches_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random::ginibre(3, &mut rng);
        let dense = expand_dense(&a);
        for idx in [0u64, 7, 27, 63] {
            let s = PauliString::from_index(3, idx);
            assert!((coefficient(&a, &s).unwrap() - dense[idx as usize]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_expansion_has_degree_zero() {
        assert_eq!(PauliExpansion::new(4).degree(), 0);
        assert!(expand(&DenseOperator::zeros(2)).is_empty());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = PauliExpansion::parse_monomial("ZI").unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "sigma_string,weight,re,im\nZI,1,1,0\n");
    }
}
