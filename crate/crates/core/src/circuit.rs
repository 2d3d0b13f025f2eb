//! Layered circuits of single-qubit gates and multi-qubit CZ gates, the
//! channels they induce and their Choi objects.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::check_capacity;
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, scatter_offsets, tensor, DenseOperator, C64, ONE, ZERO};

const GATE_UNITARY_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-9;

/// The `k`-qubit CZ gate `I - 2|1..1><1..1|`.
pub fn cz_gate(k: usize) -> Result<DenseOperator> {
    if k == 0 {
        return Err(Error::arg("CZ gate needs at least one wire"));
    }
    check_capacity(k)?;
    let d = 1usize << k;
    let mut diag = vec![ONE; d];
    diag[d - 1] = -ONE;
    DenseOperator::from_diagonal(k, &diag)
}

/// One circuit layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// Single-qubit unitaries keyed by wire; absent wires carry the identity.
    Single(BTreeMap<usize, DenseOperator>),
    /// Disjoint wire sets, each carrying one CZ gate.
    Cz(Vec<Vec<usize>>),
}

impl Layer {
    /// Sign of a CZ layer on basis state `x` of a `q`-wire register.
    fn cz_sign(sets: &[Vec<usize>], q: usize, x: usize) -> f64 {
        let mut s = 1.0;
        for set in sets {
            if set.iter().all(|&w| x >> (q - 1 - w) & 1 == 1) {
                s = -s;
            }
        }
        s
    }
}

/// Circuit on `n` input wires followed by `a` ancilla wires.
#[derive(Clone, Debug, PartialEq)]
pub struct Qac0Circuit {
    n: usize,
    a: usize,
    ancilla: Option<Vec<C64>>,
    layers: Vec<Layer>,
}

impl Qac0Circuit {
    /// Validates and builds a circuit. `ancilla = None` means `|0^a>`.
    pub fn new(n: usize, a: usize, ancilla: Option<Vec<C64>>, layers: Vec<Layer>) -> Result<Self> {
        let q = n + a;
        check_capacity(q)?;
        if let Some(psi) = &ancilla {
            if psi.len() != 1 << a {
                return Err(Error::invalid(format!(
                    "ancilla state has {} amplitudes, expected {}",
                    psi.len(),
                    1usize << a
                )));
            }
            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            if (norm - 1.0).abs() > STATE_TOL {
                return Err(Error::invalid(format!("ancilla state has squared norm {norm}")));
            }
        }
        for (li, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Single(gates) => {
                    for (&w, g) in gates {
                        if w >= q {
                            return Err(Error::invalid(format!("layer {li}: wire {w} out of range")));
                        }
                        if g.qubits() != 1 {
                            return Err(Error::invalid(format!("layer {li}: gate on wire {w} is not 2x2")));
                        }
                        let defect = g.unitarity_defect();
                        if defect > GATE_UNITARY_TOL {
                            return Err(Error::invalid(format!(
                                "layer {li}: gate on wire {w} is not unitary (defect {defect:e})"
                            )));
                        }
                    }
                }
                Layer::Cz(sets) => {
                    let mut used = vec![false; q];
                    for set in sets {
                        if set.is_empty() {
                            return Err(Error::invalid(format!("layer {li}: empty CZ set")));
                        }
                        for &w in set {
                            if w >= q {
                                return Err(Error::invalid(format!("layer {li}: wire {w} out of range")));
                            }
                            if std::mem::replace(&mut used[w], true) {
                                return Err(Error::invalid(format!(
                                    "layer {li}: CZ sets overlap on wire {w}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { n, a, ancilla, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ancillas(&self) -> usize {
        self.a
    }

    pub fn total_wires(&self) -> usize {
        self.n + self.a
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of CZ layers.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::Cz(_))).count()
    }

    /// Ancilla amplitudes (`|0^a>` when not set explicitly).
    pub fn ancilla_state(&self) -> Vec<C64> {
        match &self.ancilla {
            Some(psi) => psi.clone(),
            None => {
                let mut v = vec![ZERO; 1 << self.a];
                v[0] = ONE;
                v
            }
        }
    }

    pub fn has_zero_ancilla(&self) -> bool {
        self.ancilla.is_none()
    }

    /// Applies the circuit to a state vector on `n + a` wires in place.
    pub fn apply_to_state(&self, v: &mut [C64]) -> Result<()> {
        let q = self.total_wires();
        if v.len() != 1 << q {
            return Err(Error::arg("state vector length does not match circuit width"));
        }
        for layer in &self.layers {
            match layer {
                Layer::Single(gates) => {
                    for (&w, g) in gates {
                        apply_single_to_vector(v, q, w, g);
                    }
                }
                Layer::Cz(sets) => {
                    for (x, z) in v.iter_mut().enumerate() {
                        if Layer::cz_sign(sets, q, x) < 0.0 {
                            *z = -*z;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `U = L_d M_d ... M_1 L_0` on `n + a` wires.
    pub fn build_unitary(&self) -> Result<DenseOperator> {
        let mut u = DenseOperator::identity(self.total_wires());
        for layer in &self.layers {
            self.apply_layer_left(&mut u, layer)?;
        }
        Ok(u)
    }

    fn apply_layer_left(&self, target: &mut DenseOperator, layer: &Layer) -> Result<()> {
        let q = self.total_wires();
        match layer {
            Layer::Single(gates) => {
                for (&w, g) in gates {
                    target.apply_left(g, &[w])?;
                }
            }
            Layer::Cz(sets) => {
                let d = target.dim();
                let signs: Vec<f64> = (0..d).map(|x| Layer::cz_sign(sets, q, x)).collect();
                *target = DenseOperator::from_fn(q, |r, c| target.get(r, c) * signs[r]);
            }
        }
        Ok(())
    }

    /// `U rho U^dagger` for an operator on all `n + a` wires.
    pub fn conjugate(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        let q = self.total_wires();
        if rho.qubits() != q {
            return Err(Error::arg("operator width does not match circuit"));
        }
        let mut out = rho.clone();
        for layer in &self.layers {
            match layer {
                Layer::Single(gates) => {
                    for (&w, g) in gates {
                        out = out.conjugate_local(g, &[w])?;
                    }
                }
                Layer::Cz(sets) => {
                    let signs: Vec<f64> = (0..out.dim()).map(|x| Layer::cz_sign(sets, q, x)).collect();
                    out = DenseOperator::from_fn(q, |r, c| out.get(r, c) * (signs[r] * signs[c]));
                }
            }
        }
        Ok(out)
    }

    /// Serializes to the circuit JSON document (no `output_wires`).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc(None)).expect("circuit serializes")
    }

    fn to_doc(&self, output_wires: Option<Vec<usize>>) -> CircuitDoc {
        CircuitDoc {
            n: self.n,
            a: self.a,
            ancilla: match &self.ancilla {
                None => AncillaDoc::Named("zeros".into()),
                Some(psi) => AncillaDoc::Amplitudes(psi.iter().map(|z| [z.re, z.im]).collect()),
            },
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Single(gates) => LayerDoc::Single {
                        gates: gates
                            .iter()
                            .map(|(w, g)| {
                                let e = |r, c| {
                                    let z: C64 = g.get(r, c);
                                    [z.re, z.im]
                                };
                                (w.to_string(), [e(0, 0), e(0, 1), e(1, 0), e(1, 1)])
                            })
                            .collect(),
                    },
                    Layer::Cz(sets) => LayerDoc::Cz { sets: sets.clone() },
                })
                .collect(),
            output_wires,
        }
    }
}

fn apply_single_to_vector(v: &mut [C64], q: usize, wire: usize, g: &DenseOperator) {
    let bit = 1usize << (q - 1 - wire);
    let (g00, g01, g10, g11) = (g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    for x in 0..v.len() {
        if x & bit == 0 {
            let (a0, a1) = (v[x], v[x | bit]);
            v[x] = g00 * a0 + g01 * a1;
            v[x | bit] = g10 * a0 + g11 * a1;
        }
    }
}

/// Circuit with `X` on the zero positions of `x`, an `n`-wire CZ, and the
/// same `X` layer again; its unitary is `I - 2|x><x|`.
pub fn hard_instance(x: &[bool]) -> Result<Qac0Circuit> {
    let n = x.len();
    if n == 0 {
        return Err(Error::arg("hard instance needs n >= 1"));
    }
    let flips: BTreeMap<usize, DenseOperator> = x
        .iter()
        .enumerate()
        .filter(|(_, &b)| !b)
        .map(|(w, _)| (w, pauli_x()))
        .collect();
    let mut layers = Vec::new();
    if !flips.is_empty() {
        layers.push(Layer::Single(flips.clone()));
    }
    layers.push(Layer::Cz(vec![(0..n).collect()]));
    if !flips.is_empty() {
        layers.push(Layer::Single(flips));
    }
    Qac0Circuit::new(n, 0, None, layers)
}

fn pauli_x() -> DenseOperator {
    DenseOperator::from_fn(1, |r, c| if r != c { ONE } else { ZERO })
}

/// Random circuit `L_0 M_1 L_1 ... M_d L_d` with Haar single-qubit gates and
/// CZ layers that partition a random subset of the wires into sets of size
/// `1..=max_cz`.
pub fn random_layered(n: usize, a: usize, depth: usize, max_cz: usize, rng: &mut impl Rng) -> Result<Qac0Circuit> {
    let q = n + a;
    let mut layers = vec![haar_layer(q, rng)];
    for _ in 0..depth {
        let mut wires: Vec<usize> = (0..q).collect();
        wires.shuffle(rng);
        let mut sets = Vec::new();
        let mut rest = &wires[..];
        while !rest.is_empty() {
            let k = rng.random_range(1..=max_cz.max(1)).min(rest.len());
            let mut set = rest[..k].to_vec();
            set.sort_unstable();
            // Some wires are left idle.
            if rng.random_bool(0.8) {
                sets.push(set);
            }
            rest = &rest[k..];
        }
        layers.push(Layer::Cz(sets));
        layers.push(haar_layer(q, rng));
    }
    Qac0Circuit::new(n, a, None, layers)
}

fn haar_layer(q: usize, rng: &mut impl Rng) -> Layer {
    Layer::Single((0..q).map(|w| (w, crate::random::haar_unitary(1, rng))).collect())
}

/// A circuit plus the ordered wires that form the channel output.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    circuit: Qac0Circuit,
    output_wires: Vec<usize>,
}

impl ChannelSpec {
    pub fn new(circuit: Qac0Circuit, output_wires: Vec<usize>) -> Result<Self> {
        let q = circuit.total_wires();
        let mut seen = vec![false; q];
        for &w in &output_wires {
            if w >= q {
                return Err(Error::invalid(format!("output wire {w} out of range")));
            }
            if std::mem::replace(&mut seen[w], true) {
                return Err(Error::invalid(format!("output wire {w} repeated")));
            }
        }
        Ok(Self { circuit, output_wires })
    }

    /// Output taken from the first `m` wires.
    pub fn first(circuit: Qac0Circuit, m: usize) -> Result<Self> {
        Self::new(circuit, (0..m).collect())
    }

    pub fn circuit(&self) -> &Qac0Circuit {
        &self.circuit
    }

    pub fn output_wires(&self) -> &[usize] {
        &self.output_wires
    }

    pub fn n(&self) -> usize {
        self.circuit.n
    }

    pub fn m(&self) -> usize {
        self.output_wires.len()
    }

    /// Parses the circuit JSON document; `output_wires` defaults to the first `n` wires.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CircuitDoc =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("circuit JSON: {e}")))?;
        doc.into_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.circuit.to_doc(Some(self.output_wires.clone())))
            .expect("circuit serializes")
    }
}

/// Applies the channel to an `n`-qubit density operator.
pub fn apply_channel(spec: &ChannelSpec, rho: &DenseOperator) -> Result<DenseOperator> {
    let c = &spec.circuit;
    if rho.qubits() != c.n {
        return Err(Error::invalid(format!(
            "input state has {} qubits, channel expects {}",
            rho.qubits(),
            c.n
        )));
    }
    rho.validate_density(STATE_TOL)?;
    let anc = DenseOperator::projector(&c.ancilla_state())?;
    let full = if c.a == 0 { rho.clone() } else { tensor(rho, &anc)? };
    let evolved = c.conjugate(&full)?;
    let traced: Vec<usize> = (0..c.total_wires())
        .filter(|w| !spec.output_wires.contains(w))
        .collect();
    let reduced = partial_trace(&evolved, &traced)?;
    // Kept wires come out ascending; move them into output order.
    let mut kept: Vec<usize> = spec.output_wires.clone();
    kept.sort_unstable();
    let order: Vec<usize> = spec
        .output_wires
        .iter()
        .map(|w| kept.iter().position(|k| k == w).expect("kept wire"))
        .collect();
    reduced.reorder_wires(&order)
}

/// Choi representation `J` (unnormalized EPR) and Choi state `2^-n J`.
///
/// Wires `0..n` hold the reference copy of the input, wires `n..n+m` the
/// channel output in `output_wires` order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiObject {
    pub n: usize,
    pub m: usize,
    pub representation: DenseOperator,
    pub state: DenseOperator,
}

impl ChoiObject {
    pub fn from_representation(n: usize, representation: DenseOperator) -> Result<Self> {
        if representation.qubits() < n {
            return Err(Error::arg("Choi representation narrower than the input register"));
        }
        let m = representation.qubits() - n;
        let state = representation.scale_real(0.5f64.powi(n as i32));
        Ok(Self { n, m, representation, state })
    }
}

/// Choi object of the channel defined by `spec`.
pub fn choi(spec: &ChannelSpec) -> Result<ChoiObject> {
    let c = &spec.circuit;
    check_capacity(c.n + spec.m())?;
    check_capacity(c.n + c.total_wires())?;
    let psi = c.ancilla_state();
    let sys = 1usize << c.total_wires();
    let mut columns = Vec::with_capacity(1 << c.n);
    for x in 0..1usize << c.n {
        let mut v = vec![ZERO; sys];
        for (j, amp) in psi.iter().enumerate() {
            v[x << c.a | j] = *amp;
        }
        c.apply_to_state(&mut v)?;
        columns.push(v);
    }
    choi_from_columns(c.n, c.total_wires(), &columns, &spec.output_wires)
}

/// Choi object of `rho -> Tr_rest(U (rho (x) |psi><psi|) U^dagger)` for a dense
/// unitary on `n + a` wires.
pub fn choi_of_unitary(u: &DenseOperator, n: usize, ancilla: &[C64], output_wires: &[usize]) -> Result<ChoiObject> {
    let q = u.qubits();
    if n > q || ancilla.len() != 1 << (q - n) {
        return Err(Error::arg("ancilla state does not match the unitary width"));
    }
    let a = q - n;
    check_capacity(n + output_wires.len())?;
    let columns: Vec<Vec<C64>> = (0..1usize << n)
        .map(|x| {
            (0..1usize << q)
                .map(|s| {
                    ancilla
                        .iter()
                        .enumerate()
                        .map(|(j, amp)| u.get(s, x << a | j) * amp)
                        .sum()
                })
                .collect()
        })
        .collect();
    choi_from_columns(n, q, &columns, output_wires)
}

/// `columns[x]` is the system state produced from input basis state `x`.
fn choi_from_columns(n: usize, q: usize, columns: &[Vec<C64>], output_wires: &[usize]) -> Result<ChoiObject> {
    let m = output_wires.len();
    let rest: Vec<usize> = (0..q).filter(|w| !output_wires.contains(w)).collect();
    let out_off = scatter_offsets(q, output_wires);
    let rest_off = scatter_offsets(q, &rest);
    // W[(x, o), t] = columns[x][o + t]; J = W W^dagger.
    let rows = (1usize << n) * out_off.len();
    let mut w = DMatrix::<C64>::zeros(rows, rest_off.len());
    for (x, col) in columns.iter().enumerate() {
        for (o, &oo) in out_off.iter().enumerate() {
            for (t, &to) in rest_off.iter().enumerate() {
                w[(x * out_off.len() + o, t)] = col[oo + to];
            }
        }
    }
    let j = &w * w.adjoint();
    ChoiObject::from_representation(n, DenseOperator::new(n + m, j)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDoc {
    n: usize,
    #[serde(default)]
    a: usize,
    #[serde(default = "AncillaDoc::zeros")]
    ancilla: AncillaDoc,
    #[serde(default)]
    layers: Vec<LayerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_wires: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AncillaDoc {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

impl AncillaDoc {
    fn zeros() -> Self {
        AncillaDoc::Named("zeros".into())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum LayerDoc {
    Single { gates: BTreeMap<String, [[f64; 2]; 4]> },
    Cz { sets: Vec<Vec<usize>> },
}

impl CircuitDoc {
    fn into_spec(self) -> Result<ChannelSpec> {
        let ancilla = match self.ancilla {
            AncillaDoc::Named(s) if s == "zeros" => None,
            AncillaDoc::Named(s) => return Err(Error::invalid(format!("unknown ancilla state '{s}'"))),
            AncillaDoc::Amplitudes(v) => Some(v.into_iter().map(|[re, im]| C64::new(re, im)).collect()),
        };
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in self.layers {
            layers.push(match l {
                LayerDoc::Cz { sets } => Layer::Cz(sets),
                LayerDoc::Single { gates } => {
                    let mut map = BTreeMap::new();
                    for (k, e) in gates {
                        let w: usize = k
                            .trim()
                            .parse()
                            .map_err(|_| Error::invalid(format!("gate key '{k}' is not a wire index")))?;
                        let z = |i: usize| C64::new(e[i][0], e[i][1]);
                        let g = DenseOperator::from_fn(1, |r, c| z(2 * r + c));
                        map.insert(w, DenseOperator::new(1, g.into_matrix())?);
                    }
                    Layer::Single(map)
                }
            });
        }
        let circuit = Qac0Circuit::new(self.n, self.a, ancilla, layers)?;
        let out = self.output_wires.unwrap_or_else(|| (0..self.n).collect());
        ChannelSpec::new(circuit, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::expand;

    #[test]
    fn cz1_is_z_and_cz2_diag() {
        let z = cz_gate(1).unwrap();
        assert_eq!(z.get(1, 1), -ONE);
        let cz2 = cz_gate(2).unwrap();
        let d: Vec<f64> = (0..4).map(|i| cz2.get(i, i).re).collect();
        assert_eq!(d, vec![1.0, 1.0, 1.0, -1.0]);
        assert!(cz_gate(0).is_err());
    }

    #[test]
    fn cz4_expansion_has_sixteen_terms() {
        let p = expand(&cz_gate(4).unwrap());
        assert_eq!(p.len(), 16);
        assert_eq!(p.degree(), 4);
        for (s, c) in p.iter() {
            let want = if s.is_identity() { 0.875 } else { 0.125 };
            assert!((c.norm() - want).abs() < 1e-12, "{s}: {c}");
        }
    }

    #[test]
    fn hard_instance_reflects_one_state() {
        let c = hard_instance(&[true, false, true]).unwrap();
        let u = c.build_unitary().unwrap();
        for i in 0..8 {
            let want = if i == 5 { -1.0 } else { 1.0 };
            assert!((u.get(i, i).re - want).abs() < 1e-12);
        }
        let bare = hard_instance(&[true, true]).unwrap();
        assert_eq!(bare.layers().len(), 1);
    }

    #[test]
    fn overlapping_cz_sets_rejected() {
        let r = Qac0Circuit::new(3, 0, None, vec![Layer::Cz(vec![vec![0, 1], vec![1, 2]])]);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn json_round_trip() {
        let c = hard_instance(&[false, true]).unwrap();
        let spec = ChannelSpec::new(c, vec![1]).unwrap();
        let back = ChannelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let text = r#"{"n":1,"layers":[],"extra":3}"#;
        assert!(matches!(ChannelSpec::from_json(text), Err(Error::Validation(_))));
    }

    #[test]
    fn identity_channel_choi_is_bell() {
        let spec = ChannelSpec::first(Qac0Circuit::new(1, 0, None, vec![]).unwrap(), 1).unwrap();
        let ch = choi(&spec).unwrap();
        assert!((ch.representation.trace().re - 2.0).abs() < 1e-12);
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((ch.state.get(r, c).re - 0.5).abs() < 1e-12);
        }
    }
}
