//! The three 4-qubit parametrized circuits used as quantum layers, their
//! probability readout, and parameter-shift Jacobians of that readout.
//!
//! Parameter slots `0..n_data_params` are filled from the network's data
//! embedding; slots `n_data_params..` are trainable circuit weights.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::statevector::{self, hadamard, ry, zero_state, BoundGate, StateVector, Unitary};
use crate::{Error, Result};

/// Width of every circuit here and length of its readout.
pub const N_QUBITS: usize = 4;
pub const READOUT_DIM: usize = 1 << N_QUBITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    NoEntanglement,
    Bellman,
    RealAmplitudes,
}

impl CircuitKind {
    pub const ALL: [CircuitKind; 3] = [
        CircuitKind::NoEntanglement,
        CircuitKind::Bellman,
        CircuitKind::RealAmplitudes,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CircuitKind::NoEntanglement => "no_entanglement",
            CircuitKind::Bellman => "bellman",
            CircuitKind::RealAmplitudes => "real_amplitudes",
        }
    }

    pub fn build(&self) -> CircuitSpec {
        match self {
            CircuitKind::NoEntanglement => build_no_entanglement(),
            CircuitKind::Bellman => build_bellman(),
            CircuitKind::RealAmplitudes => build_real_amplitudes(),
        }
    }
}

impl fmt::Display for CircuitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CircuitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CircuitKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown circuit identifier '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Hadamard,
    RyData,
    RyWeight,
    Cnot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    /// Acted-on wire; the target for a CNOT.
    pub qubit: usize,
    pub control: Option<usize>,
    pub param_slot: Option<usize>,
}

impl GateOp {
    pub fn h(qubit: usize) -> Self {
        Self {
            kind: GateKind::Hadamard,
            qubit,
            control: None,
            param_slot: None,
        }
    }

    pub fn ry_data(qubit: usize, slot: usize) -> Self {
        Self {
            kind: GateKind::RyData,
            qubit,
            control: None,
            param_slot: Some(slot),
        }
    }

    pub fn ry_weight(qubit: usize, slot: usize) -> Self {
        Self {
            kind: GateKind::RyWeight,
            qubit,
            control: None,
            param_slot: Some(slot),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            qubit: target,
            control: Some(control),
            param_slot: None,
        }
    }
}

/// A fixed gate topology with parameter slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub name: String,
    pub n_qubits: usize,
    pub ops: Vec<GateOp>,
    pub n_data_params: usize,
    pub n_weight_params: usize,
}

impl CircuitSpec {
    pub fn n_params(&self) -> usize {
        self.n_data_params + self.n_weight_params
    }

    pub fn readout_dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Checks the wiring invariants: gate fields match their kind, every
    /// slot is in range and used, data slots precede weight slots.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_params();
        let mut used = vec![false; n];
        for (i, op) in self.ops.iter().enumerate() {
            let bad = |why: &str| Err(Error::Argument(format!("{}: op {i}: {why}", self.name)));
            if op.qubit >= self.n_qubits {
                return bad("qubit out of range");
            }
            match op.kind {
                GateKind::Cnot => {
                    match op.control {
                        Some(c) if c < self.n_qubits && c != op.qubit => {}
                        _ => return bad("CNOT needs a distinct in-range control"),
                    }
                    if op.param_slot.is_some() {
                        return bad("CNOT carries no parameter");
                    }
                }
                GateKind::Hadamard => {
                    if op.control.is_some() || op.param_slot.is_some() {
                        return bad("Hadamard has no control or parameter");
                    }
                }
                GateKind::RyData | GateKind::RyWeight => {
                    if op.control.is_some() {
                        return bad("rotation has no control");
                    }
                    let Some(slot) = op.param_slot else {
                        return bad("rotation needs a parameter slot");
                    };
                    let in_data = slot < self.n_data_params;
                    if slot >= n || in_data != (op.kind == GateKind::RyData) {
                        return bad("parameter slot out of range for its kind");
                    }
                    used[slot] = true;
                }
            }
        }
        if let Some(slot) = used.iter().position(|u| !u) {
            return Err(Error::Argument(format!(
                "{}: parameter slot {slot} is never used",
                self.name
            )));
        }
        Ok(())
    }

    fn check_counts(&self, data: &[f64], weights: &[f64]) -> Result<()> {
        if data.len() != self.n_data_params || weights.len() != self.n_weight_params {
            return Err(Error::Argument(format!(
                "{} expects {} data and {} weight parameters, got {} and {}",
                self.name,
                self.n_data_params,
                self.n_weight_params,
                data.len(),
                weights.len()
            )));
        }
        Ok(())
    }

    /// Resolves the first `n_ops` operations against a flat parameter vector
    /// (data parameters followed by weights).
    pub fn bind_prefix(&self, params: &[f64], n_ops: usize) -> Result<Vec<BoundGate>> {
        if params.len() != self.n_params() {
            return Err(Error::Argument(format!(
                "{} expects {} parameters, got {}",
                self.name,
                self.n_params(),
                params.len()
            )));
        }
        self.ops
            .iter()
            .take(n_ops)
            .map(|op| {
                Ok(match op.kind {
                    GateKind::Hadamard => BoundGate::Single {
                        gate: hadamard(),
                        qubit: op.qubit,
                    },
                    GateKind::RyData | GateKind::RyWeight => BoundGate::Single {
                        gate: ry(params[op.param_slot.expect("validated rotation slot")])?,
                        qubit: op.qubit,
                    },
                    GateKind::Cnot => BoundGate::Cnot {
                        control: op.control.expect("validated CNOT control"),
                        target: op.qubit,
                    },
                })
            })
            .collect()
    }

    pub fn bind(&self, params: &[f64]) -> Result<Vec<BoundGate>> {
        self.bind_prefix(params, self.ops.len())
    }

    /// State after the first `n_ops` operations, starting from all-|0⟩.
    pub fn state_after(&self, params: &[f64], n_ops: usize) -> Result<StateVector> {
        let mut state = zero_state(self.n_qubits)?;
        for g in self.bind_prefix(params, n_ops)? {
            state.apply(&g)?;
        }
        Ok(state)
    }

    pub fn final_state(&self, data: &[f64], weights: &[f64]) -> Result<StateVector> {
        self.check_counts(data, weights)?;
        let params: Vec<f64> = data.iter().chain(weights).copied().collect();
        self.state_after(&params, self.ops.len())
    }
}

/// Basis-state probabilities of a circuit's final state.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumReadout {
    pub probs: Vec<f64>,
}

/// Per wire: H then Ry(θ_i). Four data parameters, no weights.
pub fn build_no_entanglement() -> CircuitSpec {
    let mut ops = Vec::with_capacity(2 * N_QUBITS);
    for q in 0..N_QUBITS {
        ops.push(GateOp::h(q));
        ops.push(GateOp::ry_data(q, q));
    }
    CircuitSpec {
        name: CircuitKind::NoEntanglement.as_str().into(),
        n_qubits: N_QUBITS,
        ops,
        n_data_params: N_QUBITS,
        n_weight_params: 0,
    }
}

/// Index of the first rotation in [`build_bellman`]: the ops before it
/// prepare `(|0000⟩ + |1111⟩)/√2`.
pub const BELLMAN_ENTANGLER_LEN: usize = 4;

/// H on wire 0 and a CNOT ladder down the wires, Ry(θ_i) on every wire,
/// then the ladder undone from the bottom: (2→3), (1→2), (0→1).
pub fn build_bellman() -> CircuitSpec {
    let mut ops = vec![
        GateOp::h(0),
        GateOp::cnot(0, 1),
        GateOp::cnot(1, 2),
        GateOp::cnot(2, 3),
    ];
    ops.extend((0..N_QUBITS).map(|q| GateOp::ry_data(q, q)));
    ops.extend([GateOp::cnot(2, 3), GateOp::cnot(1, 2), GateOp::cnot(0, 1)]);
    CircuitSpec {
        name: CircuitKind::Bellman.as_str().into(),
        n_qubits: N_QUBITS,
        ops,
        n_data_params: N_QUBITS,
        n_weight_params: 0,
    }
}

/// Number of ops in [`build_real_amplitudes`] up to and including the data
/// rotations (the end of the encoding block).
pub const REAL_AMPLITUDES_ENCODING_LEN: usize = 2 * N_QUBITS;
/// Number of ops up to and including the all-pairs CNOT block.
pub const REAL_AMPLITUDES_ENTANGLER_END: usize = REAL_AMPLITUDES_ENCODING_LEN + 6;

/// Per wire H then Ry(θ_i) for data, CNOTs over every ordered wire pair
/// (0→1, 0→2, 0→3, 1→2, 1→3, 2→3), then trainable Ry(θ_{4+i}) per wire.
pub fn build_real_amplitudes() -> CircuitSpec {
    let mut ops = Vec::new();
    for q in 0..N_QUBITS {
        ops.push(GateOp::h(q));
        ops.push(GateOp::ry_data(q, q));
    }
    for c in 0..N_QUBITS {
        for t in c + 1..N_QUBITS {
            ops.push(GateOp::cnot(c, t));
        }
    }
    ops.extend((0..N_QUBITS).map(|q| GateOp::ry_weight(q, N_QUBITS + q)));
    CircuitSpec {
        name: CircuitKind::RealAmplitudes.as_str().into(),
        n_qubits: N_QUBITS,
        ops,
        n_data_params: N_QUBITS,
        n_weight_params: N_QUBITS,
    }
}

/// Probabilities of every basis state after running the circuit on |0…0⟩.
pub fn run_circuit(spec: &CircuitSpec, data: &[f64], weights: &[f64]) -> Result<QuantumReadout> {
    Ok(QuantumReadout {
        probs: spec.final_state(data, weights)?.probabilities(),
    })
}

/// Dense unitary of the whole circuit at the given parameters.
pub fn circuit_unitary(spec: &CircuitSpec, data: &[f64], weights: &[f64]) -> Result<Unitary> {
    spec.check_counts(data, weights)?;
    let params: Vec<f64> = data.iter().chain(weights).copied().collect();
    statevector::circuit_unitary(spec.n_qubits, &spec.bind(&params)?)
}

/// `readout_dim × n_params` Jacobian stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Jacobian {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// `upstreamᵀ · J`: gradient with respect to each parameter given the
    /// gradient with respect to each readout entry.
    pub fn vjp(&self, upstream: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, g) in upstream.iter().enumerate().take(self.rows) {
            for (c, o) in out.iter_mut().enumerate() {
                *o += g * self.get(r, c);
            }
        }
        out
    }
}

/// Parameter-shift derivative of the readout with respect to the listed
/// parameter columns (data slots first, then weight slots). Columns not in
/// `columns` are left at zero.
///
/// Each parameter drives exactly one Ry gate, for which
/// `∂p/∂θ = (p(θ + π/2) − p(θ − π/2)) / 2` holds exactly.
pub fn param_shift_columns(
    spec: &CircuitSpec,
    data: &[f64],
    weights: &[f64],
    columns: &[usize],
) -> Result<Jacobian> {
    spec.check_counts(data, weights)?;
    let n = spec.n_params();
    if let Some(&c) = columns.iter().find(|&&c| c >= n) {
        return Err(Error::Index(format!("Jacobian column {c} out of range for {n}")));
    }
    let params: Vec<f64> = data.iter().chain(weights).copied().collect();
    let rows = spec.readout_dim();
    let probs_at = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(spec.state_after(p, spec.ops.len())?.probabilities())
    };
    let cols: Vec<(usize, Vec<f64>)> = columns
        .par_iter()
        .map(|&j| {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus[j] += FRAC_PI_2;
            minus[j] -= FRAC_PI_2;
            let (pp, pm) = (probs_at(&plus)?, probs_at(&minus)?);
            Ok((j, pp.iter().zip(&pm).map(|(a, b)| (a - b) / 2.0).collect()))
        })
        .collect::<Result<_>>()?;
    let mut jac = Jacobian {
        rows,
        cols: n,
        data: vec![0.0; rows * n],
    };
    for (j, col) in cols {
        for (r, v) in col.into_iter().enumerate() {
            jac.data[r * n + j] = v;
        }
    }
    Ok(jac)
}

pub fn param_shift_jacobian(spec: &CircuitSpec, data: &[f64], weights: &[f64]) -> Result<Jacobian> {
    let all: Vec<usize> = (0..spec.n_params()).collect();
    param_shift_columns(spec, data, weights, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn random_params(spec: &CircuitSpec, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
        let d = (0..spec.n_data_params).map(|_| rng.gen_range(-PI..PI)).collect();
        let w = (0..spec.n_weight_params).map(|_| rng.gen_range(-PI..PI)).collect();
        (d, w)
    }

    fn basis_mix(n: usize, terms: &[(usize, f64)]) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        for &(k, a) in terms {
            amps[k] = Complex64::new(a, 0.0);
        }
        StateVector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn builders_validate() {
        for kind in CircuitKind::ALL {
            let spec = kind.build();
            spec.validate().unwrap();
            assert_eq!(spec.n_qubits, 4);
            assert_eq!(spec.readout_dim(), 16);
            assert_eq!(spec.name, kind.as_str());
        }
    }

    #[test]
    fn identifiers_round_trip() {
        for kind in CircuitKind::ALL {
            assert_eq!(kind.as_str().parse::<CircuitKind>().unwrap(), kind);
        }
        assert!(matches!("bell".parse::<CircuitKind>(), Err(Error::Config(_))));
        assert_eq!(
            ["no_entanglement", "bellman", "real_amplitudes"],
            CircuitKind::ALL.map(|k| k.as_str())
        );
    }

    #[test]
    fn validate_rejects_unused_slot() {
        let mut spec = build_no_entanglement();
        spec.ops.pop();
        assert!(matches!(spec.validate(), Err(Error::Argument(_))));
    }

    #[test]
    fn no_entanglement_at_zero_is_all_hadamards() {
        let spec = build_no_entanglement();
        let u = circuit_unitary(&spec, &[0.0; 4], &[]).unwrap();
        let gates: Vec<BoundGate> = (0..4)
            .map(|q| BoundGate::Single { gate: hadamard(), qubit: q })
            .collect();
        let hhhh = statevector::circuit_unitary(4, &gates).unwrap();
        assert!(u.max_abs_diff(&hhhh) < 1e-12);
        let r = run_circuit(&spec, &[0.0; 4], &[]).unwrap();
        assert!(r.probs.iter().all(|p| (p - 1.0 / 16.0).abs() < 1e-12));
    }

    #[test]
    fn no_entanglement_unitary_is_tensor_product() {
        let spec = build_no_entanglement();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let (d, _) = random_params(&spec, &mut rng);
            let factor = |t: f64| Unitary::from_gate(&ry(t).unwrap().matmul(&hadamard()));
            let expected = factor(d[0]).kron(&factor(d[1])).kron(&factor(d[2])).kron(&factor(d[3]));
            let u = circuit_unitary(&spec, &d, &[]).unwrap();
            assert!(u.max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn no_entanglement_single_wire_amplitudes() {
        // closed form: ((cos − sin)/√2, (cos + sin)/√2) of θ/2 on every wire
        let spec = build_no_entanglement();
        let theta = [0.3, -1.2, 2.5, 0.0];
        let s = spec.final_state(&theta, &[]).unwrap();
        let wire = |t: f64| {
            let (sn, cs) = (t / 2.0).sin_cos();
            [(cs - sn) * FRAC_1_SQRT_2, (cs + sn) * FRAC_1_SQRT_2]
        };
        for k in 0..16 {
            let expected: f64 = (0..4).map(|q| wire(theta[q])[(k >> (3 - q)) & 1]).product();
            assert_abs_diff_eq!(s.amplitudes()[k].re, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(s.amplitudes()[k].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bellman_golden_states() {
        let spec = build_bellman();
        let zeros = [0.0; 4];
        let pre = spec.state_after(&zeros, BELLMAN_ENTANGLER_LEN).unwrap();
        let ghz = basis_mix(4, &[(0, FRAC_1_SQRT_2), (15, FRAC_1_SQRT_2)]);
        assert!(pre.max_abs_diff(&ghz) < 1e-12);

        // each reverse CNOT peels one bit off |1111⟩: 1110, 1100, 1000
        let steps = [0b1110, 0b1100, 0b1000];
        for (i, k) in steps.into_iter().enumerate() {
            let s = spec.state_after(&zeros, BELLMAN_ENTANGLER_LEN + 4 + i + 1).unwrap();
            assert!(s.max_abs_diff(&basis_mix(4, &[(0, FRAC_1_SQRT_2), (k, FRAC_1_SQRT_2)])) < 1e-12);
        }

        let r = run_circuit(&spec, &zeros, &[]).unwrap();
        for (k, p) in r.probs.iter().enumerate() {
            let expected = if k == 0 || k == 8 { 0.5 } else { 0.0 };
            assert_abs_diff_eq!(*p, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn bellman_rotation_block_is_tensor_product() {
        let spec = build_bellman();
        let theta = [0.4, -0.9, 1.7, 2.2];
        let rot_ops = &spec.ops[BELLMAN_ENTANGLER_LEN..BELLMAN_ENTANGLER_LEN + 4];
        let block = CircuitSpec {
            name: "block".into(),
            n_qubits: 4,
            ops: rot_ops.to_vec(),
            n_data_params: 4,
            n_weight_params: 0,
        };
        let u = circuit_unitary(&block, &theta, &[]).unwrap();
        let r = |t: f64| Unitary::from_gate(&ry(t).unwrap());
        let expected = r(theta[0]).kron(&r(theta[1])).kron(&r(theta[2])).kron(&r(theta[3]));
        assert_eq!(u.dim(), 16);
        assert!(u.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn real_amplitudes_walkthrough() {
        let spec = build_real_amplitudes();
        assert_eq!(spec.n_weight_params, 4);
        let weight_slots: Vec<usize> = spec
            .ops
            .iter()
            .filter(|o| o.kind == GateKind::RyWeight)
            .map(|o| o.param_slot.unwrap())
            .collect();
        assert_eq!(weight_slots, vec![4, 5, 6, 7]);

        let zeros = [0.0; 8];
        let psi1 = spec.state_after(&zeros, REAL_AMPLITUDES_ENCODING_LEN).unwrap();
        assert!(psi1.amplitudes().iter().all(|a| (a - Complex64::new(0.25, 0.0)).norm() < 1e-12));
        let psi2 = spec.state_after(&zeros, REAL_AMPLITUDES_ENTANGLER_END).unwrap();
        assert!(psi1.max_abs_diff(&psi2) < 1e-12);
    }

    #[test]
    fn real_amplitudes_cnot_order() {
        let spec = build_real_amplitudes();
        let pairs: Vec<(usize, usize)> = spec
            .ops
            .iter()
            .filter(|o| o.kind == GateKind::Cnot)
            .map(|o| (o.control.unwrap(), o.qubit))
            .collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn run_circuit_checks_counts() {
        let spec = build_real_amplitudes();
        assert!(matches!(run_circuit(&spec, &[0.0; 4], &[0.0; 3]), Err(Error::Argument(_))));
        assert!(matches!(
            param_shift_jacobian(&spec, &[0.0; 3], &[0.0; 4]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn circuits_are_unitary_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in CircuitKind::ALL {
            let spec = kind.build();
            for _ in 0..50 {
                let (d, w) = random_params(&spec, &mut rng);
                assert!(circuit_unitary(&spec, &d, &w).unwrap().is_unitary(1e-10));
                let r = run_circuit(&spec, &d, &w).unwrap();
                assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!(r.probs.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
            }
        }
    }

    #[test]
    fn run_circuit_is_bit_deterministic() {
        let spec = build_real_amplitudes();
        let d = [0.1, 0.2, -0.3, 1.4];
        let w = [0.5, -0.6, 0.7, 0.8];
        let a = run_circuit(&spec, &d, &w).unwrap();
        let b = run_circuit(&spec, &d, &w).unwrap();
        assert_eq!(
            a.probs.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
            b.probs.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn jacobian_columns_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in CircuitKind::ALL {
            let spec = kind.build();
            let (d, w) = random_params(&spec, &mut rng);
            let j = param_shift_jacobian(&spec, &d, &w).unwrap();
            assert_eq!((j.rows, j.cols), (16, spec.n_params()));
            for c in 0..j.cols {
                assert!(j.column(c).iter().sum::<f64>().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for kind in CircuitKind::ALL {
            let spec = kind.build();
            for _ in 0..20 {
                let (d, w) = random_params(&spec, &mut rng);
                let j = param_shift_jacobian(&spec, &d, &w).unwrap();
                let params: Vec<f64> = d.iter().chain(&w).copied().collect();
                for c in 0..spec.n_params() {
                    let (mut p, mut m) = (params.clone(), params.clone());
                    p[c] += h;
                    m[c] -= h;
                    let rp = run_circuit(&spec, &p[..4], &p[4..]).unwrap();
                    let rm = run_circuit(&spec, &m[..4], &m[4..]).unwrap();
                    for r in 0..16 {
                        let fd = (rp.probs[r] - rm.probs[r]) / (2.0 * h);
                        assert!((fd - j.get(r, c)).abs() < 1e-6, "{kind} r{r} c{c}");
                    }
                }
            }
        }
    }

    #[test]
    fn marginal_derivative_closed_form() {
        // p(qubit 0 = 1) = (1 + sin θ0)/2, so its derivative at 0 is 1/2
        let spec = build_no_entanglement();
        let d = [0.0, 0.7, -0.2, 1.1];
        let j = param_shift_jacobian(&spec, &d, &[]).unwrap();
        let dmarg: f64 = (8..16).map(|k| j.get(k, 0)).sum();
        assert_abs_diff_eq!(dmarg, 0.5, epsilon = 1e-12);

        for t in [-2.0, -0.5, 0.9, 2.8] {
            let s = spec.final_state(&[t, 0.0, 0.0, 0.0], &[]).unwrap();
            assert_abs_diff_eq!(s.marginal_one(0).unwrap(), (1.0 + t.sin()) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn swapping_data_params_permutes_marginals() {
        let spec = build_no_entanglement();
        let d = [0.3, -1.1, 2.0, 0.6];
        let mut swapped = d;
        swapped.swap(1, 3);
        let a = spec.final_state(&d, &[]).unwrap();
        let b = spec.final_state(&swapped, &[]).unwrap();
        for (qa, qb) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
            assert_abs_diff_eq!(a.marginal_one(qa).unwrap(), b.marginal_one(qb).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_columns_leave_others_zero() {
        let spec = build_real_amplitudes();
        let d = [0.1, 0.2, 0.3, 0.4];
        let w = [0.5, 0.6, 0.7, 0.8];
        let full = param_shift_jacobian(&spec, &d, &w).unwrap();
        let part = param_shift_columns(&spec, &d, &w, &[0, 1, 2, 3]).unwrap();
        for r in 0..16 {
            for c in 0..8 {
                let expected = if c < 4 { full.get(r, c) } else { 0.0 };
                assert_eq!(part.get(r, c), expected);
            }
        }
        assert!(matches!(param_shift_columns(&spec, &d, &w, &[8]), Err(Error::Index(_))));
    }
}
