//! Exact statevector simulation of small qubit registers.
//!
//! Basis ordering: qubit 0 is the top wire of a circuit diagram and the most
//! significant bit of the basis index, so on four qubits `|1000⟩` is index 8.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;

use crate::{Error, Result};

/// Largest register [`zero_state`] will allocate.
pub const MAX_QUBITS: usize = 14;
/// Largest register [`circuit_unitary`] will expand into a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pure state of an n-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// `|0…0⟩` on `n_qubits` qubits.
pub fn zero_state(n_qubits: usize) -> Result<StateVector> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Size(format!(
            "register of {n_qubits} qubits outside 1..={MAX_QUBITS}"
        )));
    }
    let mut amplitudes = vec![ZERO; 1 << n_qubits];
    amplitudes[0] = ONE;
    Ok(StateVector {
        n_qubits,
        amplitudes,
    })
}

impl StateVector {
    /// Builds a state from raw amplitudes. The length must be a power of two
    /// and the vector must be normalized to within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = zero_state(n_qubits)?;
        if index >= s.amplitudes.len() {
            return Err(Error::Index(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amplitudes[0] = ZERO;
        s.amplitudes[index] = ONE;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Applies `gate` to `qubit` in place, pairing amplitudes whose indices
    /// differ only in that qubit's bit.
    pub fn apply_1q(&mut self, gate: &Gate1Q, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = self.bit(qubit);
        let [[m00, m01], [m10, m11]] = gate.m;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m00 * x0 + m01 * x1;
                *a1 = m10 * x0 + m11 * x1;
            }
        }
        Ok(())
    }

    /// Flips `target` on every basis state whose `control` bit is set.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Argument(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        let cbit = self.bit(control);
        let tbit = self.bit(target);
        for k in 0..self.amplitudes.len() {
            // visit each swapped pair once, from its target-0 member
            if k & cbit != 0 && k & tbit == 0 {
                self.amplitudes.swap(k, k | tbit);
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &BoundGate) -> Result<()> {
        match gate {
            BoundGate::Single { gate, qubit } => self.apply_1q(gate, *qubit),
            BoundGate::Cnot { control, target } => self.apply_cnot(*control, *target),
        }
    }

    /// Measurement probabilities of every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability of reading `|1⟩` on a single qubit.
    pub fn marginal_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = self.bit(qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| k & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Largest amplitude-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Distance to `other` after removing the relative global phase.
    pub fn max_abs_diff_up_to_phase(&self, other: &StateVector) -> f64 {
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, a) in self.amplitudes.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(
                f,
                "({:.4}{:+.4}i)|{:0width$b}⟩",
                a.re,
                a.im,
                k,
                width = self.n_qubits
            )?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// 2×2 single-qubit gate matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate1Q {
    pub m: [[Complex64; 2]; 2],
}

impl Gate1Q {
    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn real(m: [[f64; 2]; 2]) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self {
            m: [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]],
        }
    }

    pub fn matmul(&self, rhs: &Gate1Q) -> Gate1Q {
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        Gate1Q { m: out }
    }

    pub fn dagger(&self) -> Gate1Q {
        let m = &self.m;
        Gate1Q {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    pub fn max_abs_diff(&self, other: &Gate1Q) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }

    /// `‖m†m − I‖_max ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.dagger().matmul(self).max_abs_diff(&Gate1Q::identity()) <= tol
    }
}

pub fn hadamard() -> Gate1Q {
    Gate1Q::real([[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]])
}

/// Rotation about the Bloch-sphere y axis.
pub fn ry(theta: f64) -> Result<Gate1Q> {
    if !theta.is_finite() {
        return Err(Error::Domain(format!("Ry angle {theta} is not finite")));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(Gate1Q::real([[c, -s], [s, c]]))
}

/// A gate with its angle already resolved, ready to apply.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundGate {
    Single { gate: Gate1Q, qubit: usize },
    Cnot { control: usize, target: usize },
}

/// Dense `dim × dim` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    dim: usize,
    m: Vec<Complex64>,
}

impl Unitary {
    pub fn identity(dim: usize) -> Self {
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = ONE;
        }
        Self { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row * self.dim + col]
    }

    pub fn from_gate(g: &Gate1Q) -> Self {
        Self {
            dim: 2,
            m: vec![g.m[0][0], g.m[0][1], g.m[1][0], g.m[1][1]],
        }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Unitary) -> Unitary {
        let dim = self.dim * rhs.dim;
        let mut m = vec![ZERO; dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        m[(i * rhs.dim + k) * dim + j * rhs.dim + l] = a * rhs.get(k, l);
                    }
                }
            }
        }
        Unitary { dim, m }
    }

    pub fn matmul(&self, rhs: &Unitary) -> Unitary {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matmul");
        let dim = self.dim;
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..dim {
                    m[i * dim + j] += a * rhs.get(k, j);
                }
            }
        }
        Unitary { dim, m }
    }

    pub fn dagger(&self) -> Unitary {
        let dim = self.dim;
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                m[j * dim + i] = self.get(i, j).conj();
            }
        }
        Unitary { dim, m }
    }

    pub fn max_abs_diff(&self, other: &Unitary) -> f64 {
        self.m
            .iter()
            .zip(&other.m)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.dagger()
            .matmul(self)
            .max_abs_diff(&Unitary::identity(self.dim))
            <= tol
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.amplitudes.len() != self.dim {
            return Err(Error::Shape(format!(
                "unitary of dimension {} applied to state of length {}",
                self.dim,
                state.amplitudes.len()
            )));
        }
        let amplitudes = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * state.amplitudes[j]).sum())
            .collect();
        Ok(StateVector {
            n_qubits: state.n_qubits,
            amplitudes,
        })
    }
}

/// `I ⊗ … ⊗ gate ⊗ … ⊗ I` with `gate` in position `qubit`.
fn embed_1q(n_qubits: usize, gate: &Gate1Q, qubit: usize) -> Unitary {
    let id = Unitary::identity(2);
    let g = Unitary::from_gate(gate);
    let mut acc = if qubit == 0 { g.clone() } else { id.clone() };
    for q in 1..n_qubits {
        acc = acc.kron(if q == qubit { &g } else { &id });
    }
    acc
}

/// Permutation matrix of a CNOT, built column by column from its action on
/// basis indices.
fn embed_cnot(n_qubits: usize, control: usize, target: usize) -> Unitary {
    let dim = 1 << n_qubits;
    let cbit = 1 << (n_qubits - 1 - control);
    let tbit = 1 << (n_qubits - 1 - target);
    let mut m = vec![ZERO; dim * dim];
    for col in 0..dim {
        let row = if col & cbit != 0 { col ^ tbit } else { col };
        m[row * dim + col] = ONE;
    }
    Unitary { dim, m }
}

/// Dense unitary of a gate sequence: successive gates multiply, parallel
/// gates enter through Kronecker products with the identity.
pub fn circuit_unitary(n_qubits: usize, gates: &[BoundGate]) -> Result<Unitary> {
    if n_qubits == 0 || n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::Size(format!(
            "dense unitary of {n_qubits} qubits outside 1..={MAX_DENSE_QUBITS}"
        )));
    }
    let mut u = Unitary::identity(1 << n_qubits);
    for g in gates {
        let step = match *g {
            BoundGate::Single { gate, qubit } => {
                if qubit >= n_qubits {
                    return Err(Error::Index(format!("qubit {qubit} out of range")));
                }
                embed_1q(n_qubits, &gate, qubit)
            }
            BoundGate::Cnot { control, target } => {
                if control >= n_qubits || target >= n_qubits {
                    return Err(Error::Index(format!(
                        "CNOT {control}->{target} out of range"
                    )));
                }
                if control == target {
                    return Err(Error::Argument("CNOT control equals target".into()));
                }
                embed_cnot(n_qubits, control, target)
            }
        };
        u = step.matmul(&u);
    }
    Ok(u)
}

/// Polar and azimuthal angles of a single-qubit state on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn to_state(&self) -> StateVector {
        let (s, c) = (self.theta / 2.0).sin_cos();
        StateVector {
            n_qubits: 1,
            amplitudes: vec![Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi)],
        }
    }
}

const POLE_TOL: f64 = 1e-12;

/// Bloch angles of a one-qubit state; φ is 0 at either pole.
pub fn bloch_angles(state: &StateVector) -> Result<BlochAngles> {
    if state.n_qubits != 1 {
        return Err(Error::Argument(format!(
            "Bloch angles need a single qubit, got {}",
            state.n_qubits
        )));
    }
    let (a, b) = (state.amplitudes[0], state.amplitudes[1]);
    let theta = 2.0 * b.norm().atan2(a.norm());
    if a.norm() < POLE_TOL || b.norm() < POLE_TOL {
        return Ok(BlochAngles { theta, phi: 0.0 });
    }
    let mut phi = (b.arg() - a.arg()).rem_euclid(2.0 * PI);
    if phi >= 2.0 * PI {
        phi = 0.0;
    }
    Ok(BlochAngles { theta, phi })
}
