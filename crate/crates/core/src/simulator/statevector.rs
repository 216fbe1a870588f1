use num_complex::Complex64;

use crate::circuit::{Gate, GateKind};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense amplitude vector. Basis index bit `q` is the value of qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// 0 → I, 1 → X, 2 → Y, 3 → Z.
    pub fn from_index(i: u64) -> Pauli {
        match i & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }
}

impl StateVector {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | bit];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_phase(&mut self, mask: usize, phase: Complex64) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *a *= phase;
            }
        }
    }

    fn apply_controlled_x(&mut self, controls: &[usize], target: usize) {
        let cmask = controls.iter().fold(0usize, |m, &c| m | (1 << c));
        let tbit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask == cmask && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        match p {
            Pauli::I => {}
            Pauli::X => self.apply_controlled_x(&[], q),
            Pauli::Y => self.apply_1q(q, [[ZERO, -I], [I, ZERO]]),
            Pauli::Z => self.apply_phase(1 << q, -ONE),
        }
    }

    /// Applies a unitary gate. Measurement gates are ignored; callers read
    /// outcomes from the final amplitudes.
    pub fn apply(&mut self, gate: &Gate) {
        let q = &gate.qubits;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match gate.kind {
            GateKind::X => self.apply_controlled_x(&[], q[0]),
            GateKind::Y => self.apply_pauli(q[0], Pauli::Y),
            GateKind::Z => self.apply_phase(1 << q[0], -ONE),
            GateKind::H => {
                let h = Complex64::new(h, 0.0);
                self.apply_1q(q[0], [[h, h], [h, -h]])
            }
            GateKind::S => self.apply_phase(1 << q[0], I),
            GateKind::Sdg => self.apply_phase(1 << q[0], -I),
            GateKind::T => self.apply_phase(1 << q[0], Complex64::new(h, h)),
            GateKind::Tdg => self.apply_phase(1 << q[0], Complex64::new(h, -h)),
            GateKind::Rx(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let mis = Complex64::new(0.0, -s);
                self.apply_1q(q[0], [[c, mis], [mis, c]])
            }
            GateKind::Ry(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                let (s, c) = (Complex64::new(s, 0.0), Complex64::new(c, 0.0));
                self.apply_1q(q[0], [[c, -s], [s, c]])
            }
            GateKind::Rz(theta) => {
                let lo = Complex64::from_polar(1.0, -theta / 2.0);
                let hi = Complex64::from_polar(1.0, theta / 2.0);
                self.apply_1q(q[0], [[lo, ZERO], [ZERO, hi]])
            }
            GateKind::Cp(theta) => self.apply_phase((1 << q[0]) | (1 << q[1]), Complex64::from_polar(1.0, theta)),
            GateKind::Cz => self.apply_phase((1 << q[0]) | (1 << q[1]), -ONE),
            GateKind::Cx | GateKind::Ccx | GateKind::Mcx(_) => {
                let (target, controls) = q.split_last().expect("controlled gate has a target");
                self.apply_controlled_x(controls, *target)
            }
            GateKind::Swap => {
                let (a, b) = (1usize << q[0], 1usize << q[1]);
                for i in 0..self.amps.len() {
                    if i & a != 0 && i & b == 0 {
                        self.amps.swap(i, (i & !a) | b);
                    }
                }
            }
            GateKind::Measure => {}
        }
    }
}
