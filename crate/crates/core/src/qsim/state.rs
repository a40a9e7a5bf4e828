use num_complex::Complex64;

use crate::par::{for_each_chunk_mut, Execution};

/// Registers at least this wide spread gate kernels over threads.
const PAR_MIN_QUBITS: usize = 14;
const DIAG_CHUNK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_index(i: usize) -> Pauli {
        match i & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }
}

/// `2^n` amplitudes; qubit `q` (0-based position in the bitstring) is bit
/// `n - 1 - q` of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
    exec: Execution,
}

type Mat2 = [[Complex64; 2]; 2];

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        let exec = if n >= PAR_MIN_QUBITS {
            Execution::default()
        } else {
            Execution::Sequential
        };
        StateVector { n, amps, exec }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    pub fn apply_1q(&mut self, q: usize, m: Mat2) {
        let stride = self.mask(q);
        for_each_chunk_mut(self.exec, &mut self.amps, 2 * stride, |_, block| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        });
    }

    pub fn h(&mut self, q: usize) {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_1q(q, [[s, s], [s, -s]]);
    }

    pub fn rx(&mut self, q: usize, theta: f64) {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(theta / 2.0).sin());
        self.apply_1q(q, [[c, s], [s, c]]);
    }

    pub fn ry(&mut self, q: usize, theta: f64) {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::new((theta / 2.0).sin(), 0.0);
        self.apply_1q(q, [[c, -s], [s, c]]);
    }

    /// `exp(-i θ Z / 2)`.
    pub fn rz(&mut self, q: usize, theta: f64) {
        let mask = self.mask(q);
        let minus = Complex64::from_polar(1.0, -theta / 2.0);
        let plus = Complex64::from_polar(1.0, theta / 2.0);
        self.apply_diagonal(|idx| if idx & mask == 0 { minus } else { plus });
    }

    /// `exp(-i θ Z_a Z_b / 2)`.
    pub fn zz(&mut self, a: usize, b: usize, theta: f64) {
        let (ma, mb) = (self.mask(a), self.mask(b));
        let same = Complex64::from_polar(1.0, -theta / 2.0);
        let diff = Complex64::from_polar(1.0, theta / 2.0);
        self.apply_diagonal(|idx| {
            if ((idx & ma == 0) as u8 ^ (idx & mb == 0) as u8) == 0 {
                same
            } else {
                diff
            }
        });
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (self.mask(control), self.mask(target));
        let chunk = 2 * tm;
        for_each_chunk_mut(self.exec, &mut self.amps, chunk, |ci, block| {
            let base = ci * chunk;
            let (lo, hi) = block.split_at_mut(tm);
            for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + k) & cm != 0 {
                    std::mem::swap(a, b);
                }
            }
        });
    }

    pub fn pauli(&mut self, q: usize, p: Pauli) {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match p {
            Pauli::I => {}
            Pauli::X => self.apply_1q(q, [[zero, one], [one, zero]]),
            Pauli::Y => self.apply_1q(q, [[zero, -i], [i, zero]]),
            Pauli::Z => self.apply_1q(q, [[one, zero], [zero, -one]]),
        }
    }

    fn apply_diagonal(&mut self, phase: impl Fn(usize) -> Complex64 + Sync + Send) {
        for_each_chunk_mut(self.exec, &mut self.amps, DIAG_CHUNK, |ci, block| {
            let base = ci * DIAG_CHUNK;
            for (k, a) in block.iter_mut().enumerate() {
                *a *= phase(base + k);
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_on_one_qubit() {
        let mut s = StateVector::zero(1);
        s.h(0);
        assert!(close(s.amplitudes()[0], Complex64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amplitudes()[1], Complex64::new(FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn ry_pi_flips() {
        let mut s = StateVector::zero(1);
        s.ry(0, PI);
        assert!(s.amplitudes()[0].norm() < 1e-12);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let mut s = StateVector::zero(3);
        s.ry(0, PI);
        assert!((s.probabilities()[0b100] - 1.0).abs() < 1e-12);
        s.cnot(0, 2);
        assert!((s.probabilities()[0b101] - 1.0).abs() < 1e-12);
        s.cnot(1, 0);
        assert!((s.probabilities()[0b101] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zz_matches_cnot_rz_cnot() {
        let mut a = StateVector::zero(3);
        for q in 0..3 {
            a.h(q);
            a.ry(q, 0.3 + q as f64);
        }
        let mut b = a.clone();
        a.zz(0, 2, 0.77);
        b.cnot(0, 2);
        b.rz(2, 0.77);
        b.cnot(0, 2);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!(close(*x, *y));
        }
    }

    #[test]
    fn gates_preserve_norm() {
        let mut s = StateVector::zero(5);
        for step in 0..40 {
            let q = step % 5;
            match step % 6 {
                0 => s.h(q),
                1 => s.rx(q, 0.1 * step as f64),
                2 => s.ry(q, 0.7),
                3 => s.rz(q, 1.3),
                4 => s.cnot(q, (q + 2) % 5),
                _ => s.zz(q, (q + 1) % 5, 0.4),
            }
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn parallel_kernels_match_sequential() {
        let n = 15;
        let mut seq = StateVector::zero(n);
        seq.exec = Execution::Sequential;
        let mut par = StateVector::zero(n);
        assert_eq!(par.exec, Execution::default());
        for s in [&mut seq, &mut par] {
            for q in 0..n {
                s.h(q);
                s.ry(q, 0.1 * q as f64);
            }
            s.cnot(3, 11);
            s.zz(0, 14, 0.5);
            s.rz(7, 0.2);
        }
        assert_eq!(seq.amplitudes(), par.amplitudes());
    }
}
