//! Projective spin measurements on the two-qubit singlet state.
//!
//! Analyzer directions lie in the x–z plane: the observable for angle `θ`
//! is `cos θ·σz + sin θ·σx`. Spin `+1` is reported as outcome 0 and `−1`
//! as outcome 1. Basis order is `|00⟩, |01⟩, |10⟩, |11⟩` with A's qubit
//! first.

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::chsh::chsh_value;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sampler::unit_interval;
use crate::table::{BoxTable, Outcome};

type Matrix2 = [[Complex64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    pub amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Exchanges the two qubits (`|01⟩ ↔ |10⟩`).
    pub fn swap_qubits(&self) -> Self {
        let [a00, a01, a10, a11] = self.amplitudes;
        Self {
            amplitudes: [a00, a10, a01, a11],
        }
    }

    /// `⟨ψ| P ⊗ Q |ψ⟩`, real part.
    pub fn expectation(&self, p: &Matrix2, q: &Matrix2) -> f64 {
        let psi = &self.amplitudes;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let mut row = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        row += p[i][k] * q[j][l] * psi[2 * k + l];
                    }
                }
                acc += psi[2 * i + j].conj() * row;
            }
        }
        acc.re
    }
}

/// `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> TwoQubitState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |v: f64| Complex64::new(v, 0.0);
    TwoQubitState {
        amplitudes: [c(0.0), c(r), c(-r), c(0.0)],
    }
}

/// Rank-1 projector onto the eigenstate of `cos θ·σz + sin θ·σx` with
/// spin `+1` (outcome 0) or `−1` (outcome 1).
pub fn spin_projector(theta: f64, outcome: Outcome) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let v = match outcome.bit() {
        0 => [c, s],
        _ => [-s, c],
    };
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = Complex64::new(v[i] * v[j], 0.0);
        }
    }
    m
}

/// Analyzer angles in radians: A uses `theta_a[x]`, B uses `theta_b[y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementAngles {
    pub theta_a: [f64; 2],
    pub theta_b: [f64; 2],
}

impl MeasurementAngles {
    pub fn new(theta_a0: f64, theta_a1: f64, theta_b0: f64, theta_b1: f64) -> Result<Self> {
        for v in [theta_a0, theta_a1, theta_b0, theta_b1] {
            if !v.is_finite() {
                return Err(Error::NonFiniteAngle(v));
            }
        }
        Ok(Self {
            theta_a: [theta_a0, theta_a1],
            theta_b: [theta_b0, theta_b1],
        })
    }

    /// `(0, π/2, 5π/4, 3π/4)`: every correlation has magnitude `1/√2` with
    /// the signs that make `S = +2√2`.
    pub fn tsirelson_optimal() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self {
            theta_a: [0.0, FRAC_PI_2],
            theta_b: [5.0 * FRAC_PI_4, 3.0 * FRAC_PI_4],
        }
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            theta_a: self.theta_a.map(|t| t + offset),
            theta_b: self.theta_b.map(|t| t + offset),
        }
    }
}

pub fn singlet_box(angles: &MeasurementAngles) -> BoxTable {
    let psi = singlet();
    let label = format!(
        "singlet:{},{},{},{}",
        angles.theta_a[0], angles.theta_a[1], angles.theta_b[0], angles.theta_b[1]
    );
    BoxTable::from_fn(label, |x, y, a, b| {
        let pa = spin_projector(angles.theta_a[x.index()], a);
        let pb = spin_projector(angles.theta_b[y.index()], b);
        // Round-off can leave tiny negative values on zero-probability cells.
        psi.expectation(&pa, &pb).max(0.0)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleSearch {
    pub points: usize,
    pub max_s: f64,
    pub min_s: f64,
    pub argmax: MeasurementAngles,
}

/// Evaluates `S` of the singlet box at `points` angle tuples drawn
/// uniformly from `[0, 2π)^4`. The tuples come from one xoshiro256**
/// stream seeded with `seed`, so the result does not depend on `exec`.
pub fn random_angle_search(points: usize, seed: u64, exec: Execution) -> AngleSearch {
    assert!(points > 0, "angle search needs at least one point");
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let angles: Vec<MeasurementAngles> = (0..points)
        .map(|_| {
            let mut next = || tau * unit_interval(rng.next_u64());
            MeasurementAngles {
                theta_a: [next(), next()],
                theta_b: [next(), next()],
            }
        })
        .collect();
    let values = exec.map_slice(&angles, |m| chsh_value(&singlet_box(m)).s);

    let mut best = 0;
    for (i, &s) in values.iter().enumerate() {
        if s > values[best] {
            best = i;
        }
    }
    AngleSearch {
        points,
        max_s: values[best],
        min_s: values.iter().copied().fold(f64::INFINITY, f64::min),
        argmax: angles[best],
    }
}
