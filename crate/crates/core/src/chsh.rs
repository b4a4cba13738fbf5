//! Signed correlations and the CHSH combination
//! `S = E(0,0) + E(0,1) + E(1,0) − E(1,1)`.
//!
//! Outcomes map to spins by `a' = 1 − 2a`, so outcome 0 is `+1` and
//! outcome 1 is `−1`. The sign of `S` is kept; compare `|S|` against the
//! local bound 2, the quantum bound 2√2 and the algebraic bound 4.

use serde::Serialize;

use crate::table::{deterministic_local_box, BoxTable, LocalStrategy, Outcome, Setting};

pub const LOCAL_BOUND: f64 = 2.0;
pub const ALGEBRAIC_BOUND: f64 = 4.0;
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

/// `0 ↦ +1`, `1 ↦ −1`.
pub fn signed_outcome(o: Outcome) -> i8 {
    1 - 2 * o.bit() as i8
}

/// Inverse of [`signed_outcome`]: `a = (1 − a') / 2`.
pub fn outcome_from_signed(s: i8) -> Option<Outcome> {
    match s {
        1 => Some(Outcome::ZERO),
        -1 => Some(Outcome::ONE),
        _ => None,
    }
}

/// `E(x,y) = Σ_{a,b} a'·b'·P(a,b|x,y)`.
pub fn correlation(t: &BoxTable, x: Setting, y: Setting) -> f64 {
    let mut e = 0.0;
    for a in Outcome::ALL {
        for b in Outcome::ALL {
            let sign = signed_outcome(a) * signed_outcome(b);
            e += f64::from(sign) * t.prob(x, y, a, b);
        }
    }
    e
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshResult {
    /// `e[x][y] = E(x,y)`.
    pub e: [[f64; 2]; 2],
    pub s: f64,
}

impl ChshResult {
    pub fn from_correlations(e: [[f64; 2]; 2]) -> Self {
        let s = e[0][0] + e[0][1] + e[1][0] - e[1][1];
        Self { e, s }
    }

    pub fn correlation(&self, x: Setting, y: Setting) -> f64 {
        self.e[x.index()][y.index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("chsh results always serialize")
    }
}

pub fn chsh_value(t: &BoxTable) -> ChshResult {
    let mut e = [[0.0; 2]; 2];
    for x in Setting::ALL {
        for y in Setting::ALL {
            e[x.index()][y.index()] = correlation(t, x, y);
        }
    }
    ChshResult::from_correlations(e)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalBound {
    pub max_abs_s: f64,
    pub argmax: LocalStrategy,
    /// `S` for each of the 16 strategies, in [`LocalStrategy::all`] order.
    pub values: Vec<(LocalStrategy, f64)>,
}

/// Evaluates `S` on every deterministic local strategy and returns the
/// largest `|S|` with the first strategy attaining it.
pub fn classical_bound_certificate() -> ClassicalBound {
    let values: Vec<_> = LocalStrategy::all()
        .map(|st| (st, chsh_value(&deterministic_local_box(st)).s))
        .collect();
    let (argmax, max_abs_s) = values.iter().map(|&(st, s)| (st, s.abs())).fold(
        (values[0].0, f64::NEG_INFINITY),
        |best, cur| if cur.1 > best.1 { cur } else { best },
    );
    ClassicalBound {
        max_abs_s,
        argmax,
        values,
    }
}
