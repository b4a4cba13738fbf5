//! Deterministic hidden-variable models with a binary shared variable `λ`.
//!
//! Each party's outcome is a function of both settings and `λ`. The PR
//! model uses `a = x + λ (mod 2)` and `b = x + λ − xy (mod 2)`; averaging
//! over `λ` gives a [`BoxTable`].

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::chsh::{chsh_value, signed_outcome};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::locality::{no_signaling, Verdict};
use crate::table::{BoxTable, Outcome, Setting, Tolerance};

/// Probabilities of `λ = 0` and `λ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaDist {
    p0: f64,
    p1: f64,
}

impl LambdaDist {
    pub fn new(p0: f64, p1: f64, tol: Tolerance) -> Result<Self> {
        let ok = p0.is_finite() && p1.is_finite() && p0 >= 0.0 && p1 >= 0.0;
        if ok && tol.close(p0 + p1, 1.0) {
            Ok(Self { p0, p1 })
        } else {
            Err(Error::InvalidLambdaDist { p0, p1 })
        }
    }

    /// `(p0, 1 − p0)`.
    pub fn from_p0(p0: f64) -> Result<Self> {
        Self::new(p0, 1.0 - p0, Tolerance::default())
    }

    pub fn uniform() -> Self {
        Self { p0: 0.5, p1: 0.5 }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn prob(&self, lambda: u8) -> f64 {
        if lambda == 0 {
            self.p0
        } else {
            self.p1
        }
    }
}

/// Response tables indexed `[x][y][λ]`.
pub type ResponseTable = [[[Outcome; 2]; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct HvModel {
    respond_a: ResponseTable,
    respond_b: ResponseTable,
    dist: LambdaDist,
    label: String,
}

impl HvModel {
    pub fn from_tables(
        label: impl Into<String>,
        respond_a: ResponseTable,
        respond_b: ResponseTable,
        dist: LambdaDist,
    ) -> Self {
        Self {
            respond_a,
            respond_b,
            dist,
            label: label.into(),
        }
    }

    pub fn from_fns(
        label: impl Into<String>,
        a: impl Fn(Setting, Setting, u8) -> Outcome,
        b: impl Fn(Setting, Setting, u8) -> Outcome,
        dist: LambdaDist,
    ) -> Self {
        let mut ta = [[[Outcome::ZERO; 2]; 2]; 2];
        let mut tb = ta;
        for x in Setting::ALL {
            for y in Setting::ALL {
                for lambda in 0..2u8 {
                    ta[x.index()][y.index()][lambda as usize] = a(x, y, lambda);
                    tb[x.index()][y.index()][lambda as usize] = b(x, y, lambda);
                }
            }
        }
        Self::from_tables(label, ta, tb, dist)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dist(&self) -> LambdaDist {
        self.dist
    }

    pub fn with_dist(&self, dist: LambdaDist) -> Self {
        Self {
            dist,
            ..self.clone()
        }
    }

    /// `(a, b)` for the given settings and `λ`.
    pub fn respond(&self, x: Setting, y: Setting, lambda: u8) -> (Outcome, Outcome) {
        let l = (lambda & 1) as usize;
        (
            self.respond_a[x.index()][y.index()][l],
            self.respond_b[x.index()][y.index()][l],
        )
    }

    /// `Σ_λ P(λ)·a'·b'`, evaluated on the response functions directly
    /// rather than through [`hv_to_box`].
    pub fn direct_correlation(&self, x: Setting, y: Setting) -> f64 {
        (0..2u8)
            .map(|lambda| {
                let (a, b) = self.respond(x, y, lambda);
                self.dist.prob(lambda) * f64::from(signed_outcome(a) * signed_outcome(b))
            })
            .sum()
    }
}

/// `a = (x + λ) mod 2`, `b = (x + λ − xy) mod 2`.
pub fn pr_hv_model(dist: LambdaDist) -> HvModel {
    HvModel::from_fns(
        format!("hv:p0={}", dist.p0),
        |x, _y, lambda| Outcome::from_bool((x.bit() + lambda) % 2 == 1),
        |x, y, lambda| {
            let v = i16::from(x.bit()) + i16::from(lambda) - i16::from(x.bit() * y.bit());
            Outcome::from_bool(v.rem_euclid(2) == 1)
        },
        dist,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TruthRow {
    pub x: u8,
    pub y: u8,
    pub lambda: u8,
    pub a: u8,
    pub b: u8,
}

/// The 8 input triples in the order `(x, y, λ)` = (0,0,0), (0,0,1),
/// (1,0,0), (1,0,1), (0,1,0), (0,1,1), (1,1,0), (1,1,1).
pub fn truth_table(m: &HvModel) -> Vec<TruthRow> {
    let mut rows = Vec::with_capacity(8);
    for y in Setting::ALL {
        for x in Setting::ALL {
            for lambda in 0..2u8 {
                let (a, b) = m.respond(x, y, lambda);
                rows.push(TruthRow {
                    x: x.bit(),
                    y: y.bit(),
                    lambda,
                    a: a.bit(),
                    b: b.bit(),
                });
            }
        }
    }
    rows
}

pub const TRUTH_TABLE_HEADER: &str = "x,y,lambda,a,b";

pub fn truth_table_csv(rows: &[TruthRow]) -> String {
    let mut out = String::from(TRUTH_TABLE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.x, r.y, r.lambda, r.a, r.b));
    }
    out
}

/// `p(x,y,a,b) = Σ P(λ)` over the `λ` whose responses are `(a, b)`.
pub fn hv_to_box(m: &HvModel) -> BoxTable {
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for x in Setting::ALL {
        for y in Setting::ALL {
            for lambda in 0..2u8 {
                let (a, b) = m.respond(x, y, lambda);
                p[x.index()][y.index()][a.index()][b.index()] += m.dist.prob(lambda);
            }
        }
    }
    BoxTable::from_array(m.label.clone(), p)
}

/// Which response functions read the other party's setting or outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HvDependence {
    pub a_depends_on_y: bool,
    pub b_depends_on_x: bool,
    /// Always false: responses are functions of the settings and `λ` only.
    pub a_depends_on_b: bool,
    /// Always false, as for `a_depends_on_b`.
    pub b_depends_on_a: bool,
}

pub fn hv_dependence(m: &HvModel) -> HvDependence {
    let mut a_depends_on_y = false;
    let mut b_depends_on_x = false;
    for s in Setting::ALL {
        for lambda in 0..2 {
            a_depends_on_y |=
                m.respond_a[s.index()][0][lambda] != m.respond_a[s.index()][1][lambda];
            b_depends_on_x |=
                m.respond_b[0][s.index()][lambda] != m.respond_b[1][s.index()][lambda];
        }
    }
    HvDependence {
        a_depends_on_y,
        b_depends_on_x,
        a_depends_on_b: false,
        b_depends_on_a: false,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub dist: LambdaDist,
    pub chsh: f64,
    pub no_signaling: Verdict,
    pub constraint_ok: bool,
}

impl Serialize for SweepPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SweepPoint", 4)?;
        st.serialize_field("p0", &self.dist.p0)?;
        st.serialize_field("chsh", &self.chsh)?;
        st.serialize_field("no_signaling", self.no_signaling.status().as_str())?;
        st.serialize_field("constraint_ok", &self.constraint_ok)?;
        st.end()
    }
}

pub fn sweep_point(dist: LambdaDist, tol: Tolerance) -> SweepPoint {
    let table = hv_to_box(&pr_hv_model(dist));
    SweepPoint {
        dist,
        chsh: chsh_value(&table).s,
        no_signaling: no_signaling(&table, tol),
        constraint_ok: table.satisfies_pr_constraint(tol),
    }
}

/// Evaluates the PR hidden-variable model at each distribution.
pub fn lambda_sweep(dists: &[LambdaDist], tol: Tolerance, exec: Execution) -> Vec<SweepPoint> {
    exec.map_slice(dists, |&d| sweep_point(d, tol))
}

/// `start, start + step, …` up to `stop` inclusive, for use as `p0` values.
pub fn p0_grid(start: f64, stop: f64, step: f64) -> Result<Vec<LambdaDist>> {
    if !(step.is_finite() && step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::InvalidGrid { start, stop, step });
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n)
        .map(|i| LambdaDist::from_p0(start + i as f64 * step))
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("p0,chsh,no_signaling,constraint_ok\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.dist.p0,
            p.chsh,
            p.no_signaling.status().as_str(),
            p.constraint_ok
        ));
    }
    out
}
