//! Seeded Monte Carlo sampling of boxes and hidden-variable models.
//!
//! Trials are allocated per setting pair. The pair `(x, y)` draws from its
//! own stream `k = 2x + y`: a xoshiro256** generator seeded from `seed`
//! through SplitMix64, then advanced by `k` calls to the 2^128 jump. Each
//! draw takes one 64-bit output `u64` and maps it to `[0, 1)` as
//! `(u64 >> 11) · 2^-53`.
//!
//! * Box sampling picks the first `(a, b)` in order (0,0), (0,1), (1,0),
//!   (1,1) whose cumulative probability exceeds the uniform draw.
//! * HV sampling sets `λ = 0` when the uniform draw is below `P(λ=0)` and
//!   `λ = 1` otherwise, then applies the response functions.
//!
//! Streams are independent, so the four pairs may run concurrently; the
//! result is identical to running them in sequence.

use serde::Serialize;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::chsh::{chsh_value, ChshResult};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hidden_variable::HvModel;
use crate::table::{cell_indices, BoxTable, Outcome, Setting};

/// `(bits >> 11) · 2^-53`, a double in `[0, 1)`.
pub fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Generator for setting pair `stream` (0..4).
pub fn stream_rng(seed: u64, stream: usize) -> Xoshiro256StarStar {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    for _ in 0..stream {
        rng.jump();
    }
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleRecord {
    pub x: Setting,
    pub y: Setting,
    pub a: Outcome,
    pub b: Outcome,
    pub lambda: Option<u8>,
}

pub type Counts = [[[[u64; 2]; 2]; 2]; 2];

/// Outcome counts per setting pair, with the seed that produced them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmpiricalTable {
    /// `counts[x][y][a][b]`.
    pub counts: Counts,
    /// `trials[x][y]`.
    pub trials: [[u64; 2]; 2],
    pub seed: u64,
}

impl EmpiricalTable {
    pub fn from_counts(counts: Counts, seed: u64) -> Self {
        let mut trials = [[0; 2]; 2];
        for (x, row) in counts.iter().enumerate() {
            for (y, cell) in row.iter().enumerate() {
                trials[x][y] = cell.iter().flatten().sum();
            }
        }
        Self {
            counts,
            trials,
            seed,
        }
    }

    pub fn count(&self, x: Setting, y: Setting, a: Outcome, b: Outcome) -> u64 {
        self.counts[x.index()][y.index()][a.index()][b.index()]
    }

    pub fn trials(&self, x: Setting, y: Setting) -> u64 {
        self.trials[x.index()][y.index()]
    }

    fn check_trials(&self) -> Result<()> {
        for x in Setting::ALL {
            for y in Setting::ALL {
                if self.trials(x, y) == 0 {
                    return Err(Error::InsufficientTrials {
                        x: x.index(),
                        y: y.index(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Relative frequencies as a table.
    pub fn frequencies(&self) -> Result<BoxTable> {
        self.check_trials()?;
        Ok(BoxTable::from_fn(
            format!("empirical(seed={})", self.seed),
            |x, y, a, b| self.count(x, y, a, b) as f64 / self.trials(x, y) as f64,
        ))
    }

    /// `x,y,a,b,count` rows in lexicographic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,a,b,count\n");
        for (x, y, a, b) in cell_indices() {
            out.push_str(&format!("{x},{y},{a},{b},{}\n", self.count(x, y, a, b)));
        }
        out
    }
}

fn draw_cell(p: &[[f64; 2]; 2], u: f64) -> (Outcome, Outcome) {
    let mut cum = 0.0;
    let mut last_positive = (Outcome::ZERO, Outcome::ZERO);
    for a in Outcome::ALL {
        for b in Outcome::ALL {
            let w = p[a.index()][b.index()];
            if w > 0.0 {
                cum += w;
                last_positive = (a, b);
                if u < cum {
                    return (a, b);
                }
            }
        }
    }
    // Row sums slightly below one can leave `u` past the last boundary.
    last_positive
}

trait Source: Sync {
    fn draw(&self, x: Setting, y: Setting, rng: &mut Xoshiro256StarStar) -> SampleRecord;
}

impl Source for BoxTable {
    fn draw(&self, x: Setting, y: Setting, rng: &mut Xoshiro256StarStar) -> SampleRecord {
        let u = unit_interval(rng.next_u64());
        let (a, b) = draw_cell(&self.probabilities()[x.index()][y.index()], u);
        SampleRecord {
            x,
            y,
            a,
            b,
            lambda: None,
        }
    }
}

impl Source for HvModel {
    fn draw(&self, x: Setting, y: Setting, rng: &mut Xoshiro256StarStar) -> SampleRecord {
        let u = unit_interval(rng.next_u64());
        let lambda = if u < self.dist().p0() { 0 } else { 1 };
        let (a, b) = self.respond(x, y, lambda);
        SampleRecord {
            x,
            y,
            a,
            b,
            lambda: Some(lambda),
        }
    }
}

fn pair(k: usize) -> (Setting, Setting) {
    (
        Setting::from_bool(k >> 1 == 1),
        Setting::from_bool(k & 1 == 1),
    )
}

fn sample_counts(
    src: &impl Source,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<EmpiricalTable> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let rows = exec.map_indexed(4, |k| {
        let (x, y) = pair(k);
        let mut rng = stream_rng(seed, k);
        let mut row = [[0u64; 2]; 2];
        for _ in 0..trials {
            let r = src.draw(x, y, &mut rng);
            row[r.a.index()][r.b.index()] += 1;
        }
        row
    });
    let mut counts = [[[[0; 2]; 2]; 2]; 2];
    for (k, row) in rows.into_iter().enumerate() {
        let (x, y) = pair(k);
        counts[x.index()][y.index()] = row;
    }
    Ok(EmpiricalTable::from_counts(counts, seed))
}

fn sample_records(src: &impl Source, trials: u64, seed: u64) -> Result<Vec<SampleRecord>> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let mut out = Vec::with_capacity(4 * trials as usize);
    for k in 0..4 {
        let (x, y) = pair(k);
        let mut rng = stream_rng(seed, k);
        out.extend((0..trials).map(|_| src.draw(x, y, &mut rng)));
    }
    Ok(out)
}

/// Draws `trials` outcome pairs from `t` for each setting pair.
pub fn sample_box(t: &BoxTable, trials: u64, seed: u64, exec: Execution) -> Result<EmpiricalTable> {
    sample_counts(t, trials, seed, exec)
}

/// Draws `λ` then applies the model's responses, `trials` times per pair.
pub fn sample_hv(m: &HvModel, trials: u64, seed: u64, exec: Execution) -> Result<EmpiricalTable> {
    sample_counts(m, trials, seed, exec)
}

/// The individual draws behind [`sample_box`], grouped by setting pair.
pub fn sample_box_records(t: &BoxTable, trials: u64, seed: u64) -> Result<Vec<SampleRecord>> {
    sample_records(t, trials, seed)
}

/// The individual draws behind [`sample_hv`], including `λ`.
pub fn sample_hv_records(m: &HvModel, trials: u64, seed: u64) -> Result<Vec<SampleRecord>> {
    sample_records(m, trials, seed)
}

/// Header `x,y,lambda,a,b`; `lambda` is blank for box sampling.
pub fn records_csv(records: &[SampleRecord]) -> String {
    let mut out = String::from("x,y,lambda,a,b\n");
    for r in records {
        let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", r.x, r.y, lambda, r.a, r.b));
    }
    out
}

/// CHSH on relative frequencies.
pub fn empirical_chsh(e: &EmpiricalTable) -> Result<ChshResult> {
    Ok(chsh_value(&e.frequencies()?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub linf: f64,
    /// Empirical frequency minus exact probability, `[x][y][a][b]`.
    pub per_cell: [[[[f64; 2]; 2]; 2]; 2],
}

pub fn compare(e: &EmpiricalTable, t: &BoxTable) -> Result<Comparison> {
    let freq = e.frequencies()?;
    let mut per_cell = [[[[0.0; 2]; 2]; 2]; 2];
    let mut linf: f64 = 0.0;
    for (x, y, a, b, f) in freq.cells() {
        let d = f - t.prob(x, y, a, b);
        per_cell[x.index()][y.index()][a.index()][b.index()] = d;
        linf = linf.max(d.abs());
    }
    Ok(Comparison { linf, per_cell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hidden_variable::{pr_hv_model, LambdaDist};
    use crate::table::{deterministic_local_box, pr_box, pr_relation, LocalStrategy};

    #[test]
    fn unit_interval_bounds() {
        assert_eq!(unit_interval(0), 0.0);
        assert!(unit_interval(u64::MAX) < 1.0);
        assert_eq!(unit_interval(1 << 63), 0.5);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: Vec<u64> = (0..4).map(|k| stream_rng(7, k).next_u64()).collect();
        let b: Vec<u64> = (0..4).map(|k| stream_rng(7, k).next_u64()).collect();
        assert_eq!(a, b);
        let unique: std::collections::HashSet<_> = a.iter().collect();
        assert_eq!(unique.len(), 4);
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(
            sample_box(&pr_box(), 0, 1, Execution::Sequential),
            Err(Error::NoTrials)
        );
    }

    #[test]
    fn pr_samples_respect_relation() {
        let recs = sample_box_records(&pr_box(), 2000, 99).unwrap();
        assert_eq!(recs.len(), 8000);
        assert!(recs
            .iter()
            .all(|r| pr_relation(r.x, r.y, r.a, r.b) && r.lambda.is_none()));
    }

    #[test]
    fn records_agree_with_counts() {
        let m = pr_hv_model(LambdaDist::from_p0(0.3).unwrap());
        let recs = sample_hv_records(&m, 500, 5).unwrap();
        let mut counts = [[[[0u64; 2]; 2]; 2]; 2];
        for r in &recs {
            counts[r.x.index()][r.y.index()][r.a.index()][r.b.index()] += 1;
        }
        let e = sample_hv(&m, 500, 5, Execution::default()).unwrap();
        assert_eq!(e.counts, counts);
    }

    #[test]
    fn point_mass_sampling() {
        let strat = LocalStrategy::from_code(0b1011);
        let t = deterministic_local_box(strat);
        let e = sample_box(&t, 100, 3, Execution::default()).unwrap();
        for x in Setting::ALL {
            for y in Setting::ALL {
                assert_eq!(e.count(x, y, strat.f[x.index()], strat.g[y.index()]), 100);
            }
        }
        assert_eq!(compare(&e, &t).unwrap().linf, 0.0);
    }

    #[test]
    fn deterministic_hv_uses_lambda_zero() {
        let m = pr_hv_model(LambdaDist::from_p0(1.0).unwrap());
        for r in sample_hv_records(&m, 200, 17).unwrap() {
            assert_eq!(r.lambda, Some(0));
            assert_eq!((r.a, r.b), m.respond(r.x, r.y, 0));
        }
    }

    #[test]
    fn empirical_chsh_errors_on_empty_pair() {
        let mut counts = [[[[1u64, 0], [0, 0]]; 2]; 2];
        assert_eq!(
            empirical_chsh(&EmpiricalTable::from_counts(counts, 0))
                .unwrap()
                .s,
            2.0
        );
        counts[1][0] = [[0, 0], [0, 0]];
        assert_eq!(
            empirical_chsh(&EmpiricalTable::from_counts(counts, 0)),
            Err(Error::InsufficientTrials { x: 1, y: 0 })
        );
    }

    #[test]
    fn draw_cell_skips_zero_weights() {
        let row = [[0.0, 0.5], [0.5, 0.0]];
        assert_eq!(draw_cell(&row, 0.0), (Outcome::ZERO, Outcome::ONE));
        assert_eq!(draw_cell(&row, 0.5), (Outcome::ONE, Outcome::ZERO));
        let short = [[0.5, 0.0], [0.0, 0.5 - 1e-12]];
        assert_eq!(draw_cell(&short, 1.0 - 1e-15), (Outcome::ONE, Outcome::ONE));
    }

    #[test]
    fn csv_layouts() {
        let e = EmpiricalTable::from_counts([[[[3, 0], [0, 1]]; 2]; 2], 0);
        let csv = e.to_csv();
        assert!(csv.starts_with("x,y,a,b,count\n0,0,0,0,3\n0,0,0,1,0\n"));
        assert_eq!(csv.lines().count(), 17);

        let recs = sample_box_records(&pr_box(), 1, 0).unwrap();
        let csv = records_csv(&recs);
        assert!(csv.starts_with("x,y,lambda,a,b\n0,0,,"));
    }
}
