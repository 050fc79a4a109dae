//! Variance-based (Sobol) sensitivity indices from Saltelli designs.
//!
//! First order uses the Saltelli (2010) estimator, total order the Jansen
//! estimator, second order the cross-matrix estimator built from the `BA_i`
//! blocks, averaged over both orderings of the pair so that it is symmetric.
//! Outputs are standardized before estimation so that indices are invariant
//! to affine rescaling of the output. Negative estimates are kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sobol::{Block, SaltelliDesign};
use crate::space::ControlSpace;

/// Square matrix with `None` on the diagonal (and everywhere when second-order
/// indices were not estimated).
pub type PairMatrix = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReport")]
pub struct SensitivityReport {
    pub dims: Vec<String>,
    pub s1: Vec<f64>,
    pub st: Vec<f64>,
    pub s2: PairMatrix,
    pub var_y: f64,
    pub n_base: usize,
}

#[derive(Deserialize)]
struct RawReport {
    dims: Vec<String>,
    s1: Vec<f64>,
    st: Vec<f64>,
    s2: PairMatrix,
    var_y: f64,
    n_base: usize,
}

impl TryFrom<RawReport> for SensitivityReport {
    type Error = Error;

    fn try_from(r: RawReport) -> Result<Self> {
        SensitivityReport::new(r.dims, r.s1, r.st, r.s2, r.var_y, r.n_base)
    }
}

impl SensitivityReport {
    pub fn new(
        dims: Vec<String>,
        s1: Vec<f64>,
        st: Vec<f64>,
        s2: PairMatrix,
        var_y: f64,
        n_base: usize,
    ) -> Result<Self> {
        let k = s1.len();
        if k == 0 {
            return Err(Error::param(
                "sensitivity report needs at least one dimension",
            ));
        }
        for (what, len) in [
            ("st", st.len()),
            ("dims", dims.len()),
            ("s2 rows", s2.len()),
        ] {
            if len != k {
                return Err(Error::Shape {
                    what: match what {
                        "st" => "total-order vector",
                        "dims" => "dimension names",
                        _ => "second-order matrix",
                    },
                    expected: k,
                    found: len,
                });
            }
        }
        if !(var_y.is_finite() && var_y > 0.0) {
            return Err(Error::DegenerateVariance);
        }
        if s1.iter().chain(&st).any(|v| !v.is_finite()) {
            return Err(Error::param("sensitivity indices must be finite"));
        }
        for (i, row) in s2.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Shape {
                    what: "second-order matrix row",
                    expected: k,
                    found: row.len(),
                });
            }
            if row[i].is_some() {
                return Err(Error::param("second-order diagonal must be empty"));
            }
            for (j, v) in row.iter().enumerate() {
                if let Some(x) = v {
                    if !x.is_finite() {
                        return Err(Error::param("second-order indices must be finite"));
                    }
                }
                if *v != s2[j][i] {
                    return Err(Error::param(format!(
                        "second-order matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            dims,
            s1,
            st,
            s2,
            var_y,
            n_base,
        })
    }

    pub fn k(&self) -> usize {
        self.s1.len()
    }

    /// Second-order index for a pair; zero when it was not estimated.
    pub fn s2(&self, i: usize, j: usize) -> f64 {
        self.s2[i][j].unwrap_or(0.0)
    }

    pub fn has_second_order(&self) -> bool {
        self.k() < 2 || self.s2.iter().flatten().any(Option::is_some)
    }

    /// Reorders dimensions so that new index `p` holds old index `perm[p]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.k();
        assert_eq!(perm.len(), k);
        Self {
            dims: perm.iter().map(|&i| self.dims[i].clone()).collect(),
            s1: perm.iter().map(|&i| self.s1[i]).collect(),
            st: perm.iter().map(|&i| self.st[i]).collect(),
            s2: (0..k)
                .map(|p| (0..k).map(|q| self.s2[perm[p]][perm[q]]).collect())
                .collect(),
            var_y: self.var_y,
            n_base: self.n_base,
        }
    }
}

fn block_starts(design: &SaltelliDesign) -> (usize, usize, Vec<usize>, Vec<usize>) {
    let k = design.dimension();
    let a = design.block_range(Block::A).start;
    let b = design.block_range(Block::B).start;
    let ab = (0..k)
        .map(|i| design.block_range(Block::AB(i)).start)
        .collect();
    let ba = if design.second_order() {
        (0..k)
            .map(|i| design.block_range(Block::BA(i)).start)
            .collect()
    } else {
        Vec::new()
    };
    (a, b, ab, ba)
}

struct Indices {
    s1: Vec<f64>,
    st: Vec<f64>,
    s2: PairMatrix,
}

/// Estimators over the base rows in `rows` (possibly with repeats). `None` when
/// the pooled A/B variance of the selection is zero.
fn estimate(design: &SaltelliDesign, y: &[f64], rows: &[usize]) -> Option<Indices> {
    let k = design.dimension();
    let (a0, b0, ab0, ba0) = block_starts(design);
    let n = rows.len() as f64;

    let mut mean = 0.0;
    for &r in rows {
        mean += y[a0 + r] + y[b0 + r];
    }
    mean /= 2.0 * n;
    let mut var = 0.0;
    for &r in rows {
        var += (y[a0 + r] - mean).powi(2) + (y[b0 + r] - mean).powi(2);
    }
    var /= 2.0 * n;
    if var <= 0.0 {
        return None;
    }

    let mut s1 = vec![0.0; k];
    let mut st = vec![0.0; k];
    for i in 0..k {
        let (mut first, mut total) = (0.0, 0.0);
        for &r in rows {
            let (fa, fb, fab) = (y[a0 + r], y[b0 + r], y[ab0[i] + r]);
            first += fb * (fab - fa);
            total += (fa - fab).powi(2);
        }
        s1[i] = first / n / var;
        st[i] = total / n / (2.0 * var);
    }

    let mut s2 = vec![vec![None; k]; k];
    if design.second_order() {
        for i in 0..k {
            for j in (i + 1)..k {
                let mut acc = 0.0;
                for &r in rows {
                    let cross = y[ba0[i] + r] * y[ab0[j] + r] + y[ba0[j] + r] * y[ab0[i] + r];
                    acc += 0.5 * cross - y[a0 + r] * y[b0 + r];
                }
                let v = acc / n / var - s1[i] - s1[j];
                s2[i][j] = Some(v);
                s2[j][i] = Some(v);
            }
        }
    }
    Some(Indices { s1, st, s2 })
}

fn standardized(design: &SaltelliDesign, outputs: &[f64]) -> Result<Vec<f64>> {
    if outputs.len() != design.len() {
        return Err(Error::Shape {
            what: "outputs",
            expected: design.len(),
            found: outputs.len(),
        });
    }
    if outputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("outputs must be finite"));
    }
    let n = outputs.len() as f64;
    let mean = outputs.iter().sum::<f64>() / n;
    let var = outputs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let sd = var.sqrt();
    Ok(outputs.iter().map(|v| (v - mean) / sd).collect())
}

fn pooled_variance(design: &SaltelliDesign, outputs: &[f64]) -> f64 {
    let a = &outputs[design.block_range(Block::A)];
    let b = &outputs[design.block_range(Block::B)];
    let n = (a.len() + b.len()) as f64;
    let mean = a.iter().chain(b).sum::<f64>() / n;
    a.iter().chain(b).map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Sobol indices from outputs aligned with `design` rows.
pub fn analyze(design: &SaltelliDesign, outputs: &[f64]) -> Result<SensitivityReport> {
    let names = (1..=design.dimension()).map(|i| format!("x{i}")).collect();
    analyze_named(design, outputs, names)
}

fn analyze_named(
    design: &SaltelliDesign,
    outputs: &[f64],
    dims: Vec<String>,
) -> Result<SensitivityReport> {
    let y = standardized(design, outputs)?;
    let rows: Vec<usize> = (0..design.n_base()).collect();
    let idx = estimate(design, &y, &rows).ok_or(Error::DegenerateVariance)?;
    SensitivityReport::new(
        dims,
        idx.s1,
        idx.st,
        idx.s2,
        pooled_variance(design, outputs),
        design.n_base(),
    )
}

/// Sensitivity of binary trial outcomes collected once per design row, in row order.
pub fn analyze_dataset(
    space: &ControlSpace,
    design: &SaltelliDesign,
    records: &Dataset,
) -> Result<SensitivityReport> {
    if space.len() != design.dimension() {
        return Err(Error::Shape {
            what: "control space dimension",
            expected: design.dimension(),
            found: space.len(),
        });
    }
    if records.len() != design.len() {
        return Err(Error::Shape {
            what: "design-aligned records",
            expected: design.len(),
            found: records.len(),
        });
    }
    for (row, (rec, point)) in records.records().iter().zip(design.rows()).enumerate() {
        let unit = space.to_unit(&rec.action)?;
        if unit.iter().zip(point).any(|(u, p)| (u - p).abs() > 1e-9) {
            return Err(Error::Alignment { row });
        }
    }
    let outputs: Vec<f64> = records
        .records()
        .iter()
        .map(|r| f64::from(r.outcome))
        .collect();
    analyze_named(design, &outputs, space.names())
}

/// Bootstrap confidence half-widths, in the same layout as a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceIntervals {
    pub confidence: f64,
    pub s1: Vec<f64>,
    pub st: Vec<f64>,
    pub s2: PairMatrix,
}

impl ConfidenceIntervals {
    pub fn max_half_width(&self) -> f64 {
        self.s1
            .iter()
            .chain(&self.st)
            .chain(self.s2.iter().flatten().flatten())
            .fold(0.0, |m, &v| m.max(v))
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn half_width(mut samples: Vec<f64>, confidence: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    (quantile(&samples, 1.0 - tail) - quantile(&samples, tail)) / 2.0
}

/// Percentile bootstrap over base-sample indices; every block is resampled
/// with the same index draw so that rows stay aligned.
pub fn bootstrap_ci(
    design: &SaltelliDesign,
    outputs: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<ConfidenceIntervals> {
    if resamples < 100 {
        return Err(Error::param(format!(
            "bootstrap needs >= 100 resamples, got {resamples}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let y = standardized(design, outputs)?;
    let n = design.n_base();
    let k = design.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(resamples);
    let mut rows = vec![0usize; n];
    for _ in 0..resamples {
        for r in rows.iter_mut() {
            *r = rng.random_range(0..n);
        }
        if let Some(idx) = estimate(design, &y, &rows) {
            draws.push(idx);
        }
    }
    if draws.len() < 2 {
        return Err(Error::DegenerateVariance);
    }
    let collect =
        |f: &dyn Fn(&Indices) -> f64| half_width(draws.iter().map(f).collect(), confidence);
    let s1 = (0..k).map(|i| collect(&|d| d.s1[i])).collect();
    let st = (0..k).map(|i| collect(&|d| d.st[i])).collect();
    let mut s2 = vec![vec![None; k]; k];
    if design.second_order() {
        for i in 0..k {
            for j in (i + 1)..k {
                let h = collect(&|d| d.s2[i][j].unwrap_or(0.0));
                s2[i][j] = Some(h);
                s2[j][i] = Some(h);
            }
        }
    }
    Ok(ConfidenceIntervals {
        confidence,
        s1,
        st,
        s2,
    })
}
