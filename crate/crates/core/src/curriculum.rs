//! Sensitivity-driven curriculum over control dimensions.
//!
//! Stages are chosen greedily: among the dimensions not yet scheduled, pick
//! the non-empty subset with the lowest energy
//!
//! ```text
//! E(Ψ) = Σ_{i∈Ψ} (st_i − s1_i) + Σ_{i∈Ψ} Σ_{j∈Ω∖Ψ} |s2_ij|
//! ```
//!
//! where `Ω` is the set of remaining dimensions, then remove it and repeat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensitivity::SensitivityReport;

/// Energies closer than this are ties.
pub const ENERGY_TIE: f64 = 1e-12;

/// Upper bound on dimensions for subset enumeration.
pub const MAX_DIMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curriculum {
    pub stages: Vec<Vec<usize>>,
    pub flat_order: Vec<usize>,
}

impl Curriculum {
    /// Builds a curriculum from stages, ordering each stage by descending `s1`
    /// (ties by lower index).
    pub fn from_stages(stages: Vec<Vec<usize>>, s1: &[f64]) -> Result<Self> {
        let mut stages = stages;
        for st in stages.iter_mut() {
            st.sort_unstable();
        }
        let mut flat_order = Vec::new();
        for st in &stages {
            let mut ordered = st.clone();
            ordered.sort_by(|&a, &b| s1[b].total_cmp(&s1[a]).then(a.cmp(&b)));
            flat_order.extend(ordered);
        }
        let c = Self { stages, flat_order };
        c.validate(s1.len())?;
        Ok(c)
    }

    /// One stage per dimension, in the given order.
    pub fn singletons(order: &[usize]) -> Result<Self> {
        let c = Self {
            stages: order.iter().map(|&i| vec![i]).collect(),
            flat_order: order.to_vec(),
        };
        c.validate(order.len())?;
        Ok(c)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let mut seen = vec![false; k];
        let mut count = 0;
        for st in &self.stages {
            if st.is_empty() {
                return Err(Error::param("curriculum stage is empty"));
            }
            for &i in st {
                if i >= k || seen[i] {
                    return Err(Error::param(format!(
                        "dimension {i} missing or repeated in curriculum"
                    )));
                }
                seen[i] = true;
                count += 1;
            }
        }
        if count != k {
            return Err(Error::param(format!(
                "curriculum covers {count} of {k} dimensions"
            )));
        }
        let flat: Vec<usize> = self.stages.iter().flatten().copied().collect();
        let mut a = flat.clone();
        let mut b = self.flat_order.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b || self.flat_order.len() != k {
            return Err(Error::param(
                "flat order is not a permutation of the stages",
            ));
        }
        let mut pos = 0;
        for st in &self.stages {
            let mut chunk = self.flat_order[pos..pos + st.len()].to_vec();
            chunk.sort_unstable();
            if &chunk != st {
                return Err(Error::param("flat order is inconsistent with stage order"));
            }
            pos += st.len();
        }
        Ok(())
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    /// Stage index (0-based) of each dimension.
    pub fn stage_of(&self) -> Vec<usize> {
        let k = self.flat_order.len();
        let mut out = vec![0; k];
        for (s, st) in self.stages.iter().enumerate() {
            for &i in st {
                out[i] = s;
            }
        }
        out
    }
}

fn validate_set(set: &[usize], k: usize, what: &str) -> Result<()> {
    for (n, &i) in set.iter().enumerate() {
        if i >= k {
            return Err(Error::param(format!(
                "{what} contains out-of-range dimension {i}"
            )));
        }
        if set[..n].contains(&i) {
            return Err(Error::param(format!("{what} repeats dimension {i}")));
        }
    }
    Ok(())
}

/// Energy of choosing `candidate` out of `remaining`.
pub fn energy(candidate: &[usize], remaining: &[usize], report: &SensitivityReport) -> Result<f64> {
    let k = report.k();
    validate_set(candidate, k, "candidate")?;
    validate_set(remaining, k, "remaining set")?;
    if candidate.is_empty() {
        return Err(Error::param("candidate subset is empty"));
    }
    if let Some(i) = candidate.iter().find(|i| !remaining.contains(i)) {
        return Err(Error::param(format!(
            "candidate dimension {i} is not in the remaining set"
        )));
    }
    Ok(mask_energy(to_mask(candidate), to_mask(remaining), report))
}

fn to_mask(set: &[usize]) -> u32 {
    set.iter().fold(0, |m, &i| m | (1 << i))
}

fn from_mask(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

fn mask_energy(psi: u32, omega: u32, report: &SensitivityReport) -> f64 {
    let rest = omega & !psi;
    let mut e = 0.0;
    for i in from_mask(psi) {
        e += report.st[i] - report.s1[i];
        for j in from_mask(rest) {
            e += report.s2(i, j).abs();
        }
    }
    e
}

/// Tie order among equal-energy subsets: fewer dimensions, then larger total
/// first-order index, then the lexicographically smaller index list.
fn tie_better(a: u32, b: u32, report: &SensitivityReport) -> bool {
    let (ca, cb) = (a.count_ones(), b.count_ones());
    if ca != cb {
        return ca < cb;
    }
    let sum = |m: u32| from_mask(m).iter().map(|&i| report.s1[i]).sum::<f64>();
    let (sa, sb) = (sum(a), sum(b));
    if sa != sb {
        return sa > sb;
    }
    from_mask(a) < from_mask(b)
}

/// One greedy step of curriculum construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub remaining: Vec<usize>,
    pub chosen: Vec<usize>,
    pub energy: f64,
    /// Energy of every remaining dimension as a singleton stage.
    pub singletons: Vec<(usize, f64)>,
}

pub fn build_curriculum(report: &SensitivityReport) -> Result<Curriculum> {
    build_curriculum_traced(report).map(|(c, _)| c)
}

pub fn build_curriculum_traced(
    report: &SensitivityReport,
) -> Result<(Curriculum, Vec<StageTrace>)> {
    let k = report.k();
    if k > MAX_DIMS {
        return Err(Error::Capability(format!(
            "curriculum enumeration supports at most {MAX_DIMS} dimensions, got {k}"
        )));
    }
    let mut remaining: u32 = (1u32 << k) - 1;
    let mut stages = Vec::new();
    let mut trace = Vec::new();
    while remaining != 0 {
        let mut best: Option<(u32, f64)> = None;
        let mut sub = remaining;
        while sub != 0 {
            let e = mask_energy(sub, remaining, report);
            best = match best {
                None => Some((sub, e)),
                Some((_, be)) if e < be - ENERGY_TIE => Some((sub, e)),
                Some((b, be)) if (e - be).abs() <= ENERGY_TIE && tie_better(sub, b, report) => {
                    Some((sub, e))
                }
                keep => keep,
            };
            sub = (sub - 1) & remaining;
        }
        let (chosen, e) = best.expect("remaining set is non-empty");
        trace.push(StageTrace {
            remaining: from_mask(remaining),
            chosen: from_mask(chosen),
            energy: e,
            singletons: from_mask(remaining)
                .into_iter()
                .map(|i| (i, mask_energy(1 << i, remaining, report)))
                .collect(),
        });
        stages.push(from_mask(chosen));
        remaining &= !chosen;
    }
    Ok((Curriculum::from_stages(stages, &report.s1)?, trace))
}

/// Straightforward exhaustive re-implementation of [`build_curriculum`],
/// independent of its bitmask enumeration, for cross-checking.
#[cfg(any(test, feature = "oracle"))]
pub mod oracle {
    use super::*;

    fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![vec![]];
        for &x in items {
            let with: Vec<Vec<usize>> = out
                .iter()
                .map(|s| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
                .collect();
            out.extend(with);
        }
        out.retain(|s| !s.is_empty());
        out
    }

    fn plain_energy(psi: &[usize], omega: &[usize], r: &SensitivityReport) -> f64 {
        let mut e = 0.0;
        for &i in psi {
            e += r.st[i] - r.s1[i];
            for &j in omega {
                if !psi.contains(&j) {
                    e += r.s2(i, j).abs();
                }
            }
        }
        e
    }

    pub fn oracle_curriculum(report: &SensitivityReport) -> Curriculum {
        let mut remaining: Vec<usize> = (0..report.k()).collect();
        let mut stages = Vec::new();
        while !remaining.is_empty() {
            let mut scored: Vec<(Vec<usize>, f64)> = subsets(&remaining)
                .into_iter()
                .map(|mut s| {
                    s.sort_unstable();
                    let e = plain_energy(&s, &remaining, report);
                    (s, e)
                })
                .collect();
            let min = scored.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
            scored.retain(|(_, e)| *e - min <= ENERGY_TIE);
            scored.sort_by(|(a, _), (b, _)| {
                let sa: f64 = a.iter().map(|&i| report.s1[i]).sum();
                let sb: f64 = b.iter().map(|&i| report.s1[i]).sum();
                // numeric comparison: -0.0 and 0.0 are the same sum
                let by_sum = sb.partial_cmp(&sa).expect("finite indices");
                a.len().cmp(&b.len()).then(by_sum).then(a.cmp(b))
            });
            let chosen = scored.swap_remove(0).0;
            remaining.retain(|i| !chosen.contains(i));
            stages.push(chosen);
        }
        let mut flat_order = Vec::new();
        for st in &stages {
            let mut o = st.clone();
            o.sort_by(|&a, &b| report.s1[b].total_cmp(&report.s1[a]).then(a.cmp(&b)));
            flat_order.extend(o);
        }
        Curriculum { stages, flat_order }
    }
}
