//! Inputs shared by the benchmarks.

use cassl_core::env::{SyntheticGrasp, SyntheticGraspSpec};
use cassl_core::pipeline::collect_initial;
use cassl_core::{Dataset, Environment, SaltelliDesign, SensitivityReport};

/// A report over `k` dimensions with smoothly varying indices and a dense
/// pair matrix, so the curriculum search has no early ties to exploit.
pub fn smooth_report(k: usize) -> SensitivityReport {
    let s1: Vec<f64> = (0..k)
        .map(|i| 0.05 + 0.4 * ((i as f64 + 1.0) * 0.7).sin().abs() / k as f64)
        .collect();
    let st: Vec<f64> = s1
        .iter()
        .enumerate()
        .map(|(i, a)| a + 0.02 * (i % 3 + 1) as f64)
        .collect();
    let s2 = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    (i != j)
                        .then(|| 0.01 * (((i * k + j) as f64).cos() + ((j * k + i) as f64).cos()))
                })
                .collect()
        })
        .collect();
    SensitivityReport::new(
        (0..k).map(|i| format!("x{i}")).collect(),
        s1,
        st,
        s2,
        1.0,
        64,
    )
    .unwrap()
}

/// The initial Saltelli data on the six-dimension grasp environment.
pub fn grasp_initial(n_base: usize, seed: u64) -> (SyntheticGrasp, SaltelliDesign, Dataset) {
    let env = SyntheticGrasp::new(SyntheticGraspSpec::tabletop_6d()).unwrap();
    let design = SaltelliDesign::new(6, n_base, true).unwrap();
    let data = collect_initial(&env, env.space(), &design, seed).unwrap();
    (env, design, data)
}
