// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use cpfilter_core::segmodels::Nucleotide;
use cpfilter_core::simulate::gen_piecewise_gaussian;

/// Workspace `data/` directory.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// The lambda phage genome, or `None` if the file is missing.
pub fn lambda_phage() -> Option<Vec<Nucleotide>> {
    let text = std::fs::read_to_string(data_dir().join("lambda_phage.fasta")).ok()?;
    text.lines()
        .filter(|l| !l.starts_with('>'))
        .flat_map(|l| l.trim().bytes())
        .map(Nucleotide::from_ascii)
        .collect()
}

/// Piecewise Gaussian series of length `n` with a mean shift every 100 points.
pub fn shifted_series(n: usize, seed: u64) -> Vec<f64> {
    let blocks = n.div_ceil(100);
    let means: Vec<f64> = (0..blocks).map(|b| if b % 2 == 0 { 0.0 } else { 2.0 }).collect();
    let sds = vec![1.0; blocks];
    let mut lengths = vec![100; blocks];
    lengths[blocks - 1] = n - 100 * (blocks - 1);
    gen_piecewise_gaussian(&means, &sds, &lengths, seed).expect("valid simulation parameters")
}
