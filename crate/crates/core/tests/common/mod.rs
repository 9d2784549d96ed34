//! Brute-force search oracle shared by the integration tests.

use grnn_qos::search;
use grnn_qos::verify::Instance;
use grnn_qos::{Allocation, Grnn};

/// Brute-force reference: materialize every grid point by recursion,
/// evaluate the kernel-weighted mean directly, filter members, sort by the
/// documented keys.
pub fn oracle(
    delta: f64,
    max_steps: &[usize],
    records: &[(Vec<f64>, u32)],
    sigma2: f64,
    target: u32,
) -> (Vec<f64>, bool) {
    fn expand(max_steps: &[usize], prefix: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == max_steps.len() {
            out.push(prefix);
            return;
        }
        for c in 0..=max_steps[prefix.len()] {
            let mut next = prefix.clone();
            next.push(c);
            expand(max_steps, next, out);
        }
    }
    let mut counts = Vec::new();
    expand(max_steps, Vec::new(), &mut counts);

    let y_star = |x: &[f64]| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (xi, yi) in records {
            let mut d = 0.0;
            for k in 0..x.len() {
                d += (x[k] - xi[k]) * (x[k] - xi[k]);
            }
            let w = (-d / sigma2).exp();
            num += *yi as f64 * w;
            den += w;
        }
        num / den
    };

    // (step sum, y*, enumeration index, point)
    let mut rows: Vec<(usize, f64, usize, Vec<f64>)> = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let x: Vec<f64> = c.iter().map(|&s| s as f64 * delta).collect();
            (c.iter().sum(), y_star(&x), i, x)
        })
        .collect();

    let mut members: Vec<_> = rows.iter().filter(|r| r.1 >= target as f64 - 0.5).cloned().collect();
    if !members.is_empty() {
        members.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        return (members.swap_remove(0).3, true);
    }
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.cmp(&b.2)));
    (rows.swap_remove(0).3, false)
}

/// Compares `search` with the oracle on `inst`. Returns whether the instance
/// had a feasible point, or a description of the first disagreement.
pub fn check(inst: &Instance) -> Result<bool, String> {
    let records: Vec<(Vec<f64>, u32)> = inst
        .profile
        .records()
        .iter()
        .map(|r| (r.allocation.as_slice().to_vec(), r.response))
        .collect();
    let (want, feasible) = oracle(
        inst.grid.delta(),
        inst.grid.max_steps(),
        &records,
        inst.kernel.sigma2(),
        inst.target,
    );
    let got = search(&inst.grid, &inst.profile, &Grnn::new(inst.kernel), inst.target).unwrap();
    if got.allocation != Allocation::new(want.clone()) || got.feasible_found != feasible {
        return Err(format!(
            "search gave {} (feasible {}), oracle {:?} (feasible {feasible}) on {inst:?}",
            got.allocation, got.feasible_found, want
        ));
    }
    if got.evaluated != inst.grid.cardinality() {
        return Err(format!("evaluated {} of {} points", got.evaluated, inst.grid.cardinality()));
    }
    Ok(feasible)
}
