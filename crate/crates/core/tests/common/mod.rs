#![allow(dead_code)]

/// The generator used by `tests/oracle/generate.py`, so both sides see
/// bit-identical inputs.
pub fn lcg_uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Box-Muller on LCG pairs.
pub fn lcg_normal(n: usize, seed: u64) -> Vec<f64> {
    let u = lcg_uniform(2 * n, seed);
    u.chunks(2)
        .map(|p| (-2.0 * (1.0 - p[0]).ln()).sqrt() * (std::f64::consts::TAU * p[1]).cos())
        .collect()
}

pub fn cumsum(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol * want.abs().max(1.0),
        "{what}: got {got}, want {want} (tol {tol})"
    );
}
