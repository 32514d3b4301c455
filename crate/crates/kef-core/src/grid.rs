//! Evaluation grids for residual checks.

/// Logarithmically spaced points in `[a, b]`, `a > 0`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Linearly spaced points in `[a, b]`.
pub fn lin_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Symmetric log grid `±[a, b]` refined near 0 and ±1, with the kink
/// points 0 and ±1 displaced by half a local step so residual integrands
/// are never evaluated exactly on a kink.
pub fn log_symmetric(a: f64, b: f64, n_half: usize) -> Vec<f64> {
    let pos = log_spaced(a, b, n_half);
    let mut out: Vec<f64> = Vec::with_capacity(2 * n_half);
    for &z in pos.iter().rev() {
        out.push(-nudge_off_kinks(z));
    }
    for &z in pos.iter() {
        out.push(nudge_off_kinks(z));
    }
    out
}

fn nudge_off_kinks(z: f64) -> f64 {
    let mut z = z;
    if (z - 1.0).abs() < 1e-9 {
        z += 0.5e-3;
    }
    if z.abs() < 1e-12 {
        z = 1e-6;
    }
    z
}

/// Parse a grid spec of the form `"a:b:n"` (linear) or `"a:b:n|log"`.
pub fn parse_spec(spec: &str) -> Option<Vec<f64>> {
    let (range, log) = match spec.split_once('|') {
        Some((r, kind)) => (r, kind.trim() == "log"),
        None => (spec, false),
    };
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return None;
    }
    let a: f64 = parts[0].trim().parse().ok()?;
    let b: f64 = parts[1].trim().parse().ok()?;
    let n: usize = parts[2].trim().parse().ok()?;
    if n < 2 || b <= a {
        return None;
    }
    if log {
        if a <= 0.0 {
            return None;
        }
        Some(log_spaced(a, b, n))
    } else {
        Some(lin_spaced(a, b, n))
    }
}
