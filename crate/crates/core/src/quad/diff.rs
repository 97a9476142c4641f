/// Finite-difference stencil. `Forward` only samples `x` and points to its
/// right, for use at the inner boundary of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central,
    Forward,
}

/// First or second derivative of `f` at `x` by central differences with
/// Richardson extrapolation, using a step proportional to `max(1, |x|)`.
pub fn derivative<F: Fn(f64) -> f64>(f: F, x: f64, order: u8) -> f64 {
    let scale = x.abs().max(1.0);
    let h = match order {
        1 => 1e-2 * scale,
        _ => 2e-2 * scale,
    };
    derivative_with(f, x, order, h, Stencil::Central)
}

/// Richardson-extrapolated difference quotient with initial step `h`,
/// halved at each tableau level.
///
/// Only orders 1 and 2 are supported.
pub fn derivative_with<F: Fn(f64) -> f64>(f: F, x: f64, order: u8, h: f64, stencil: Stencil) -> f64 {
    assert!(order == 1 || order == 2, "derivative order must be 1 or 2");
    let (levels, ratio): (usize, f64) = match (stencil, order) {
        (Stencil::Central, 1) => (4, 4.0),
        (Stencil::Central, _) => (3, 4.0),
        (Stencil::Forward, 1) => (5, 2.0),
        (Stencil::Forward, _) => (5, 2.0),
    };

    let quotient = |step: f64| -> f64 {
        match (stencil, order) {
            (Stencil::Central, 1) => (f(x + step) - f(x - step)) / (2.0 * step),
            (Stencil::Central, _) => (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step),
            (Stencil::Forward, 1) => (f(x + step) - f(x)) / step,
            (Stencil::Forward, _) => (f(x + 2.0 * step) - 2.0 * f(x + step) + f(x)) / (step * step),
        }
    };

    // Neville tableau; each column removes the next power of the step from
    // the error expansion (even powers for central, all powers for forward).
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut step = h;
    for k in 0..levels {
        let mut row = Vec::with_capacity(k + 1);
        row.push(quotient(step));
        let mut factor = 1.0;
        for j in 1..=k {
            factor *= ratio;
            let prev = table[k - 1][j - 1];
            let here = row[j - 1];
            row.push(here + (here - prev) / (factor - 1.0));
        }
        table.push(row);
        step *= 0.5;
    }
    table[levels - 1][levels - 1]
}
