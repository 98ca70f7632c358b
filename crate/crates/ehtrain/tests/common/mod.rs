//! Independent oracles for the acceptance suite. Everything here is built
//! from first principles — adaptive quadrature and grid dynamic
//! programming — sharing no code or algorithms with the library under
//! test.

/// Adaptive Simpson quadrature of `f` over `[a, b]` with a relative
/// accuracy target (Richardson-corrected, depth-capped).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson_step(&f, a, fa, b, fb);
    let eps = rel_tol * whole.abs().max(1e-300);
    adapt(&f, a, fa, m, fm, b, fb, whole, eps, 60)
}

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson_step(f, a, fa, m, fm);
    let (rm, frm, right) = simpson_step(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * eps, depth - 1)
        + adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * eps, depth - 1)
}

/// Exponent beyond which `e^-t` is below every positive f64.
const EXP_FLOOR: f64 = 745.0;

/// `E1(x) = ∫_x^∞ e^-t / t dt`, via the substitution `t = e^s`, which turns
/// the integrand into the bounded, smooth `exp(-e^s)`:
/// `E1(x) = ∫_{ln x}^∞ exp(-e^s) ds`.
pub fn oracle_e1(x: f64) -> f64 {
    integrate(|s| (-s.exp()).exp(), x.ln(), EXP_FLOOR.ln(), 1e-12)
}

/// `e^x·E1(x) = ∫_0^∞ exp(-x·(e^u - 1)) du`, truncated where the argument
/// reaches the underflow floor. `exp_m1` keeps the argument accurate for
/// tiny `x` (huge `u`) and tiny `u` alike.
pub fn oracle_exp_e1(x: f64) -> f64 {
    let hi = (1.0 + EXP_FLOOR / x).ln();
    integrate(|u| (-x * u.exp_m1()).exp(), 0.0, hi, 1e-12)
}

/// Brute-force water-filling oracle on a consumption grid.
///
/// Maximizes `Σ log(1 + spent_l)` (unit slot duration) over per-slot
/// energy spends that are multiples of `1/step_inv`, subject to prefix
/// feasibility against `energies` and exact terminal exhaustion. Arrival
/// values must be grid-representable. Returns the per-slot spends.
pub fn dp_waterfill_oracle(energies: &[f64], step_inv: usize) -> Vec<f64> {
    let n = energies.len();
    let mut caps = Vec::with_capacity(n);
    let mut acc = 0usize;
    for &e in energies {
        let units = e * step_inv as f64;
        assert!(
            (units - units.round()).abs() < 1e-6,
            "arrival {e} is not representable on the grid"
        );
        acc += units.round() as usize;
        caps.push(acc);
    }
    let total = *caps.last().expect("at least one slot");

    let log_table: Vec<f64> = (0..=total)
        .map(|u| (1.0 + u as f64 / step_inv as f64).ln())
        .collect();

    // value[e] = best objective spending exactly e units so far;
    // choice[k][e] = units spent in slot k on the best path to e.
    let mut value = vec![f64::NEG_INFINITY; total + 1];
    value[0] = 0.0;
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut prev_cap = 0usize;
    for &cap in &caps {
        let mut next = vec![f64::NEG_INFINITY; cap + 1];
        let mut pick = vec![0u32; cap + 1];
        for e_prev in 0..=prev_cap {
            let base = value[e_prev];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for e_new in e_prev..=cap {
                let v = base + log_table[e_new - e_prev];
                if v > next[e_new] {
                    next[e_new] = v;
                    pick[e_new] = (e_new - e_prev) as u32;
                }
            }
        }
        choice.push(pick);
        value = next;
        prev_cap = cap;
    }

    let mut spends = vec![0.0; n];
    let mut e = total;
    for k in (0..n).rev() {
        let u = choice[k][e] as usize;
        spends[k] = u as f64 / step_inv as f64;
        e -= u;
    }
    assert_eq!(e, 0, "backtrack must consume the full budget");
    spends
}
