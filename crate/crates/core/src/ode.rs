//! Fixed-step classical Runge–Kutta integration.

use crate::scalar::Real;

/// One RK4 step of size `h` for `y' = f(t, y)`.
pub fn rk4_step<T: Real, F: FnMut(T, &[T], &mut [T])>(f: &mut F, t: T, y: &[T], h: T) -> Vec<T> {
    let n = y.len();
    let half = T::lit(0.5);
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    f(t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + half * h * k1[i];
    }
    f(t + half * h, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + half * h * k2[i];
    }
    f(t + half * h, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4);
    let sixth = T::one() / T::lit(6.0);
    (0..n)
        .map(|i| y[i] + h * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect()
}

/// Integrates from `t0` to `t1` with `steps` equal RK4 steps.
pub fn rk4<T: Real, F: FnMut(T, &[T], &mut [T])>(mut f: F, t0: T, t1: T, y0: &[T], steps: usize) -> Vec<T> {
    let steps = steps.max(1);
    let h = (t1 - t0) / T::of(steps);
    let mut y = y0.to_vec();
    for k in 0..steps {
        y = rk4_step(&mut f, t0 + h * T::of(k), &y, h);
    }
    y
}

/// Like [`rk4`] but returns the state after every step, starting with `y0`.
pub fn rk4_path<T: Real, F: FnMut(T, &[T], &mut [T])>(
    mut f: F,
    t0: T,
    t1: T,
    y0: &[T],
    steps: usize,
) -> Vec<(T, Vec<T>)> {
    let steps = steps.max(1);
    let h = (t1 - t0) / T::of(steps);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((t0, y0.to_vec()));
    for k in 0..steps {
        let t = t0 + h * T::of(k);
        let next = rk4_step(&mut f, t, &out[k].1, h);
        out.push((t + h, next));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_fourth_order() {
        let run = |steps| rk4(|_t, y: &[f64], d: &mut [f64]| d[0] = y[0], 0.0, 1.0, &[1.0], steps)[0];
        let e1 = (run(10) - 1f64.exp()).abs();
        let e2 = (run(20) - 1f64.exp()).abs();
        assert!(e1 / e2 > 14.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn harmonic_oscillator_f32() {
        let y = rk4(
            |_t, y: &[f32], d: &mut [f32]| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            0.0,
            std::f32::consts::PI,
            &[1.0, 0.0],
            200,
        );
        assert!((y[0] + 1.0).abs() < 1e-4 && y[1].abs() < 1e-4);
    }

    #[test]
    fn path_ends_at_final_state() {
        let f = |t: f64, _y: &[f64], d: &mut [f64]| d[0] = 2.0 * t;
        let p = rk4_path(f, 0.0, 2.0, &[0.0], 8);
        assert_eq!(p.len(), 9);
        assert!((p[8].1[0] - 4.0).abs() < 1e-12);
        assert!((p[8].0 - 2.0).abs() < 1e-12);
    }
}
