//! Modified Bessel functions of the second kind, integer order.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `(e^x K0(x), e^x K1(x))` for `x > 0`.
pub fn k0_k1_scaled(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "Bessel K needs a positive argument, got {x}");
    if x <= 2.0 {
        let (k0, k1) = series(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else {
        continued_fraction(x)
    }
}

/// `(K0(x), K1(x))` for `x > 0`.
pub fn k0_k1(x: f64) -> (f64, f64) {
    let (k0, k1) = k0_k1_scaled(x);
    let e = (-x).exp();
    (k0 * e, k1 * e)
}

/// Power series about the origin; accurate for small `x`.
fn series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let lg = (0.5 * x).ln();
    // term_k = y^k / (k!)^2, harmonic H_k.
    let mut term = 1.0;
    let mut h = 0.0;
    let mut i0 = 1.0;
    let mut k0 = -(lg + EULER_GAMMA);
    // K1 = 1/x + ln(x/2) I1 - (x/4) Σ [ψ(k+1) + ψ(k+2)] y^k / (k!(k+1)!)
    let mut i1 = 0.0;
    let mut s1 = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            term *= y / (kf * kf);
            h += 1.0 / kf;
            i0 += term;
            k0 += term * (h - lg - EULER_GAMMA);
        }
        let t1 = term / (kf + 1.0);
        let psi_sum = 2.0 * (-EULER_GAMMA) + h + (h + 1.0 / (kf + 1.0));
        i1 += t1;
        s1 += psi_sum * t1;
        if term < 1e-18 * i0 {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    let k1 = 1.0 / x + lg * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// Steed's continued fraction for `K0` with the Temme normalization sum,
/// returning exponentially scaled values.
fn continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// `e^x K_n(x)` for `n = 0..=n_max`, by upward recurrence.
pub fn k_scaled_sequence(n_max: usize, x: f64) -> Vec<f64> {
    let (k0, k1) = k0_k1_scaled(x);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(k0);
    if n_max >= 1 {
        out.push(k1);
    }
    for n in 1..n_max {
        let next = out[n - 1] + 2.0 * n as f64 / x * out[n];
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_values() {
        let cases = [
            (1.0, 0.421_024_438_240_708_34, 0.601_907_230_197_234_6),
            (2.0, 0.113_893_872_749_533_44, 0.139_865_881_816_522_43),
            (5.0, 0.003_691_098_334_042_594_2, 0.004_044_613_445_452_164),
        ];
        for (x, k0, k1) in cases {
            let (a, b) = k0_k1(x);
            assert!(rel(a, k0) < 1e-13, "K0({x}) = {a}");
            assert!(rel(b, k1) < 1e-13, "K1({x}) = {b}");
        }
    }

    #[test]
    fn branches_agree_at_the_switch() {
        let lo = series(2.0);
        let hi = continued_fraction(2.0);
        let e = (-2.0f64).exp();
        assert!(rel(lo.0, hi.0 * e) < 1e-13);
        assert!(rel(lo.1, hi.1 * e) < 1e-13);
    }

    #[test]
    fn small_argument_asymptotes() {
        let x = 1e-8;
        let (k0, k1) = k0_k1(x);
        assert!(rel(k0, -(0.5 * x).ln() - EULER_GAMMA) < 1e-12);
        assert!(rel(k1, 1.0 / x) < 1e-12);
    }

    #[test]
    fn large_argument_asymptote() {
        let x = 400.0;
        let (k0, _) = k0_k1_scaled(x);
        let lead = (std::f64::consts::PI / (2.0 * x)).sqrt() * (1.0 - 1.0 / (8.0 * x));
        assert!(rel(k0, lead) < 1e-5);
    }

    #[test]
    fn recurrence_matches_known_k2() {
        // K2(1) = K0(1) + 2 K1(1).
        let s = k_scaled_sequence(4, 1.0);
        let e = (-1.0f64).exp();
        assert!(
            rel(
                s[2] * e,
                0.421_024_438_240_708_34 + 2.0 * 0.601_907_230_197_234_6
            ) < 1e-13
        );
        assert_eq!(s.len(), 5);
    }
}
