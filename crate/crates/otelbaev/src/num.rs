//! Small numeric helpers shared by the exact scan solvers.

/// Positive root of `a*d^2 + b*d - 1 = 0` with `a >= 0`, evaluated in a
/// cancellation-free form. Returns `None` when no positive root exists
/// (`a == 0` and `b <= 0`).
pub(crate) fn positive_root(a: f64, b: f64) -> Option<f64> {
    debug_assert!(a >= 0.0);
    if a == 0.0 {
        if b > 0.0 {
            return Some(1.0 / b);
        }
        return None;
    }
    let disc = (b * b + 4.0 * a).sqrt();
    if b >= 0.0 {
        Some(2.0 / (b + disc))
    } else {
        Some((disc - b) / (2.0 * a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_case() {
        assert_eq!(positive_root(0.0, 2.0), Some(0.5));
        assert_eq!(positive_root(0.0, 0.0), None);
        assert_eq!(positive_root(0.0, -1.0), None);
    }

    #[test]
    fn quadratic_case() {
        // 2 d^2 + d - 1 = 0 has positive root 1/2.
        let r = positive_root(2.0, 1.0).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        // Root stays accurate when b is large and positive (near-linear regime).
        let r = positive_root(1e-12, 1e6).unwrap();
        assert!((r - 1e-6).abs() / 1e-6 < 1e-9);
        // Negative b branch.
        let r = positive_root(1.0, -1.0).unwrap();
        let expect = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((r - expect).abs() < 1e-14);
    }
}
