//! Analytic level-k recursion for the guess-0.8-of-the-average game.

/// Iterate the level-k best response from an anchor: each level plays the
/// best response assuming everyone else plays the previous level,
/// `x_{j+1} = 0.8 (n-1) x_j / (n - 0.8)`, rounded half away from zero and
/// clamped to [1, 100] at the end.
///
/// The recursion runs in reals: rounding inside each step would pin the
/// iterate at 2 (round(0.75 * 2) = 2) and the floor would be unreachable.
/// The contraction factor `0.8 (n-1) / (n - 0.8)` is below 1 for every
/// n >= 2, so deep recursion always reaches the floor.
pub fn k_level_choice(k: u32, n: usize, anchor: i64) -> i64 {
    let n = n as f64;
    let mut x = anchor.clamp(1, 100) as f64;
    for _ in 0..k {
        x = 0.8 * (n - 1.0) * x / (n - 0.8);
    }
    (x.round() as i64).clamp(1, 100)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_is_the_anchor() {
        assert_eq!(k_level_choice(0, 4, 50), 50);
        assert_eq!(k_level_choice(0, 2, 77), 77);
    }

    #[test]
    fn one_step_hand_value() {
        // 0.8 * 3 * 50 / 3.2 = 37.5, rounded half away from zero
        assert_eq!(k_level_choice(1, 4, 50), 38);
    }

    #[test]
    fn deep_recursion_hits_the_floor() {
        for anchor in [1, 37, 50, 100] {
            assert_eq!(k_level_choice(30, 4, anchor), 1);
            assert_eq!(k_level_choice(60, 4, anchor), 1);
        }
    }

    #[test]
    fn sequence_is_non_increasing_until_the_floor() {
        for n in 2..=6 {
            for anchor in [1i64, 13, 50, 100] {
                let mut prev = k_level_choice(0, n, anchor);
                for k in 1..40 {
                    let next = k_level_choice(k, n, anchor);
                    assert!(next <= prev, "n={n} anchor={anchor} k={k}");
                    assert!(next >= 1);
                    prev = next;
                }
            }
        }
    }
}
