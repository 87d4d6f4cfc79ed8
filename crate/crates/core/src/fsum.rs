//! Correctly rounded floating-point summation.
//!
//! Objective values are compared for exact equality (optimality flags, oracle
//! cross-checks), so the weighted sum of an early set must not depend on the
//! order in which the weights are visited. The partials algorithm below keeps
//! the running sum exact and rounds once at the end.

/// Returns the sum of `values` rounded once to the nearest `f64`.
///
/// The result is independent of iteration order. Inputs must be finite.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for value in values {
        let mut x = value;
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    round_partials(&partials)
}

fn round_partials(partials: &[f64]) -> f64 {
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Half-way case: the remaining partials decide the rounding direction.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cancels_catastrophically_small_terms() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
    }

    proptest! {
        #[test]
        fn order_independent(mut xs in prop::collection::vec(-1e6f64..1e6, 0..40), seed in any::<u64>()) {
            let a = exact_sum(xs.iter().copied());
            // deterministic shuffle driven by the seed
            let mut s = seed | 1;
            for i in (1..xs.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                xs.swap(i, (s % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(a.to_bits(), exact_sum(xs.iter().copied()).to_bits());
        }
    }
}
