//! Moment vectors and the elapse action.
//!
//! The moments algebra answers with the vector (E X, E X^2, ..., E X^n) of
//! a cost distribution. Incurring a deterministic extra cost b shifts the
//! distribution, and the moments of X + b expand binomially; that shift is
//! the elapse action below. Mixtures stay componentwise because
//! expectation is linear.

use super::weight::Weight;

/// Moments of X + b from the moments of X: component i becomes
/// b^i + sum over j in 1..=i of C(i,j) a_j b^(i-j).
pub fn elapse(a: &[Weight], b: Weight) -> Vec<Weight> {
    (1..=a.len())
        .map(|i| {
            let mut acc = b.pow(i as u32);
            for (j, &aj) in a.iter().enumerate().take(i) {
                let j = j + 1;
                acc = acc + Weight::new(binomial(i, j)) * aj * b.pow((i - j) as u32);
            }
            acc
        })
        .collect()
}

/// Moments of the deterministic cost w: (w, w^2, ..., w^n).
pub fn powers(w: Weight, n: usize) -> Vec<Weight> {
    (1..=n).map(|i| w.pow(i as u32)).collect()
}

pub fn zero_vec(n: usize) -> Vec<Weight> {
    vec![Weight::ZERO; n]
}

pub fn inf_vec(n: usize) -> Vec<Weight> {
    vec![Weight::INF; n]
}

pub fn vec_add(a: &[Weight], b: &[Weight]) -> Vec<Weight> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn vec_scale(a: &[Weight], s: Weight) -> Vec<Weight> {
    a.iter().map(|&x| s * x).collect()
}

pub fn vec_min(a: &[Weight], b: &[Weight]) -> Vec<Weight> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.min(y)).collect()
}

pub fn vec_max(a: &[Weight], b: &[Weight]) -> Vec<Weight> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.max(y)).collect()
}

/// Largest componentwise absolute difference.
pub fn vec_delta(a: &[Weight], b: &[Weight]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.delta(y)).fold(0.0, f64::max)
}

/// C(i, j) as an exact float; moment orders stay far below the range
/// where u64 Pascal rows overflow.
fn binomial(i: usize, j: usize) -> f64 {
    let mut row = vec![1u128];
    for _ in 0..i {
        let mut next = vec![1u128];
        for w in row.windows(2) {
            next.push(w[0] + w[1]);
        }
        next.push(1);
        row = next;
    }
    row[j] as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(x: f64) -> Weight {
        Weight::new(x)
    }

    #[test]
    fn elapsing_from_zero_gives_pure_powers() {
        let out = elapse(&[Weight::ZERO, Weight::ZERO], w(1.0));
        assert_eq!(out, vec![w(1.0), w(1.0)]);
        let out = elapse(&zero_vec(3), w(2.0));
        assert_eq!(out, vec![w(2.0), w(4.0), w(8.0)]);
    }

    #[test]
    fn elapse_matches_hand_expansion() {
        // a = (2, 5), b = 3: first 3 + 2; second 9 + 2*3*2 + 5 = 26.
        let out = elapse(&[w(2.0), w(5.0)], w(3.0));
        assert_eq!(out, vec![w(5.0), w(26.0)]);
    }

    #[test]
    fn zero_cost_elapse_is_identity() {
        let a = vec![w(0.3), w(1.7), w(4.1)];
        assert_eq!(elapse(&a, Weight::ZERO), a);
    }

    #[test]
    fn infinity_propagates_through_elapse() {
        let out = elapse(&[Weight::INF, Weight::INF], w(1.0));
        assert!(out.iter().all(|c| c.is_infinite()));
        // An infinite shift drowns finite moments.
        let out = elapse(&[w(1.0), w(2.0)], Weight::INF);
        assert!(out.iter().all(|c| c.is_infinite()));
    }

    #[test]
    fn binomial_row_is_pascal() {
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 3), 10.0);
    }
}
