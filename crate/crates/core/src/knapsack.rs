//! Exact integer knapsack minimisation over a discrete capacity grid.
//!
//! Minimises `Σ value_i · x_i` subject to `Σ weight_i · x_i ≤ capacity`,
//! `0 ≤ x_i ≤ cap_i` (or unbounded), `x_i` integer. Items with a
//! non-negative value are never taken. Each item is folded in with a
//! sliding-window minimum over residue classes of its weight, so the cost is
//! `O(items · capacity)` regardless of the caps.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Item {
    /// Strictly positive weight in grid units.
    pub weight: u64,
    pub value: f64,
    /// `None` means unbounded multiplicity.
    pub cap: Option<u64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Returns the multiplicity of each item in an optimal solution.
///
/// # Panics
/// If any considered item has zero weight.
pub fn solve_min(items: &[Item], capacity: u64) -> Vec<u64> {
    let mut counts = vec![0u64; items.len()];

    // (original index, weight, value, effective cap)
    let mut live: Vec<(usize, u64, f64, u64)> = Vec::new();
    for (i, it) in items.iter().enumerate() {
        if it.value.is_nan() || it.value >= 0.0 {
            continue;
        }
        assert!(it.weight > 0, "knapsack item {i} has zero weight");
        let fit = capacity / it.weight;
        let cap = it.cap.map_or(fit, |c| c.min(fit));
        if cap > 0 {
            live.push((i, it.weight, it.value, cap));
        }
    }
    if live.is_empty() {
        return counts;
    }

    // Everything fits: take all of it.
    let full: u128 = live.iter().map(|&(_, w, _, k)| w as u128 * k as u128).sum();
    if full <= capacity as u128 {
        for &(i, _, _, k) in &live {
            counts[i] = k;
        }
        return counts;
    }

    let g = live.iter().fold(0, |acc, &(_, w, _, _)| gcd(acc, w));
    let cap_units = (capacity / g).min(full as u64 / g) as usize;
    let weights: Vec<usize> = live.iter().map(|&(_, w, _, _)| (w / g) as usize).collect();

    let mut best = vec![0.0f64; cap_units + 1];
    let mut next = vec![0.0f64; cap_units + 1];
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(live.len());
    let mut window: VecDeque<(usize, f64)> = VecDeque::new();

    for (idx, &(_, _, value, cap)) in live.iter().enumerate() {
        let w = weights[idx];
        let cap = cap.min(u32::MAX as u64) as usize;
        let mut taken = vec![0u32; cap_units + 1];
        for r in 0..w.min(cap_units + 1) {
            window.clear();
            let mut s = 0usize;
            let mut c = r;
            while c <= cap_units {
                // g(s') = best[r + s'w] - s'·value; minimise over s' in [s-cap, s]
                let key = best[c] - s as f64 * value;
                while let Some(&(_, back)) = window.back() {
                    if back >= key {
                        window.pop_back();
                    } else {
                        break;
                    }
                }
                window.push_back((s, key));
                while let Some(&(front, _)) = window.front() {
                    if front + cap < s {
                        window.pop_front();
                    } else {
                        break;
                    }
                }
                let &(arg, min_key) = window.front().expect("window holds current index");
                next[c] = min_key + s as f64 * value;
                taken[c] = (s - arg) as u32;
                s += 1;
                c += w;
            }
        }
        std::mem::swap(&mut best, &mut next);
        choice.push(taken);
    }

    let mut c = cap_units;
    for idx in (0..live.len()).rev() {
        let j = choice[idx][c] as usize;
        counts[live[idx].0] = j as u64;
        c -= j * weights[idx];
    }
    counts
}

pub fn objective(items: &[Item], counts: &[u64]) -> f64 {
    items
        .iter()
        .zip(counts)
        .map(|(it, &x)| it.value * x as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive search over every multiplicity vector.
    fn brute_force(items: &[Item], capacity: u64) -> f64 {
        fn go(items: &[Item], left: u64, acc: f64) -> f64 {
            let Some((first, rest)) = items.split_first() else {
                return acc;
            };
            let max = first.cap.unwrap_or(u64::MAX).min(left / first.weight);
            (0..=max)
                .map(|x| go(rest, left - x * first.weight, acc + first.value * x as f64))
                .fold(f64::INFINITY, f64::min)
        }
        go(items, capacity, 0.0)
    }

    fn weight_of(items: &[Item], counts: &[u64]) -> u64 {
        items.iter().zip(counts).map(|(it, &x)| it.weight * x).sum()
    }

    #[test]
    fn nonnegative_values_yield_nothing() {
        let items = [
            Item { weight: 1, value: 0.0, cap: None },
            Item { weight: 2, value: 3.0, cap: None },
        ];
        assert_eq!(solve_min(&items, 100), vec![0, 0]);
    }

    #[test]
    fn two_item_example() {
        let mut items = [
            Item { weight: 2, value: -5.0, cap: None },
            Item { weight: 1, value: -3.0, cap: None },
        ];
        let x = solve_min(&items, 2);
        assert_eq!(x, vec![0, 2]);
        assert_eq!(objective(&items, &x), -6.0);

        items[1].cap = Some(1);
        let x = solve_min(&items, 2);
        assert_eq!(x, vec![1, 0]);
        assert_eq!(objective(&items, &x), -5.0);
    }

    #[test]
    fn greedy_by_ratio_is_not_optimal() {
        // ratio picks item 0 (-3/2 per unit) twice → -6 with 1 unit wasted
        // optimum is 0 + 1 at weight 5 → -7
        let items = [
            Item { weight: 2, value: -3.0, cap: None },
            Item { weight: 3, value: -4.0, cap: None },
        ];
        let x = solve_min(&items, 5);
        assert_eq!(objective(&items, &x), -7.0);
    }

    #[test]
    fn everything_fits_shortcut() {
        let items = [
            Item { weight: 3, value: -1.0, cap: Some(2) },
            Item { weight: 5, value: -2.0, cap: Some(1) },
        ];
        assert_eq!(solve_min(&items, 1000), vec![2, 1]);
    }

    #[test]
    fn zero_capacity() {
        let items = [Item { weight: 1, value: -1.0, cap: None }];
        assert_eq!(solve_min(&items, 0), vec![0]);
    }

    #[test]
    fn common_divisor_weights() {
        let items = [
            Item { weight: 345, value: -2.0, cap: Some(10) },
            Item { weight: 690, value: -5.0, cap: Some(3) },
        ];
        let x = solve_min(&items, 4000);
        // capacity fits 11 units of 345; best: 3×(690) = 6 units → -15, then 5 units of 345 → -10
        assert_eq!(x, vec![5, 3]);
        assert!(weight_of(&items, &x) <= 4000);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(
            raw in prop::collection::vec((1u64..7, -20i32..5, prop::option::of(0u64..5)), 1..5),
            capacity in 0u64..25,
        ) {
            let items: Vec<Item> = raw
                .iter()
                .map(|&(weight, v, cap)| Item { weight, value: v as f64 * 0.5, cap })
                .collect();
            let x = solve_min(&items, capacity);
            prop_assert!(weight_of(&items, &x) <= capacity);
            for (it, &c) in items.iter().zip(&x) {
                if let Some(k) = it.cap {
                    prop_assert!(c <= k);
                }
                if it.value >= 0.0 {
                    prop_assert_eq!(c, 0);
                }
            }
            let best = brute_force(&items, capacity);
            prop_assert!((objective(&items, &x) - best).abs() < 1e-9,
                "dp {} vs brute {}", objective(&items, &x), best);
        }
    }
}
