//! 0/1 min-cost coverage: choose items minimizing total cost subject to
//! total weight reaching a target. This is the minimization inside the
//! robust neighborhood size; it is a min-knapsack and NP-hard in general.
//!
//! Items are expected in the caller's tie-break order. Zero-cost items are
//! always taken.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverItem {
    pub cost: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSolution {
    pub cost: f64,
    /// Indices into the item slice, ascending.
    pub chosen: Vec<usize>,
}

/// Relative slack on the weight target absorbing summation-order rounding.
const WEIGHT_RTOL: f64 = 1e-12;

struct Prepared {
    /// Non-free items sorted by cost/weight ascending, stable in input order.
    order: Vec<usize>,
    free: Vec<usize>,
    /// Weight still required after the free items, with slack applied.
    need: f64,
}

fn prepare(items: &[CoverItem], target: f64) -> Prepared {
    let total: f64 = items.iter().map(|it| it.weight).sum();
    let slack = WEIGHT_RTOL * total.max(target.abs());
    let (free, mut order): (Vec<usize>, Vec<usize>) =
        (0..items.len()).partition(|&i| items[i].cost <= 0.0);
    let free_weight: f64 = free.iter().map(|&i| items[i].weight).sum();
    order.sort_by(|&a, &b| {
        let ra = items[a].cost / items[a].weight;
        let rb = items[b].cost / items[b].weight;
        ra.total_cmp(&rb)
    });
    Prepared {
        order,
        free,
        need: target - free_weight - slack,
    }
}

fn finish(items: &[CoverItem], mut chosen: Vec<usize>) -> CoverSolution {
    chosen.sort_unstable();
    let cost = chosen.iter().map(|&i| items[i].cost).fold(0.0, |a, b| a + b);
    CoverSolution { cost, chosen }
}

/// Optimal value of the LP relaxation: greedy by ratio with one fractional item.
pub fn fractional_lower(items: &[CoverItem], target: f64) -> f64 {
    let p = prepare(items, target);
    fractional_tail(items, &p.order, p.need)
}

fn fractional_tail(items: &[CoverItem], order: &[usize], mut need: f64) -> f64 {
    let mut cost = 0.0;
    for &i in order {
        if need <= 0.0 {
            break;
        }
        let it = items[i];
        if it.weight <= need {
            cost += it.cost;
            need -= it.weight;
        } else {
            cost += it.cost * need / it.weight;
            need = 0.0;
        }
    }
    if need > 0.0 {
        f64::INFINITY
    } else {
        cost
    }
}

/// Greedy integral solution: the ratio-ordered prefix that first reaches the
/// target, i.e. the fractional solution with its split item rounded up.
pub fn greedy_upper(items: &[CoverItem], target: f64) -> Option<CoverSolution> {
    let p = prepare(items, target);
    let mut chosen = p.free.clone();
    let mut need = p.need;
    for &i in &p.order {
        if need <= 0.0 {
            break;
        }
        chosen.push(i);
        need -= items[i].weight;
    }
    (need <= 0.0).then(|| finish(items, chosen))
}

/// Exact minimum by depth-first branch and bound, pruning with the
/// fractional relaxation of the remaining items.
pub fn exact(items: &[CoverItem], target: f64) -> Option<CoverSolution> {
    let incumbent = greedy_upper(items, target)?;
    let p = prepare(items, target);
    let mut best_cost = incumbent.cost - p.free.iter().map(|&i| items[i].cost).sum::<f64>();
    let mut best: Option<Vec<usize>> = None;
    let mut stack = Vec::with_capacity(p.order.len());
    branch(items, &p.order, 0, p.need, 0.0, &mut stack, &mut best_cost, &mut best);
    match best {
        Some(sel) => {
            let mut chosen = p.free;
            chosen.extend(sel);
            Some(finish(items, chosen))
        }
        None => Some(incumbent),
    }
}

#[allow(clippy::too_many_arguments)]
fn branch(
    items: &[CoverItem],
    order: &[usize],
    depth: usize,
    need: f64,
    cost: f64,
    stack: &mut Vec<usize>,
    best_cost: &mut f64,
    best: &mut Option<Vec<usize>>,
) {
    if need <= 0.0 {
        if cost < *best_cost {
            *best_cost = cost;
            *best = Some(stack.clone());
        }
        return;
    }
    if depth == order.len() {
        return;
    }
    let bound = cost + fractional_tail(items, &order[depth..], need);
    if bound >= *best_cost {
        return;
    }
    let i = order[depth];
    stack.push(i);
    branch(items, order, depth + 1, need - items[i].weight, cost + items[i].cost, stack, best_cost, best);
    stack.pop();
    branch(items, order, depth + 1, need, cost, stack, best_cost, best);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(items: &[CoverItem], target: f64) -> f64 {
        let total: f64 = items.iter().map(|it| it.weight).sum();
        let slack = WEIGHT_RTOL * total.max(target);
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << items.len()) {
            let (mut w, mut c) = (0.0, 0.0);
            for (i, it) in items.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    w += it.weight;
                    c += it.cost;
                }
            }
            if w >= target - slack && c < best {
                best = c;
            }
        }
        best
    }

    #[test]
    fn greedy_is_not_always_optimal() {
        // Ratio order prefers the small cheap item, then must take a big one.
        let items = [
            CoverItem { cost: 1.0, weight: 2.0 },
            CoverItem { cost: 3.0, weight: 5.0 },
            CoverItem { cost: 3.2, weight: 5.0 },
        ];
        let target = 5.0;
        let lo = fractional_lower(&items, target);
        let hi = greedy_upper(&items, target).unwrap();
        let ex = exact(&items, target).unwrap();
        assert!((ex.cost - brute(&items, target)).abs() < 1e-12);
        assert_eq!(ex.chosen, vec![1]);
        assert!(lo <= ex.cost && ex.cost <= hi.cost);
        assert!(hi.cost > ex.cost);
    }

    #[test]
    fn free_items_always_included() {
        let items = [
            CoverItem { cost: 0.0, weight: 1.0 },
            CoverItem { cost: 2.0, weight: 1.0 },
        ];
        let sol = exact(&items, 0.5).unwrap();
        assert_eq!(sol.chosen, vec![0]);
        assert_eq!(sol.cost, 0.0);
    }

    #[test]
    fn zero_target_is_free() {
        let items = [CoverItem { cost: 1.0, weight: 1.0 }];
        assert_eq!(exact(&items, 0.0).unwrap().cost, 0.0);
        assert_eq!(fractional_lower(&items, 0.0), 0.0);
        assert_eq!(exact(&[], 0.0).unwrap().chosen, Vec::<usize>::new());
    }

    #[test]
    fn infeasible_target() {
        let items = [CoverItem { cost: 1.0, weight: 1.0 }];
        assert!(exact(&items, 2.0).is_none());
        assert!(fractional_lower(&items, 2.0).is_infinite());
    }
}
