use std::collections::BTreeMap;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::fim::rng_for;

/// Per-stratum counts: proportional shares rounded by largest remainder,
/// then moved so every stratum gets one when the quota allows. Ties break
/// by key order.
pub fn allocate<K: Ord + Clone>(
    sizes: &BTreeMap<K, usize>,
    quota: usize,
) -> Result<BTreeMap<K, usize>> {
    let pool: usize = sizes.values().sum();
    if quota > pool {
        return Err(Error::QuotaExceedsPool { quota, pool });
    }
    let mut alloc: BTreeMap<K, usize> = BTreeMap::new();
    if pool == 0 {
        return Ok(alloc);
    }
    let mut remainders = Vec::with_capacity(sizes.len());
    for (key, &n) in sizes {
        // share = quota * n / pool, kept exact in integers
        let scaled = quota as u128 * n as u128;
        alloc.insert(key.clone(), (scaled / pool as u128) as usize);
        remainders.push((scaled % pool as u128, key.clone()));
    }
    let given: usize = alloc.values().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (_, key) in remainders.into_iter().take(quota - given) {
        *alloc.get_mut(&key).expect("allocated above") += 1;
    }

    let non_empty = sizes.values().filter(|&&n| n > 0).count();
    if quota >= non_empty {
        let starving: Vec<K> = sizes
            .iter()
            .filter(|(k, n)| **n > 0 && alloc[*k] == 0)
            .map(|(k, _)| k.clone())
            .collect();
        for key in starving {
            // donor: largest allocation above its exact share, among those with > 1
            let donor = sizes
                .iter()
                .filter(|(k, _)| alloc[*k] > 1)
                .max_by(|(ka, na), (kb, nb)| {
                    let over = |k: &K, n: usize| {
                        alloc[k] as i128 * pool as i128 - quota as i128 * n as i128
                    };
                    over(ka, **na).cmp(&over(kb, **nb)).then_with(|| kb.cmp(ka))
                })
                .map(|(k, _)| k.clone())
                .expect("quota covers every stratum, so some stratum holds more than one");
            *alloc.get_mut(&donor).unwrap() -= 1;
            *alloc.get_mut(&key).unwrap() += 1;
        }
    }
    Ok(alloc)
}

/// Draw `quota` items, proportionally per stratum, uniformly within each.
/// The result keeps the pool's order.
pub fn stratified_sample<T: Clone, K: Ord + Clone>(
    pool: &[T],
    key_fn: impl Fn(&T) -> K,
    quota: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let mut strata: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, item) in pool.iter().enumerate() {
        strata.entry(key_fn(item)).or_default().push(i);
    }
    let sizes = strata.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    let alloc = allocate(&sizes, quota)?;
    let mut rng = rng_for(seed);
    let mut chosen = Vec::with_capacity(quota);
    for (key, members) in &strata {
        let take = alloc[key];
        chosen.extend(
            index::sample(&mut rng, members.len(), take)
                .into_iter()
                .map(|j| members[j]),
        );
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pool[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sizes(v: &[usize]) -> BTreeMap<usize, usize> {
        v.iter().copied().enumerate().collect()
    }

    #[test]
    fn allocation_examples() {
        let a = allocate(&sizes(&[50, 50]), 10).unwrap();
        assert_eq!(a.values().copied().collect::<Vec<_>>(), vec![5, 5]);
        let a = allocate(&sizes(&[90, 10]), 10).unwrap();
        assert_eq!(a.values().copied().collect::<Vec<_>>(), vec![9, 1]);
        let a = allocate(&sizes(&[99, 1]), 2).unwrap();
        assert_eq!(a.values().copied().collect::<Vec<_>>(), vec![1, 1]);
        assert!(matches!(
            allocate(&sizes(&[1, 1]), 3),
            Err(Error::QuotaExceedsPool { quota: 3, pool: 2 })
        ));
    }

    #[test]
    fn sample_keeps_order_and_strata() {
        let pool: Vec<(char, usize)> = (0..100)
            .map(|i| (if i < 90 { 'a' } else { 'b' }, i))
            .collect();
        let s = stratified_sample(&pool, |x| x.0, 10, 3).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.iter().filter(|x| x.0 == 'b').count(), 1);
        assert!(s.windows(2).all(|w| w[0].1 < w[1].1));
        assert_eq!(s, stratified_sample(&pool, |x| x.0, 10, 3).unwrap());
    }

    proptest! {
        #[test]
        fn allocation_properties(v in prop::collection::vec(0usize..40, 1..8), q in 0usize..200) {
            let sizes = sizes(&v);
            let pool: usize = v.iter().sum();
            prop_assume!(q <= pool);
            let alloc = allocate(&sizes, q).unwrap();
            prop_assert_eq!(alloc.values().sum::<usize>(), q);
            let non_empty = v.iter().filter(|&&n| n > 0).count();
            for (k, &n) in &sizes {
                prop_assert!(alloc[k] <= n);
                if q >= non_empty && n > 0 {
                    prop_assert!(alloc[k] >= 1);
                }
            }
            if q < non_empty {
                for (k, &n) in &sizes {
                    let share = q as f64 * n as f64 / pool as f64;
                    prop_assert!((alloc[k] as f64 - share).abs() < 1.0);
                }
            }
        }
    }
}
