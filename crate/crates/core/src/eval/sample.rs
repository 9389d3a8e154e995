use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::EvalError;
use crate::model::TaskInstance;

/// Run 1 samples with seed 2026.
pub const BASE_SEED: u64 = 2025;

pub fn sampling_seed(run_id: u32) -> u64 {
    BASE_SEED + run_id as u64
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub seed: u64,
    /// Slots per stratum, keyed by the joined stratum values.
    pub allocation: BTreeMap<String, usize>,
    /// Selected instances in dataset order.
    pub instances: Vec<TaskInstance>,
}

fn stratum_of(inst: &TaskInstance, keys: &[String]) -> String {
    keys.iter()
        .map(|k| inst.strata.get(k).map(String::as_str).unwrap_or("unknown"))
        .collect::<Vec<_>>()
        .join("|")
}

/// Largest-remainder allocation of `n` slots proportional to stratum sizes.
/// Ties on the remainder go to the larger stratum, then the smaller key.
pub fn allocate(sizes: &BTreeMap<String, usize>, n: usize) -> BTreeMap<String, usize> {
    let total: usize = sizes.values().sum();
    if total == 0 {
        return sizes.keys().map(|k| (k.clone(), 0)).collect();
    }
    let mut out = BTreeMap::new();
    let mut rems = Vec::new();
    for (k, &size) in sizes {
        let exact = n * size;
        out.insert(k.clone(), exact / total);
        rems.push((exact % total, size, k.clone()));
    }
    let given: usize = out.values().sum();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    for (_, _, k) in rems.into_iter().take(n - given) {
        *out.get_mut(&k).expect("stratum") += 1;
    }
    out
}

/// Draws `min(cap, available)` instances with seed `2025 + run_id`,
/// stratified over `strata_keys`.
pub fn sample(instances: &[TaskInstance], run_id: u32, cap: usize, strata_keys: &[String]) -> Result<Sample, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if cap == 0 {
        return Err(EvalError::Invalid("cap must be >= 1".into()));
    }
    let seed = sampling_seed(run_id);
    let n = cap.min(instances.len());

    let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        members.entry(stratum_of(inst, strata_keys)).or_default().push(i);
    }
    let sizes = members.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    let allocation = allocate(&sizes, n);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for (k, idx) in &members {
        let take = allocation[k];
        picked.extend(index::sample(&mut rng, idx.len(), take).into_iter().map(|j| idx[j]));
    }
    picked.sort_unstable();
    Ok(Sample {
        seed,
        allocation,
        instances: picked.into_iter().map(|i| instances[i].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_is_proportional() {
        let sizes = BTreeMap::from([("a".to_string(), 80), ("b".to_string(), 20)]);
        let a = allocate(&sizes, 10);
        assert_eq!(a["a"], 8);
        assert_eq!(a["b"], 2);
    }

    #[test]
    fn residual_slots_follow_remainders_then_size() {
        let sizes = BTreeMap::from([("a".to_string(), 5), ("b".to_string(), 3), ("c".to_string(), 2)]);
        // exact quotas 2.5, 1.5, 1.0 for n = 5
        let a = allocate(&sizes, 5);
        assert_eq!(a.values().sum::<usize>(), 5);
        assert_eq!((a["a"], a["b"], a["c"]), (3, 1, 1));
    }

    #[test]
    fn run_one_uses_seed_2026() {
        assert_eq!(sampling_seed(1), 2026);
    }
}
