use std::collections::BTreeMap;

use objnav::experts::noisy_oracle_recommend;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn oracle_hit_rate_matches_p() {
    let truth = BTreeMap::from([(0, 4.0), (1, 1.5), (2, 3.0), (3, f64::INFINITY)]);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        let rec = noisy_oracle_recommend(&truth, 0.7, &mut rng);
        assert_eq!(rec.frontier_ids.len(), 1);
        counts[*rec.frontier_ids.first().unwrap()] += 1;
    }
    let hit = counts[1] as f64 / n as f64;
    assert!((hit - 0.7).abs() <= 0.01, "hit rate {hit}");
    // Misses spread evenly over the three others.
    for i in [0, 2, 3] {
        let f = counts[i] as f64 / n as f64;
        assert!((f - 0.1).abs() <= 0.01, "frontier {i}: {f}");
    }
}

#[test]
fn oracle_extremes_with_two_frontiers() {
    let truth = BTreeMap::from([(4, 2.0), (9, 1.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let hit = noisy_oracle_recommend(&truth, 1.0, &mut rng);
        assert_eq!(hit.frontier_ids.into_iter().collect::<Vec<_>>(), vec![9]);
        let miss = noisy_oracle_recommend(&truth, 0.0, &mut rng);
        assert_eq!(miss.frontier_ids.into_iter().collect::<Vec<_>>(), vec![4]);
    }
}
