mod common;

use common::{brute_frontiers, random_belief};
use objnav::grid::cell_center;
use objnav::mapping::extract_frontiers;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extraction_matches_definition(seed in any::<u64>(), w in 1usize..24, h in 1usize..24, min in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_belief(&mut rng, w, h);
        let got: Vec<_> = extract_frontiers(&map, min).into_iter().map(|f| f.cells).collect();
        prop_assert_eq!(got, brute_frontiers(&map, min));
    }

    #[test]
    fn ids_are_dense_and_centroids_are_means(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_belief(&mut rng, 20, 20);
        for (i, f) in extract_frontiers(&map, 2).iter().enumerate() {
            prop_assert_eq!(f.id, i);
            let n = f.cells.len() as f64;
            let (sx, sy) = f.cells.iter().fold((0.0, 0.0), |(ax, ay), &c| {
                let (x, y) = cell_center(c, map.cell_size());
                (ax + x, ay + y)
            });
            prop_assert!((f.centroid.0 - sx / n).abs() < 1e-9);
            prop_assert!((f.centroid.1 - sy / n).abs() < 1e-9);
        }
    }
}
