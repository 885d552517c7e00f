mod common;

use common::{dijkstra8, random_open_grid, H};
use objnav::grid::{cell_center, Cell, Grid};
use objnav::planner::{extract_path, fmm_field, geodesic_distance, path_length, TraversalMask};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn euclid(a: Cell, b: Cell) -> f64 {
    let (ax, ay) = cell_center(a, H);
    let (bx, by) = cell_center(b, H);
    (ax - bx).hypot(ay - by)
}

#[test]
fn corridor_of_ten_cells() {
    let mask = TraversalMask::from_grid(Grid::filled(10, 1, true), H);
    let d = geodesic_distance(&mask, Cell::new(0, 0), &[Cell::new(9, 0)]).unwrap();
    assert_eq!(d, 2.25);
}

#[test]
fn open_grid_close_to_euclidean() {
    let mask = TraversalMask::from_grid(Grid::filled(33, 33, true), H);
    let g = Cell::new(16, 16);
    let f = fmm_field(&mask, &[g]).unwrap();
    let worst = mask_cells(33, 33)
        .map(|c| (f.value(c) - euclid(c, g)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 2.0 * H, "max deviation {worst}");
}

fn mask_cells(w: i32, h: i32) -> impl Iterator<Item = Cell> {
    (0..h).flat_map(move |y| (0..w).map(move |x| Cell::new(x, y)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounded_by_euclid_and_dijkstra(seed in any::<u64>(), p in 0.0f64..0.35) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut open = random_open_grid(&mut rng, 24, 24, p);
        let goal = Cell::new(3, 5);
        open[goal] = true;
        let f = fmm_field(&TraversalMask::from_grid(open.clone(), H), &[goal]).unwrap();
        let dj = dijkstra8(&open, &[goal], H);
        for c in mask_cells(24, 24) {
            let v = f.value(c);
            prop_assert_eq!(v.is_finite(), dj[c].is_finite(), "reachability differs at {}", c);
            if v.is_finite() {
                prop_assert!(v >= euclid(c, goal) - 1e-9, "below euclid at {}", c);
                prop_assert!(v <= dj[c] + 1e-9, "above dijkstra at {}", c);
            }
        }
    }

    #[test]
    fn extracted_paths_descend_to_a_goal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut open = random_open_grid(&mut rng, 16, 16, 0.25);
        let goal = Cell::new(12, 12);
        open[goal] = true;
        let f = fmm_field(&TraversalMask::from_grid(open.clone(), H), &[goal]).unwrap();
        for start in mask_cells(16, 16).filter(|&c| f.value(c).is_finite()) {
            let path = extract_path(&f, start).unwrap();
            prop_assert_eq!(path[0], start);
            prop_assert_eq!(*path.last().unwrap(), goal);
            for w in path.windows(2) {
                prop_assert!(f.value(w[1]) < f.value(w[0]));
                prop_assert!(w[0].chebyshev(w[1]) == 1);
            }
            prop_assert!(path_length(&path, H) >= euclid(start, goal) - 1e-9);
        }
    }
}
