use std::collections::BTreeSet;

use objnav::experts::AffinityTable;
use objnav::harness::scenegen::{generate_maze, generate_scenarios, GenParams, ROOM_TYPES};
use objnav::planner::{fmm_field, TraversalMask};
use objnav::world::Scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn fifty_four_room_scenarios_are_valid_and_reachable() {
    let params = GenParams {
        width: 40,
        height: 40,
        rooms: 4,
        ..GenParams::default()
    };
    let docs = generate_scenarios(&params, 123, 50).unwrap();
    assert_eq!(docs.len(), 50);
    let targets: BTreeSet<String> = AffinityTable::default().targets().map(String::from).collect();
    for doc in &docs {
        let text = serde_json::to_string(doc).unwrap();
        let sc = Scenario::from_json_str(&text).unwrap();
        assert_eq!(sc.env.width(), 40);
        assert_eq!(doc.rooms.len(), 4);
        assert!(doc.rooms.iter().all(|r| ROOM_TYPES.contains(&r.label.as_str())));
        assert!(targets.contains(&sc.target));
        let goals = sc.env.target_cells(&sc.target);
        let start = sc.start.cell(sc.env.cell_size());
        for inflate in [false, true] {
            let mask = TraversalMask::from_environment(&sc.env, inflate);
            let f = fmm_field(&mask, goals).unwrap();
            assert!(f.value(start).is_finite(), "unreachable (inflate={inflate})");
        }
    }
}

#[test]
fn batches_are_deterministic_per_seed() {
    let p = GenParams::default();
    assert_eq!(generate_scenarios(&p, 5, 4).unwrap(), generate_scenarios(&p, 5, 4).unwrap());
    assert_ne!(generate_scenarios(&p, 5, 1).unwrap(), generate_scenarios(&p, 6, 1).unwrap());
}

#[test]
fn maze_target_is_unreachable_once_inflated() {
    let doc = generate_maze(6, 6, 0.25, "vase", &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let sc = Scenario::from_doc(&doc).unwrap();
    let goals = sc.env.target_cells("vase");
    let start = sc.start.cell(0.25);
    let open = fmm_field(&TraversalMask::from_environment(&sc.env, false), goals).unwrap();
    assert!(open.value(start).is_finite());
    let mut inflated = TraversalMask::from_environment(&sc.env, true);
    inflated.allow(goals.iter().copied());
    let f = fmm_field(&inflated, goals).unwrap();
    assert!(f.value(start).is_infinite());
}
