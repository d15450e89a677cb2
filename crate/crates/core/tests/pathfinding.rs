mod support;

use proptest::prelude::*;
use zoosim_core::sim::{EntityClass, EntityKind};
use zoosim_core::world::{find_path, shortest_path_length, AreaKind, SceneSpec};
use zoosim_core::Vec3;

fn class_of(k: u8) -> EntityClass {
    EntityClass::of([EntityKind::Human, EntityKind::RobotDog, EntityKind::Vehicle, EntityKind::Drone][k as usize % 4])
}

fn check_query(
    s: &SceneSpec,
    class: &EntityClass,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<(), TestCaseError> {
    let want = support::oracle_cost(s, class, from, to);
    let got = find_path(s, class, s.cell_center(from.0, from.1), s.cell_center(to.0, to.1));
    match (want, got) {
        (None, Err(_)) => {}
        (None, Ok(p)) => return Err(TestCaseError::fail(format!("oracle unreachable, planner cost {}", p.cost))),
        (Some(c), Err(e)) => return Err(TestCaseError::fail(format!("oracle cost {c}, planner error {e}"))),
        (Some(c), Ok(p)) => {
            prop_assert_eq!(p.cost, c as f64 / 1e6);
            prop_assert_eq!(p.cells[0], from);
            prop_assert_eq!(*p.cells.last().unwrap(), to);
            let costs = support::entry_costs(s, class);
            let mut sum = 0u64;
            for w in p.cells.windows(2) {
                let (a, b) = (s.idx(w[0].0, w[0].1), s.idx(w[1].0, w[1].1));
                prop_assert_eq!(w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1), 1);
                prop_assert!(support::may_step(s, class, a, b));
                sum += costs[b].expect("path enters an impassable cell");
            }
            prop_assert_eq!(sum, c);
            prop_assert_eq!(p.length, (p.cells.len() - 1) as f64 * s.cell_size);
            let len = shortest_path_length(s, class, s.cell_center(from.0, from.1), s.cell_center(to.0, to.1)).unwrap();
            prop_assert_eq!(len, p.length);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn planner_cost_matches_dijkstra_oracle(
        seed in any::<u64>(),
        nx in 2usize..=32,
        ny in 2usize..=32,
        half_cells in any::<bool>(),
        relief in any::<bool>(),
        queries in prop::collection::vec((any::<u8>(), any::<u16>(), any::<u16>()), 100),
    ) {
        let cell = if half_cells { 0.5 } else { 1.0 };
        let s = support::random_grid(seed, nx, ny, cell, relief);
        let n = nx * ny;
        for (k, a, b) in queries {
            let (a, b) = (a as usize % n, b as usize % n);
            check_query(&s, &class_of(k), (a % nx, a / nx), (b % nx, b / nx))?;
        }
    }
}

#[test]
fn walkway_priority_on_enumerated_grids() {
    let human = EntityClass::of(EntityKind::Human);
    let mut cases = 0;
    for seed in 0..4 {
        let s = support::street_grid(seed, 12);
        cases += support::check_walkway_priority(&s, &human).unwrap();
    }
    assert!(cases > 1000, "only {cases} pure-walkway-optimal pairs");
}

#[test]
fn walkway_detour_beats_roadway_shortcut() {
    let human = EntityClass::of(EntityKind::Human);
    // a roadway strip on row 0 and a walkway detour one row up
    let mut s = SceneSpec::blank("detour", 9, 3, 1.0);
    for i in 0..9 {
        let k = s.idx(i, 2);
        s.area[k] = AreaKind::Blocked;
    }
    for i in 1..8 {
        let k = s.idx(i, 0);
        s.area[k] = AreaKind::Roadway;
    }
    let p = find_path(&s, &human, Vec3::new(0.5, 0.5, 0.0), Vec3::new(8.5, 0.5, 0.0)).unwrap();
    assert_eq!(p.length, 10.0);
    assert!(p.cells.iter().all(|&(i, j)| s.area_at(i, j) == AreaKind::Walkway));
    let car = EntityClass::of(EntityKind::Vehicle);
    let p = find_path(&s, &car, Vec3::new(0.5, 0.5, 0.0), Vec3::new(8.5, 0.5, 0.0)).unwrap();
    assert_eq!(p.length, 8.0);
}

#[test]
fn blocked_goal_and_walled_off_goal_have_no_path() {
    let human = EntityClass::of(EntityKind::Human);
    let mut s = SceneSpec::blank("wall", 6, 6, 1.0);
    for j in 0..6 {
        let k = s.idx(3, j);
        s.area[k] = AreaKind::Blocked;
    }
    assert!(find_path(&s, &human, Vec3::new(0.5, 0.5, 0.0), Vec3::new(5.5, 5.5, 0.0)).is_err());
    assert!(find_path(&s, &human, Vec3::new(0.5, 0.5, 0.0), Vec3::new(3.5, 0.5, 0.0)).is_err());
    let drone = EntityClass::of(EntityKind::Drone);
    assert!(find_path(&s, &drone, Vec3::new(0.5, 0.5, 0.0), Vec3::new(5.5, 5.5, 0.0)).is_err());
}
