mod common;

use panonav_core::world::{
    generate_world, load_world, save_world, Action, Cell, CellKind, GeneratorParams, GridWorld, Heading, Pose, Room, WorldError,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pose(x: i32, y: i32, h: u16) -> Pose {
    Pose::new(Cell::new(x, y), Heading::new(h).unwrap())
}

fn corridor() -> GridWorld {
    GridWorld::from_ascii(
        &["#######", "#..#..#", "#.....#", "#######"],
        &[('.', "hallway")],
        &[("plant", Cell::new(5, 1))],
        pose(1, 1, 0),
        "plant",
    )
    .unwrap()
}

#[test]
fn strides_follow_the_dominant_axis() {
    let expect = [
        (0, (1, 0)),
        (30, (1, 0)),
        (60, (0, -1)),
        (90, (0, -1)),
        (120, (0, -1)),
        (150, (-1, 0)),
        (180, (-1, 0)),
        (210, (-1, 0)),
        (240, (0, 1)),
        (270, (0, 1)),
        (300, (0, 1)),
        (330, (1, 0)),
    ];
    for (deg, stride) in expect {
        assert_eq!(Heading::new(deg).unwrap().stride(), stride, "{deg}");
    }
}

#[test]
fn headings_reject_off_grid_values() {
    assert!(Heading::new(45).is_err());
    assert!(Heading::new(360).is_err());
    assert_eq!(Heading::wrapping(-30).degrees(), 330);
    assert_eq!(Heading::new(330).unwrap().left().degrees(), 0);
    assert_eq!(Heading::new(0).unwrap().right().degrees(), 330);
}

#[test]
fn blocked_move_keeps_pose() {
    let w = corridor();
    let (next, outcome) = w.step(pose(2, 1, 0), Action::MoveAhead).unwrap();
    assert_eq!(next, pose(2, 1, 0));
    assert!(outcome.blocked && !outcome.moved);
    let (next, outcome) = w.step(pose(2, 1, 270), Action::MoveAhead).unwrap();
    assert_eq!(next.cell, Cell::new(2, 2));
    assert!(outcome.moved);
}

#[test]
fn stepping_from_a_wall_is_rejected() {
    let w = corridor();
    assert!(matches!(w.step(pose(3, 1, 0), Action::TurnLeft), Err(WorldError::InvalidPose(_))));
}

#[test]
fn geodesic_goes_around_walls() {
    let w = corridor();
    // (2,1) -> (4,1) must dip through row 2.
    assert_eq!(w.shortest_path_length(Cell::new(2, 1), Cell::new(4, 1)).unwrap(), 4.0 * 0.25);
    assert_eq!(w.distance_to_nearest_target(&w.start(), "plant").unwrap(), 6.0 * 0.25);
    assert!(matches!(w.target_field("piano"), Err(WorldError::NoSuchCategory(_))));
}

#[test]
fn unreachable_pairs_report_an_error() {
    let w = GridWorld::from_ascii(&["#####", "#.#.#", "#####"], &[('.', "hallway")], &[], pose(1, 1, 0), "plant");
    // Two disconnected cells cannot form one room.
    assert!(matches!(w, Err(WorldError::InvalidWorld(_))));
    let w = GridWorld::from_ascii(
        &["#####", "#a#b#", "#####"],
        &[('a', "hallway"), ('b', "kitchen")],
        &[("sink", Cell::new(3, 1))],
        pose(1, 1, 0),
        "sink",
    )
    .unwrap();
    assert!(matches!(w.shortest_path_length(Cell::new(1, 1), Cell::new(3, 1)), Err(WorldError::Unreachable(..))));
}

#[test]
fn open_border_is_invalid() {
    let cells = vec![CellKind::Free; 9];
    let rooms = vec![Room {
        id: 0,
        room_type: "hallway".into(),
        cells: (0..3).flat_map(|y| (0..3).map(move |x| Cell::new(x, y))).collect(),
    }];
    let r = GridWorld::new(0.25, 3, 3, cells, rooms, vec![], pose(1, 1, 0), "plant");
    assert!(r.is_err());
}

#[test]
fn line_of_sight_is_symmetric_on_random_worlds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let w = common::random_world(&mut rng, 16, 12, 0.25, 2);
        let free: Vec<Cell> = w.free_cells().collect();
        for a in free.iter().step_by(3) {
            for b in free.iter().step_by(5) {
                assert_eq!(w.line_of_sight(*a, *b), w.line_of_sight(*b, *a), "{a} {b}");
            }
        }
    }
}

#[test]
fn generated_worlds_round_trip_through_json() {
    for seed in 0..8 {
        let w = generate_world(seed, &GeneratorParams::default()).unwrap();
        let text = save_world(&w);
        let back = load_world(&text).unwrap();
        assert_eq!(save_world(&back), text);
        assert!(w.distance_to_nearest_target(&w.start(), w.target_category()).unwrap() > 0.0);
    }
}

#[test]
fn generation_is_seed_deterministic() {
    let p = GeneratorParams::default();
    assert_eq!(save_world(&generate_world(5, &p).unwrap()), save_world(&generate_world(5, &p).unwrap()));
    assert_ne!(save_world(&generate_world(5, &p).unwrap()), save_world(&generate_world(6, &p).unwrap()));
}

#[test]
fn deceptive_worlds_hide_the_target_from_the_start_room() {
    let p = GeneratorParams {
        deceptive: true,
        ..GeneratorParams::default()
    };
    for seed in 1..=5 {
        let w = generate_world(seed, &p).unwrap();
        let start_room = w.room_at(w.start().cell).unwrap();
        let target = w.target_category().to_string();
        assert!(w.instances_of(&target).all(|(_, o)| o.room_id != start_room.id), "seed {seed}");
        for (_, o) in w.instances_of(&target) {
            assert!(start_room.cells.iter().all(|c| !w.line_of_sight(*c, o.position)), "seed {seed}");
        }
    }
}

proptest! {
    #[test]
    fn turning_never_moves(x in 1i32..6, y in 1i32..3, h in 0u16..12, left in any::<bool>()) {
        let w = corridor();
        let p = pose(x, y, h * 30);
        prop_assume!(w.is_free(p.cell));
        let action = if left { Action::TurnLeft } else { Action::TurnRight };
        let (next, outcome) = w.step(p, action).unwrap();
        prop_assert_eq!(next.cell, p.cell);
        prop_assert!(!outcome.moved && !outcome.blocked);
    }
}
