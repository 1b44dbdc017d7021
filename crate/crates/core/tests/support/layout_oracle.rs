//! Independent layout solvability oracle shared by test targets.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use lifebench::gridworld::{Color, DoorState, Layout, ObjectType, Params, TaskConfig, TaskKind};

pub const TASKS: [TaskKind; 6] = [
    TaskKind::SimpleCrossing,
    TaskKind::DistributionalShift,
    TaskKind::DynamicObstacles,
    TaskKind::CustomFetch,
    TaskKind::Unlock,
    TaskKind::DoorKey,
];

pub fn all_variants() -> Vec<(TaskKind, String, Params)> {
    TASKS
        .iter()
        .flat_map(|&k| {
            k.default_variants()
                .into_iter()
                .map(move |(name, params)| (k, name.to_string(), params))
        })
        .collect()
}

pub fn config(kind: TaskKind, params: &Params) -> TaskConfig {
    kind.configure(params).unwrap()
}

pub type Cell = (usize, usize);

pub fn neighbours((x, y): Cell, w: usize, h: usize) -> impl Iterator<Item = Cell> {
    let cand = [
        (x.wrapping_add(1), y),
        (x.wrapping_sub(1), y),
        (x, y.wrapping_add(1)),
        (x, y.wrapping_sub(1)),
    ];
    cand.into_iter().filter(move |&(a, b)| a < w && b < h)
}

/// Cells reachable from the agent by walking, where `walkable` decides
/// which tiles can be entered.
pub fn reachable(layout: &Layout, walkable: impl Fn(Cell) -> bool) -> HashSet<Cell> {
    let (w, h) = (layout.grid.width(), layout.grid.height());
    let mut seen = HashSet::from([layout.agent_pos]);
    let mut queue = VecDeque::from([layout.agent_pos]);
    while let Some(c) = queue.pop_front() {
        for n in neighbours(c, w, h) {
            if walkable(n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}

pub fn plain_floor(layout: &Layout, c: Cell) -> bool {
    let t = layout.grid.get(c.0, c.1);
    match t.object {
        ObjectType::Empty | ObjectType::Goal | ObjectType::Floor => true,
        ObjectType::Door => t.state == DoorState::Open,
        _ => false,
    }
}

pub fn borders(region: &HashSet<Cell>, c: Cell, layout: &Layout) -> bool {
    neighbours(c, layout.grid.width(), layout.grid.height()).any(|n| region.contains(&n))
}

/// Independent solvability check on the static layout.
pub fn solvable(kind: TaskKind, layout: &Layout) -> Result<(), String> {
    let g = &layout.grid;
    let goal = g.positions_of(ObjectType::Goal);
    match kind {
        TaskKind::SimpleCrossing | TaskKind::DistributionalShift => {
            let r = reachable(layout, |c| plain_floor(layout, c));
            (goal.len() == 1 && r.contains(&goal[0]))
                .then_some(())
                .ok_or_else(|| "goal unreachable".into())
        }
        TaskKind::DynamicObstacles => {
            let r = reachable(layout, |c| {
                plain_floor(layout, c) || g.get(c.0, c.1).object == ObjectType::Ball
            });
            (goal.len() == 1 && r.contains(&goal[0]))
                .then_some(())
                .ok_or_else(|| "goal unreachable ignoring obstacles".into())
        }
        TaskKind::DoorKey => {
            let before = reachable(layout, |c| plain_floor(layout, c));
            let keys = g.positions_of(ObjectType::Key);
            let doors = g.positions_of(ObjectType::Door);
            if keys.len() != 1 || doors.len() != 1 || goal.len() != 1 {
                return Err("expected one key, door and goal".into());
            }
            let (key, door) = (keys[0], doors[0]);
            if g.get(key.0, key.1).color != g.get(door.0, door.1).color {
                return Err("key and door colors differ".into());
            }
            if !borders(&before, key, layout) {
                return Err("key not reachable".into());
            }
            if before.contains(&goal[0]) {
                return Err("goal reachable without the door".into());
            }
            let after = reachable(layout, |c| plain_floor(layout, c) || c == door || c == key);
            after
                .contains(&goal[0])
                .then_some(())
                .ok_or_else(|| "goal unreachable through the door".into())
        }
        TaskKind::Unlock => {
            let r = reachable(layout, |c| plain_floor(layout, c));
            let keys = g.positions_of(ObjectType::Key);
            let doors = g.positions_of(ObjectType::Door);
            if keys.len() != 1 || doors.len() != 1 {
                return Err("expected one key and one door".into());
            }
            let (key, door) = (keys[0], doors[0]);
            let (k, d) = (g.get(key.0, key.1), g.get(door.0, door.1));
            if k.color != d.color || d.state != DoorState::Locked {
                return Err("door is not locked with the key's color".into());
            }
            // Once picked up, the key's cell can be walked through.
            let after = reachable(layout, |c| plain_floor(layout, c) || c == key);
            (borders(&r, key, layout) && borders(&after, door, layout))
                .then_some(())
                .ok_or_else(|| "key or door not reachable".into())
        }
        TaskKind::CustomFetch => {
            let r = reachable(layout, |c| plain_floor(layout, c));
            let target = g
                .positions_of(ObjectType::Key)
                .into_iter()
                .any(|c| g.get(c.0, c.1).color == Color::Yellow && borders(&r, c, layout));
            target
                .then_some(())
                .ok_or_else(|| "no reachable yellow key".into())
        }
    }
}
