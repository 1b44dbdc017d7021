//! The six task families and their seeded layout generators.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use super::grid::{Color, Direction, DoorState, Grid, ObjectType, Tile};
use super::EnvError;
use crate::prng::Pcg32;

/// Integer task parameters keyed by name.
pub type Params = BTreeMap<String, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    SimpleCrossing,
    DistributionalShift,
    DynamicObstacles,
    CustomFetch,
    Unlock,
    DoorKey,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::SimpleCrossing,
        TaskKind::DistributionalShift,
        TaskKind::DynamicObstacles,
        TaskKind::CustomFetch,
        TaskKind::Unlock,
        TaskKind::DoorKey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::SimpleCrossing => "SimpleCrossing",
            TaskKind::DistributionalShift => "DistributionalShift",
            TaskKind::DynamicObstacles => "DynamicObstacles",
            TaskKind::CustomFetch => "CustomFetch",
            TaskKind::Unlock => "Unlock",
            TaskKind::DoorKey => "DoorKey",
        }
    }

    /// Parameter names the task expects, all required.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            TaskKind::SimpleCrossing => &["size", "crossings"],
            TaskKind::DistributionalShift => &["size", "lava_row"],
            TaskKind::DynamicObstacles => &["size", "n_obstacles"],
            TaskKind::CustomFetch => &["size", "n_targets", "n_objects"],
            TaskKind::Unlock => &["room_size"],
            TaskKind::DoorKey => &["size"],
        }
    }

    /// The registered (small, medium, large) variants as `(name, params)`.
    pub fn default_variants(self) -> [(&'static str, Params); 3] {
        fn p(pairs: &[(&str, i64)]) -> Params {
            pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
        }
        match self {
            TaskKind::SimpleCrossing => [
                ("S9N1", p(&[("size", 9), ("crossings", 1)])),
                ("S11N2", p(&[("size", 11), ("crossings", 2)])),
                ("S13N3", p(&[("size", 13), ("crossings", 3)])),
            ],
            TaskKind::DistributionalShift => [
                ("R1", p(&[("size", 9), ("lava_row", 1)])),
                ("R2", p(&[("size", 9), ("lava_row", 2)])),
                ("R3", p(&[("size", 9), ("lava_row", 3)])),
            ],
            TaskKind::DynamicObstacles => [
                ("S6N2", p(&[("size", 6), ("n_obstacles", 2)])),
                ("S8N4", p(&[("size", 8), ("n_obstacles", 4)])),
                ("S10N6", p(&[("size", 10), ("n_obstacles", 6)])),
            ],
            TaskKind::CustomFetch => [
                (
                    "S8T1N4",
                    p(&[("size", 8), ("n_targets", 1), ("n_objects", 4)]),
                ),
                (
                    "S10T2N6",
                    p(&[("size", 10), ("n_targets", 2), ("n_objects", 6)]),
                ),
                (
                    "S12T2N8",
                    p(&[("size", 12), ("n_targets", 2), ("n_objects", 8)]),
                ),
            ],
            TaskKind::Unlock => [
                ("R5", p(&[("room_size", 5)])),
                ("R7", p(&[("room_size", 7)])),
                ("R9", p(&[("room_size", 9)])),
            ],
            TaskKind::DoorKey => [
                ("S6", p(&[("size", 6)])),
                ("S8", p(&[("size", 8)])),
                ("S10", p(&[("size", 10)])),
            ],
        }
    }

    /// Params of a registered variant, if `variant` names one.
    pub fn variant_params(self, variant: &str) -> Option<Params> {
        self.default_variants()
            .into_iter()
            .find(|(name, _)| *name == variant)
            .map(|(_, params)| params)
    }

    /// Checks names and bounds, producing the typed configuration.
    pub fn configure(self, params: &Params) -> Result<TaskConfig, EnvError> {
        let allowed = self.param_names();
        if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(EnvError::UnknownParam {
                task: self.name().to_string(),
                param: extra.clone(),
            });
        }
        let get = |name: &'static str| -> Result<i64, EnvError> {
            params
                .get(name)
                .copied()
                .ok_or_else(|| EnvError::MissingParam {
                    task: self.name().to_string(),
                    param: name.to_string(),
                })
        };
        let bounded = |name: &'static str, min: i64, max: i64| -> Result<usize, EnvError> {
            let value = get(name)?;
            if value < min || value > max {
                return Err(EnvError::ParamOutOfBounds {
                    param: name.to_string(),
                    value,
                    min,
                    max,
                });
            }
            Ok(value as usize)
        };

        Ok(match self {
            TaskKind::SimpleCrossing => {
                let size = bounded("size", 5, 25)?;
                if size % 2 == 0 {
                    return Err(EnvError::ParamConstraint {
                        param: "size".into(),
                        value: size as i64,
                        rule: "must be odd".into(),
                    });
                }
                let crossings = bounded("crossings", 1, crossing_capacity(size) as i64)?;
                TaskConfig::SimpleCrossing { size, crossings }
            }
            TaskKind::DistributionalShift => {
                let size = bounded("size", 7, 15)?;
                let lava_row = bounded("lava_row", 1, size as i64 - 2)?;
                TaskConfig::DistributionalShift { size, lava_row }
            }
            TaskKind::DynamicObstacles => {
                let size = bounded("size", 5, 16)?;
                let n_obstacles = bounded("n_obstacles", 1, size as i64 / 2 + 1)?;
                TaskConfig::DynamicObstacles { size, n_obstacles }
            }
            TaskKind::CustomFetch => {
                let size = bounded("size", 5, 16)?;
                let interior = (size as i64 - 2) * (size as i64 - 2);
                let n_objects = bounded("n_objects", 1, interior / 2)?;
                let n_targets = bounded("n_targets", 1, n_objects as i64)?;
                TaskConfig::CustomFetch {
                    size,
                    n_targets,
                    n_objects,
                }
            }
            TaskKind::Unlock => TaskConfig::Unlock {
                room_size: bounded("room_size", 4, 12)?,
            },
            TaskKind::DoorKey => TaskConfig::DoorKey {
                size: bounded("size", 5, 16)?,
            },
        })
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| EnvError::UnknownTask(s.to_string()))
    }
}

/// Number of candidate walls in a SimpleCrossing grid of the given size.
fn crossing_capacity(size: usize) -> usize {
    2 * (2..size - 2).step_by(2).count()
}

/// What ends an episode successfully.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Step onto a goal tile.
    ReachGoal,
    /// Pick up a key of the given color.
    PickUpKey(Color),
    /// Open a locked door.
    OpenDoor,
}

/// Validated parameters of one task variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskConfig {
    SimpleCrossing {
        size: usize,
        crossings: usize,
    },
    DistributionalShift {
        size: usize,
        lava_row: usize,
    },
    DynamicObstacles {
        size: usize,
        n_obstacles: usize,
    },
    CustomFetch {
        size: usize,
        n_targets: usize,
        n_objects: usize,
    },
    Unlock {
        room_size: usize,
    },
    DoorKey {
        size: usize,
    },
}

/// A generated episode start: tiles plus agent pose and moving obstacles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layout {
    pub grid: Grid,
    pub agent_pos: (usize, usize),
    pub agent_dir: Direction,
    pub obstacles: Vec<(usize, usize)>,
}

impl TaskConfig {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskConfig::SimpleCrossing { .. } => TaskKind::SimpleCrossing,
            TaskConfig::DistributionalShift { .. } => TaskKind::DistributionalShift,
            TaskConfig::DynamicObstacles { .. } => TaskKind::DynamicObstacles,
            TaskConfig::CustomFetch { .. } => TaskKind::CustomFetch,
            TaskConfig::Unlock { .. } => TaskKind::Unlock,
            TaskConfig::DoorKey { .. } => TaskKind::DoorKey,
        }
    }

    pub fn dimensions(&self) -> (usize, usize) {
        match *self {
            TaskConfig::SimpleCrossing { size, .. }
            | TaskConfig::DistributionalShift { size, .. }
            | TaskConfig::DynamicObstacles { size, .. }
            | TaskConfig::CustomFetch { size, .. }
            | TaskConfig::DoorKey { size } => (size, size),
            TaskConfig::Unlock { room_size } => (2 * room_size - 1, room_size),
        }
    }

    pub fn objective(&self) -> Objective {
        match self {
            TaskConfig::CustomFetch { .. } => Objective::PickUpKey(Color::Yellow),
            TaskConfig::Unlock { .. } => Objective::OpenDoor,
            _ => Objective::ReachGoal,
        }
    }

    /// Draws a fresh layout from `rng`.
    pub fn generate(&self, rng: &mut Pcg32) -> Layout {
        match *self {
            TaskConfig::SimpleCrossing { size, crossings } => simple_crossing(rng, size, crossings),
            TaskConfig::DistributionalShift { size, lava_row } => {
                distributional_shift(size, lava_row)
            }
            TaskConfig::DynamicObstacles { size, n_obstacles } => {
                dynamic_obstacles(rng, size, n_obstacles)
            }
            TaskConfig::CustomFetch {
                size,
                n_targets,
                n_objects,
            } => custom_fetch(rng, size, n_targets, n_objects),
            TaskConfig::Unlock { room_size } => unlock(rng, room_size),
            TaskConfig::DoorKey { size } => door_key(rng, size),
        }
    }
}

fn range(rng: &mut Pcg32, lo: usize, hi: usize) -> usize {
    debug_assert!(hi > lo);
    lo + rng.index(hi - lo)
}

/// Uniform empty cell in `[x0, x1) × [y0, y1)` other than the excluded ones.
fn random_empty_cell(
    rng: &mut Pcg32,
    grid: &Grid,
    (x0, x1): (usize, usize),
    (y0, y1): (usize, usize),
    exclude: &[(usize, usize)],
) -> (usize, usize) {
    loop {
        let pos = (range(rng, x0, x1), range(rng, y0, y1));
        if grid.get(pos.0, pos.1) == Tile::EMPTY && !exclude.contains(&pos) {
            return pos;
        }
    }
}

fn random_dir(rng: &mut Pcg32) -> Direction {
    Direction::from_index(rng.below(4))
}

fn simple_crossing(rng: &mut Pcg32, size: usize, crossings: usize) -> Layout {
    #[derive(Clone, Copy, PartialEq)]
    enum Wall {
        Vertical(usize),
        Horizontal(usize),
    }
    let mut grid = Grid::walled(size, size);
    let mut walls: Vec<Wall> = (2..size - 2)
        .step_by(2)
        .map(Wall::Vertical)
        .chain((2..size - 2).step_by(2).map(Wall::Horizontal))
        .collect();
    rng.shuffle(&mut walls);
    walls.truncate(crossings);

    let mut xs: Vec<usize> = walls
        .iter()
        .filter_map(|w| match *w {
            Wall::Vertical(x) => Some(x),
            _ => None,
        })
        .collect();
    let mut ys: Vec<usize> = walls
        .iter()
        .filter_map(|w| match *w {
            Wall::Horizontal(y) => Some(y),
            _ => None,
        })
        .collect();
    xs.sort_unstable();
    ys.sort_unstable();
    for &x in &xs {
        grid.vertical_wall(x, 1, size - 2);
    }
    for &y in &ys {
        grid.horizontal_wall(1, y, size - 2);
    }

    // Route from the north-west room to the south-east room, punching one
    // gap per wall crossed.
    let mut path: Vec<bool> = std::iter::repeat_n(true, xs.len())
        .chain(std::iter::repeat_n(false, ys.len()))
        .collect();
    rng.shuffle(&mut path);
    let limits_x: Vec<usize> = std::iter::once(0)
        .chain(xs.iter().copied())
        .chain([size - 1])
        .collect();
    let limits_y: Vec<usize> = std::iter::once(0)
        .chain(ys.iter().copied())
        .chain([size - 1])
        .collect();
    let (mut room_x, mut room_y) = (0, 0);
    for eastwards in path {
        let (gx, gy) = if eastwards {
            let gx = limits_x[room_x + 1];
            let gy = range(rng, limits_y[room_y] + 1, limits_y[room_y + 1]);
            room_x += 1;
            (gx, gy)
        } else {
            let gx = range(rng, limits_x[room_x] + 1, limits_x[room_x + 1]);
            let gy = limits_y[room_y + 1];
            room_y += 1;
            (gx, gy)
        };
        grid.set(gx, gy, Tile::EMPTY);
    }

    grid.set(size - 2, size - 2, Tile::GOAL);
    Layout {
        grid,
        agent_pos: (1, 1),
        agent_dir: Direction::East,
        obstacles: Vec::new(),
    }
}

fn distributional_shift(size: usize, lava_row: usize) -> Layout {
    let mut grid = Grid::walled(size, size);
    for x in 3..=size - 4 {
        grid.set(x, lava_row, Tile::LAVA);
    }
    grid.set(size - 2, 1, Tile::GOAL);
    Layout {
        grid,
        agent_pos: (1, 1),
        agent_dir: Direction::East,
        obstacles: Vec::new(),
    }
}

fn dynamic_obstacles(rng: &mut Pcg32, size: usize, n_obstacles: usize) -> Layout {
    let mut grid = Grid::walled(size, size);
    let agent_pos = (1, 1);
    grid.set(size - 2, size - 2, Tile::GOAL);
    let mut obstacles = Vec::with_capacity(n_obstacles);
    for _ in 0..n_obstacles {
        let pos = random_empty_cell(rng, &grid, (1, size - 1), (1, size - 1), &[agent_pos]);
        grid.set(pos.0, pos.1, Tile::object(ObjectType::Ball, Color::Blue));
        obstacles.push(pos);
    }
    Layout {
        grid,
        agent_pos,
        agent_dir: Direction::East,
        obstacles,
    }
}

fn custom_fetch(rng: &mut Pcg32, size: usize, n_targets: usize, n_objects: usize) -> Layout {
    const DISTRACTOR_KEY_COLORS: [Color; 5] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Grey,
    ];
    loop {
        let mut grid = Grid::walled(size, size);
        for i in 0..n_objects {
            let tile = if i < n_targets {
                Tile::object(ObjectType::Key, Color::Yellow)
            } else if rng.below(2) == 0 {
                Tile::object(ObjectType::Key, DISTRACTOR_KEY_COLORS[rng.index(5)])
            } else {
                Tile::object(ObjectType::Ball, Color::ALL[rng.index(6)])
            };
            let pos = random_empty_cell(rng, &grid, (1, size - 1), (1, size - 1), &[]);
            grid.set(pos.0, pos.1, tile);
        }
        let agent_pos = random_empty_cell(rng, &grid, (1, size - 1), (1, size - 1), &[]);
        let agent_dir = random_dir(rng);
        // Objects can wall a target into a corner; resample those layouts.
        if target_reachable(&grid, agent_pos) {
            return Layout {
                grid,
                agent_pos,
                agent_dir,
                obstacles: Vec::new(),
            };
        }
    }
}

/// Whether some yellow key borders a cell reachable over empty tiles.
fn target_reachable(grid: &Grid, start: (usize, usize)) -> bool {
    let mut seen = vec![false; grid.width() * grid.height()];
    let mut queue = VecDeque::from([start]);
    seen[start.1 * grid.width() + start.0] = true;
    while let Some((x, y)) = queue.pop_front() {
        for d in Direction::ALL {
            let (dx, dy) = d.delta();
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            let tile = grid.get_or_wall(nx, ny);
            if tile.object == ObjectType::Key && tile.color == Color::Yellow {
                return true;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if tile.is_passable() && !seen[ny * grid.width() + nx] {
                seen[ny * grid.width() + nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    false
}

fn unlock(rng: &mut Pcg32, room_size: usize) -> Layout {
    let width = 2 * room_size - 1;
    let mut grid = Grid::walled(width, room_size);
    let split = room_size - 1;
    grid.vertical_wall(split, 0, room_size);
    let color = Color::ALL[rng.index(6)];
    let door_y = range(rng, 1, room_size - 1);
    grid.set(split, door_y, Tile::door(color, DoorState::Locked));
    let key = random_empty_cell(rng, &grid, (1, split), (1, room_size - 1), &[]);
    grid.set(key.0, key.1, Tile::object(ObjectType::Key, color));
    let agent_pos = random_empty_cell(rng, &grid, (1, split), (1, room_size - 1), &[]);
    Layout {
        grid,
        agent_pos,
        agent_dir: random_dir(rng),
        obstacles: Vec::new(),
    }
}

fn door_key(rng: &mut Pcg32, size: usize) -> Layout {
    let mut grid = Grid::walled(size, size);
    grid.set(size - 2, size - 2, Tile::GOAL);
    let split = range(rng, 2, size - 2);
    grid.vertical_wall(split, 0, size);
    let door_y = range(rng, 1, size - 1);
    grid.set(split, door_y, Tile::door(Color::Yellow, DoorState::Locked));
    let agent_pos = random_empty_cell(rng, &grid, (1, split), (1, size - 1), &[]);
    let key = random_empty_cell(rng, &grid, (1, split), (1, size - 1), &[agent_pos]);
    grid.set(key.0, key.1, Tile::object(ObjectType::Key, Color::Yellow));
    Layout {
        grid,
        agent_pos,
        agent_dir: random_dir(rng),
        obstacles: Vec::new(),
    }
}
