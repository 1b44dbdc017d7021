use super::grid::{Action, Direction, DoorState, Grid, ObjectType, Tile};
use super::observation::{Observation, VIEW_SIZE};
use super::tasks::{Layout, Objective, TaskConfig, TaskKind};
use super::EnvError;
use crate::prng::Pcg32;

/// Reward scale lost over a full episode; success pays `1 - 0.9 * t / T`.
pub const STEP_PENALTY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
}

/// One tile-grid environment instance.
#[derive(Debug, Clone)]
pub struct GridWorld {
    config: TaskConfig,
    fixed_layout: bool,
    initial: Layout,
    layout: Layout,
    carried: Option<Tile>,
    step_count: u64,
    max_steps: u64,
    done: bool,
    rng: Pcg32,
}

impl GridWorld {
    /// Builds an environment whose layouts are drawn from `seed`.
    pub fn new(config: TaskConfig, fixed_layout: bool, seed: u64) -> GridWorld {
        let mut rng = Pcg32::from_seed(seed);
        let initial = config.generate(&mut rng);
        let (w, h) = config.dimensions();
        GridWorld {
            config,
            fixed_layout,
            layout: initial.clone(),
            initial,
            carried: None,
            step_count: 0,
            max_steps: 4 * (w * h) as u64,
            done: false,
            rng,
        }
    }

    /// Starts a new episode and returns its first observation.
    ///
    /// With a fixed layout every episode starts from the layout generated at
    /// construction; otherwise a fresh layout is drawn from the env's stream.
    pub fn reset(&mut self) -> Observation {
        self.layout = if self.fixed_layout {
            self.initial.clone()
        } else {
            self.config.generate(&mut self.rng)
        };
        self.carried = None;
        self.step_count = 0;
        self.done = false;
        self.encode_observation()
    }

    pub fn step(&mut self, action: u8) -> Result<StepResult, EnvError> {
        let action = Action::try_from(action).map_err(EnvError::InvalidAction)?;
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        self.step_count += 1;

        let outcome = self.apply(action);
        let outcome = match outcome {
            Outcome::Continue if self.config.kind() == TaskKind::DynamicObstacles => {
                self.move_obstacles()
            }
            other => other,
        };

        let (reward, done) = match outcome {
            Outcome::Success => (self.success_reward(), true),
            Outcome::Collision => (-1.0, true),
            Outcome::Lava => (0.0, true),
            Outcome::Continue if self.step_count >= self.max_steps => (0.0, true),
            Outcome::Continue => (0.0, false),
        };
        self.done = done;
        Ok(StepResult {
            observation: self.encode_observation(),
            reward,
            done,
        })
    }

    fn success_reward(&self) -> f64 {
        1.0 - STEP_PENALTY * (self.step_count as f64 / self.max_steps as f64)
    }

    fn front(&self) -> (i64, i64) {
        let (dx, dy) = self.layout.agent_dir.delta();
        let (x, y) = self.layout.agent_pos;
        (x as i64 + dx, y as i64 + dy)
    }

    fn apply(&mut self, action: Action) -> Outcome {
        let (fx, fy) = self.front();
        let front = self.layout.grid.get_or_wall(fx, fy);
        match action {
            Action::TurnLeft => self.layout.agent_dir = self.layout.agent_dir.left(),
            Action::TurnRight => self.layout.agent_dir = self.layout.agent_dir.right(),
            Action::Forward => {
                if front.is_passable() {
                    self.layout.agent_pos = (fx as usize, fy as usize);
                    match front.object {
                        ObjectType::Goal if self.config.objective() == Objective::ReachGoal => {
                            return Outcome::Success
                        }
                        ObjectType::Lava => return Outcome::Lava,
                        _ => {}
                    }
                }
            }
            Action::PickUp => {
                let is_obstacle = self.layout.obstacles.contains(&(fx as usize, fy as usize));
                if self.carried.is_none() && front.is_pickable() && !is_obstacle {
                    self.carried = Some(front);
                    self.layout.grid.set(fx as usize, fy as usize, Tile::EMPTY);
                    if let Objective::PickUpKey(color) = self.config.objective() {
                        if front.object == ObjectType::Key && front.color == color {
                            return Outcome::Success;
                        }
                    }
                }
            }
            Action::Drop => {
                if let Some(tile) = self.carried {
                    if front == Tile::EMPTY {
                        self.layout.grid.set(fx as usize, fy as usize, tile);
                        self.carried = None;
                    }
                }
            }
            Action::Toggle => {
                if front.object == ObjectType::Door {
                    let next = match front.state {
                        DoorState::Locked => {
                            let has_key = self.carried.is_some_and(|c| {
                                c.object == ObjectType::Key && c.color == front.color
                            });
                            if has_key {
                                DoorState::Open
                            } else {
                                DoorState::Locked
                            }
                        }
                        DoorState::Closed => DoorState::Open,
                        DoorState::Open => DoorState::Closed,
                        DoorState::None => DoorState::None,
                    };
                    self.layout
                        .grid
                        .set(fx as usize, fy as usize, Tile::door(front.color, next));
                    if front.state == DoorState::Locked
                        && next == DoorState::Open
                        && self.config.objective() == Objective::OpenDoor
                    {
                        return Outcome::Success;
                    }
                }
            }
            Action::Done => {}
        }
        Outcome::Continue
    }

    /// Each obstacle in list order moves to a uniformly chosen free neighbour.
    fn move_obstacles(&mut self) -> Outcome {
        let mut collided = false;
        for i in 0..self.layout.obstacles.len() {
            let (x, y) = self.layout.obstacles[i];
            let free: Vec<(usize, usize)> = Direction::ALL
                .iter()
                .map(|d| {
                    let (dx, dy) = d.delta();
                    (x as i64 + dx, y as i64 + dy)
                })
                .filter(|&(nx, ny)| self.layout.grid.get_or_wall(nx, ny) == Tile::EMPTY)
                .map(|(nx, ny)| (nx as usize, ny as usize))
                .collect();
            if free.is_empty() {
                continue;
            }
            let to = free[self.rng.index(free.len())];
            let ball = self.layout.grid.get(x, y);
            self.layout.grid.set(x, y, Tile::EMPTY);
            self.layout.grid.set(to.0, to.1, ball);
            self.layout.obstacles[i] = to;
            collided |= to == self.layout.agent_pos;
        }
        if collided {
            Outcome::Collision
        } else {
            Outcome::Continue
        }
    }

    /// Egocentric 7×7 view, rotated so the agent faces up.
    pub fn encode_observation(&self) -> Observation {
        let (ax, ay) = self.layout.agent_pos;
        let (fx, fy) = self.layout.agent_dir.delta();
        let (rx, ry) = self.layout.agent_dir.right().delta();
        let half = (VIEW_SIZE / 2) as i64;
        let mut view = [[[0u8; 3]; VIEW_SIZE]; VIEW_SIZE];
        for (row, cells) in view.iter_mut().enumerate() {
            let ahead = (VIEW_SIZE - 1 - row) as i64;
            for (col, cell) in cells.iter_mut().enumerate() {
                let side = col as i64 - half;
                let x = ax as i64 + ahead * fx + side * rx;
                let y = ay as i64 + ahead * fy + side * ry;
                *cell = self.layout.grid.get_or_wall(x, y).encode();
            }
        }
        let carried = self.carried.unwrap_or(Tile::EMPTY);
        Observation {
            view,
            carried_type: carried.object as u8,
            carried_color: carried.color as u8,
        }
    }

    /// One character per tile, top row first, agent drawn as an arrow.
    pub fn render_ascii(&self) -> String {
        let grid = &self.layout.grid;
        let mut out = String::with_capacity((grid.width() + 1) * grid.height());
        for y in 0..grid.height() {
            for x in 0..grid.width() {
                if (x, y) == self.layout.agent_pos {
                    out.push(self.layout.agent_dir.glyph());
                } else {
                    out.push(grid.get(x, y).glyph());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.layout.grid
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn agent_pos(&self) -> (usize, usize) {
        self.layout.agent_pos
    }

    pub fn agent_dir(&self) -> Direction {
        self.layout.agent_dir
    }

    pub fn carried(&self) -> Option<Tile> {
        self.carried
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Replaces the current layout; used to build hand-made fixtures.
    pub fn set_layout(&mut self, layout: Layout) {
        self.layout = layout;
        self.carried = None;
        self.step_count = 0;
        self.done = false;
    }

    /// Overrides the episode horizon.
    pub fn set_max_steps(&mut self, max_steps: u64) {
        assert!(max_steps > 0);
        self.max_steps = max_steps;
    }

    pub fn set_carried(&mut self, tile: Option<Tile>) {
        self.carried = tile;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Continue,
    Success,
    Collision,
    Lava,
}
