use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ObjectType {
    Empty = 0,
    Wall = 1,
    Floor = 2,
    Door = 3,
    Key = 4,
    Ball = 5,
    Box = 6,
    Goal = 7,
    Lava = 8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Color {
    None = 0,
    Red = 1,
    Green = 2,
    Blue = 3,
    Purple = 4,
    Yellow = 5,
    Grey = 6,
}

impl Color {
    /// Every real color, in encoding order.
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum DoorState {
    None = 0,
    Open = 1,
    Closed = 2,
    Locked = 3,
}

/// Content of one grid cell: zero or one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tile {
    pub object: ObjectType,
    pub color: Color,
    pub state: DoorState,
}

impl Tile {
    pub const EMPTY: Tile = Tile {
        object: ObjectType::Empty,
        color: Color::None,
        state: DoorState::None,
    };
    pub const WALL: Tile = Tile {
        object: ObjectType::Wall,
        color: Color::Grey,
        state: DoorState::None,
    };
    pub const GOAL: Tile = Tile {
        object: ObjectType::Goal,
        color: Color::Green,
        state: DoorState::None,
    };
    pub const LAVA: Tile = Tile {
        object: ObjectType::Lava,
        color: Color::Red,
        state: DoorState::None,
    };

    /// A non-door object. Door state stays `None`.
    pub fn object(object: ObjectType, color: Color) -> Tile {
        debug_assert_ne!(object, ObjectType::Door);
        Tile {
            object,
            color,
            state: DoorState::None,
        }
    }

    pub fn door(color: Color, state: DoorState) -> Tile {
        debug_assert_ne!(state, DoorState::None);
        Tile {
            object: ObjectType::Door,
            color,
            state,
        }
    }

    /// Whether the agent may stand on this tile.
    pub fn is_passable(&self) -> bool {
        match self.object {
            ObjectType::Empty | ObjectType::Floor | ObjectType::Goal | ObjectType::Lava => true,
            ObjectType::Door => self.state == DoorState::Open,
            _ => false,
        }
    }

    pub fn is_pickable(&self) -> bool {
        matches!(
            self.object,
            ObjectType::Key | ObjectType::Ball | ObjectType::Box
        )
    }

    /// The `[object, color, state]` byte triple used in observations.
    pub fn encode(&self) -> [u8; 3] {
        [self.object as u8, self.color as u8, self.state as u8]
    }

    /// One character per tile, used by layout dumps.
    pub fn glyph(&self) -> char {
        match self.object {
            ObjectType::Empty => '.',
            ObjectType::Wall => '#',
            ObjectType::Floor => '_',
            ObjectType::Door => match self.state {
                DoorState::Open => '/',
                DoorState::Locked => 'L',
                _ => 'D',
            },
            ObjectType::Key => 'K',
            ObjectType::Ball => 'O',
            ObjectType::Box => 'B',
            ObjectType::Goal => 'G',
            ObjectType::Lava => '~',
        }
    }
}

impl Default for Tile {
    fn default() -> Self {
        Tile::EMPTY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Direction {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn from_index(i: u32) -> Direction {
        Self::ALL[(i % 4) as usize]
    }

    pub fn left(self) -> Direction {
        Self::from_index(self as u32 + 3)
    }

    pub fn right(self) -> Direction {
        Self::from_index(self as u32 + 1)
    }

    /// Unit step `(dx, dy)` with y growing southwards.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Direction::North => '^',
            Direction::East => '>',
            Direction::South => 'v',
            Direction::West => '<',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    PickUp = 3,
    Drop = 4,
    Toggle = 5,
    Done = 6,
}

impl Action {
    pub const COUNT: usize = 7;
}

impl TryFrom<u8> for Action {
    type Error = u8;

    fn try_from(v: u8) -> Result<Self, u8> {
        Ok(match v {
            0 => Action::TurnLeft,
            1 => Action::TurnRight,
            2 => Action::Forward,
            3 => Action::PickUp,
            4 => Action::Drop,
            5 => Action::Toggle,
            6 => Action::Done,
            other => return Err(other),
        })
    }
}

/// Row-major tile storage; `(0, 0)` is the north-west corner.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Grid {
        Grid {
            width,
            height,
            tiles: vec![Tile::EMPTY; width * height],
        }
    }

    /// Empty grid surrounded by a wall border.
    pub fn walled(width: usize, height: usize) -> Grid {
        let mut grid = Grid::new(width, height);
        grid.horizontal_wall(0, 0, width);
        grid.horizontal_wall(0, height - 1, width);
        grid.vertical_wall(0, 0, height);
        grid.vertical_wall(width - 1, 0, height);
        grid
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Tile {
        self.tiles[y * self.width + x]
    }

    /// Out-of-bounds reads see a wall.
    pub fn get_or_wall(&self, x: i64, y: i64) -> Tile {
        if self.in_bounds(x, y) {
            self.get(x as usize, y as usize)
        } else {
            Tile::WALL
        }
    }

    pub fn set(&mut self, x: usize, y: usize, tile: Tile) {
        self.tiles[y * self.width + x] = tile;
    }

    pub fn horizontal_wall(&mut self, x: usize, y: usize, len: usize) {
        for i in x..x + len {
            self.set(i, y, Tile::WALL);
        }
    }

    pub fn vertical_wall(&mut self, x: usize, y: usize, len: usize) {
        for j in y..y + len {
            self.set(x, j, Tile::WALL);
        }
    }

    /// Number of tiles holding `object`.
    pub fn count(&self, object: ObjectType) -> usize {
        self.tiles.iter().filter(|t| t.object == object).count()
    }

    /// Positions of tiles holding `object`, row-major.
    pub fn positions_of(&self, object: ObjectType) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.get(x, y).object == object)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turning_cycles() {
        for d in Direction::ALL {
            assert_eq!(d.left().right(), d);
            assert_eq!(d.right().right().right().right(), d);
        }
        assert_eq!(Direction::North.right(), Direction::East);
        assert_eq!(Direction::North.left(), Direction::West);
    }

    #[test]
    fn action_range() {
        for a in 0..7u8 {
            assert_eq!(Action::try_from(a).unwrap() as u8, a);
        }
        assert_eq!(Action::try_from(7), Err(7));
    }

    #[test]
    fn only_doors_carry_state() {
        let door = Tile::door(Color::Red, DoorState::Locked);
        assert_eq!(door.encode(), [3, 1, 3]);
        assert_eq!(
            Tile::object(ObjectType::Key, Color::Yellow).state,
            DoorState::None
        );
        assert!(!door.is_passable());
        assert!(Tile::door(Color::Red, DoorState::Open).is_passable());
    }

    #[test]
    fn walled_grid_border() {
        let g = Grid::walled(5, 4);
        assert_eq!(g.count(ObjectType::Wall), 2 * 5 + 2 * 2);
        assert_eq!(g.get_or_wall(-1, 2), Tile::WALL);
        assert_eq!(g.get(2, 2), Tile::EMPTY);
    }
}
