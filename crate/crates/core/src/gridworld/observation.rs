use serde::{Deserialize, Serialize};

/// Side length of the egocentric view.
pub const VIEW_SIZE: usize = 7;

/// Egocentric snapshot handed to agents.
///
/// `view[row][col]` holds the `[object, color, state]` bytes of one cell.
/// The agent stands at `row = 6, col = 3` facing towards row 0; columns grow
/// to the agent's right. Nothing is occluded and cells outside the grid read
/// as walls.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub view: [[[u8; 3]; VIEW_SIZE]; VIEW_SIZE],
    pub carried_type: u8,
    pub carried_color: u8,
}

impl Observation {
    /// Length of [`Observation::to_bytes`].
    pub const BYTE_LEN: usize = VIEW_SIZE * VIEW_SIZE * 3 + 2;

    /// Row-major view bytes followed by the carried type and color.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::BYTE_LEN);
        for row in &self.view {
            for cell in row {
                out.extend_from_slice(cell);
            }
        }
        out.push(self.carried_type);
        out.push(self.carried_color);
        out
    }

    /// The cell directly in front of the agent.
    pub fn ahead(&self) -> [u8; 3] {
        self.view[VIEW_SIZE - 2][VIEW_SIZE / 2]
    }
}
