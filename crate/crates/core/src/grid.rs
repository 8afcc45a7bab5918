//! Uniform spatial grid and its coupling to the wall positions.

use crate::medium::OscillatorArray;
use std::fmt;

/// Uniform grid on `[x_min, x_max]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self, GridError> {
        if n < 2 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(x_min < x_max) {
            return Err(GridError::EmptyExtent { x_min, x_max });
        }
        Ok(Grid { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `h = (x_max - x_min) / (n - 1)`.
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }
}

/// A grid together with the node index of each wall.
///
/// Construction fails unless every wall position sits on a grid node within
/// `1e-12 * h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    grid: Grid,
    wall_nodes: Vec<usize>,
}

impl Layout {
    pub fn new(grid: Grid, arr: &OscillatorArray) -> Result<Self, GridError> {
        let h = grid.spacing();
        let mut wall_nodes = Vec::with_capacity(arr.len());
        for &s in arr.positions() {
            let i = ((s - grid.x_min()) / h).round();
            if i < 0.0 || i as usize >= grid.len() {
                return Err(GridError::WallOutside { position: s });
            }
            let i = i as usize;
            if (grid.node(i) - s).abs() > 1e-12 * h {
                return Err(GridError::WallOffNode {
                    position: s,
                    nearest: grid.node(i),
                });
            }
            // interior nodes only: a wall on the boundary has no two-sided field
            if i == 0 || i == grid.len() - 1 {
                return Err(GridError::WallOutside { position: s });
            }
            wall_nodes.push(i);
        }
        Ok(Layout { grid, wall_nodes })
    }

    pub fn without_walls(grid: Grid) -> Self {
        Layout {
            grid,
            wall_nodes: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wall_nodes(&self) -> &[usize] {
        &self.wall_nodes
    }

    pub fn is_wall_node(&self, i: usize) -> bool {
        self.wall_nodes.contains(&i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    TooFewNodes(usize),
    EmptyExtent { x_min: f64, x_max: f64 },
    WallOffNode { position: f64, nearest: f64 },
    WallOutside { position: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::TooFewNodes(n) => write!(f, "grid needs at least 2 nodes, got {n}"),
            GridError::EmptyExtent { x_min, x_max } => {
                write!(f, "grid extent [{x_min}, {x_max}] is empty")
            }
            GridError::WallOffNode { position, nearest } => write!(
                f,
                "wall at {position} does not coincide with a grid node (nearest {nearest})"
            ),
            GridError::WallOutside { position } => {
                write!(f, "wall at {position} is outside the grid interior")
            }
        }
    }
}

impl std::error::Error for GridError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.node(2), 0.0);
        assert!(Grid::new(0.0, 0.0, 5).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn layout_requires_on_node_walls() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        let on = OscillatorArray::single(0.0, 1.0, 1.0).unwrap();
        assert!(Layout::new(g, &on).is_ok());
        let off = OscillatorArray::single(0.3, 1.0, 1.0).unwrap();
        assert!(matches!(
            Layout::new(g, &off),
            Err(GridError::WallOffNode { .. })
        ));
        let boundary = OscillatorArray::single(-1.0, 1.0, 1.0).unwrap();
        assert!(Layout::new(g, &boundary).is_err());
    }
}
