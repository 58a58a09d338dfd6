use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Cell, GridWorld};

/// Hop counts from a source set over the free cells of a world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    hops: Vec<Option<u32>>,
}

impl DistanceField {
    /// Multi-source Dijkstra with unit edge weights.
    pub(super) fn compute(world: &GridWorld, sources: &[Cell]) -> Self {
        let (width, height) = (world.width(), world.height());
        let mut hops = vec![None; width * height];
        let mut open = BinaryHeap::new();
        for &s in sources {
            if world.is_free(s) {
                let i = s.y as usize * width + s.x as usize;
                hops[i] = Some(0);
                open.push(Reverse((0u32, s.y, s.x)));
            }
        }
        while let Some(Reverse((cost, y, x))) = open.pop() {
            let here = Cell::new(x, y);
            if hops[y as usize * width + x as usize].is_some_and(|h| h < cost) {
                continue;
            }
            for n in here.neighbours() {
                if !world.is_free(n) {
                    continue;
                }
                let i = n.y as usize * width + n.x as usize;
                let next = cost + 1;
                if hops[i].is_none_or(|h| next < h) {
                    hops[i] = Some(next);
                    open.push(Reverse((next, n.y, n.x)));
                }
            }
        }
        Self { width, height, hops }
    }

    pub fn hops(&self, c: Cell) -> Option<u32> {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width || c.y as usize >= self.height {
            return None;
        }
        self.hops[c.y as usize * self.width + c.x as usize]
    }

    pub fn meters(&self, c: Cell, cell_size: f64) -> Option<f64> {
        self.hops(c).map(|h| h as f64 * cell_size)
    }

    /// Neighbour of `c` that is one hop closer to the source set, preferring
    /// east, north, west, south in that order.
    pub fn downhill(&self, c: Cell) -> Option<Cell> {
        let here = self.hops(c)?;
        c.neighbours()
            .into_iter()
            .find(|&n| self.hops(n).is_some_and(|h| h + 1 == here))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Cell, GridWorld, Heading, Pose};
    use std::collections::VecDeque;

    fn bfs(world: &GridWorld, a: Cell) -> Vec<Option<u32>> {
        let mut d = vec![None; world.width() * world.height()];
        let idx = |c: Cell| c.y as usize * world.width() + c.x as usize;
        d[idx(a)] = Some(0);
        let mut q = VecDeque::from([a]);
        while let Some(c) = q.pop_front() {
            let here = d[idx(c)].unwrap();
            for n in [c.offset(1, 0), c.offset(-1, 0), c.offset(0, 1), c.offset(0, -1)] {
                if world.is_free(n) && d[idx(n)].is_none() {
                    d[idx(n)] = Some(here + 1);
                    q.push_back(n);
                }
            }
        }
        d
    }

    #[test]
    fn detour_around_wall() {
        // Target at (3,1) is behind a wall spur; the path must go around it.
        let w = GridWorld::from_ascii(&[
            "#######", //
            "#.#.#.#", //
            "#.#.#.#", //
            "#.#.#.#", //
            "#.....#", //
            "#######",
        ], &[('.', "hallway")], &[], Pose::new(Cell::new(1, 1), Heading::new(0).unwrap()), "sofa")
        .unwrap();
        let field = w.distance_field(&[Cell::new(1, 1)]);
        let oracle = bfs(&w, Cell::new(1, 1));
        // 3 down, 2 across, 3 up.
        assert_eq!(oracle[1 * 7 + 3], Some(8));
        assert_eq!(field.hops(Cell::new(3, 1)), Some(8));
        // 3 down, 4 across, 3 up = 10 hops = 2.5 m.
        assert_eq!(oracle[1 * 7 + 5], Some(10));
        assert_eq!(w.shortest_path_length(Cell::new(1, 1), Cell::new(5, 1)).unwrap(), 2.5);
        assert_eq!(field.downhill(Cell::new(1, 2)), Some(Cell::new(1, 1)));
        assert_eq!(field.downhill(Cell::new(1, 1)), None);
    }
}
