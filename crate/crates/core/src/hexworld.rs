//! Hexagonal-grid robot benchmark.
//!
//! Cells are flat-top hexes in `nx` offset columns of `ny` cells; odd
//! columns (0-based) sit half a cell lower. Row 0 is the top row and north
//! points up. A state is a cell plus one of four orientations, numbered
//! `cell * 4 + orientation` with orientations in the order N, E, S, W.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::SeedableRng;
use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{LabelSet, MdpstModel, ModelError};

#[derive(Debug, Error)]
pub enum HexError {
    #[error("grid {nx}x{ny} too small (need nx >= 6, ny >= 3)")]
    TooSmall { nx: usize, ny: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("cell {0} outside the grid")]
    CellOutOfRange(usize),
    #[error("base label {0} collides with another label")]
    LabelCollision(String),
    #[error("base {label} overlaps obstacle cell {cell}")]
    BaseOnObstacle { label: String, cell: usize },
    #[error("probability {0} outside (0, 1]")]
    BadProbability(f64),
    #[error("layout json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub const OBSTACLE_ATOM: &str = "obs";
pub const ACTIONS: [&str; 4] = ["FR", "BK", "TR", "TL"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    N,
    E,
    S,
    W,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::N, Orientation::E, Orientation::S, Orientation::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn right(self) -> Self {
        Self::ALL[(self.index() + 1) % 4]
    }

    pub fn left(self) -> Self {
        Self::ALL[(self.index() + 3) % 4]
    }

    fn degrees(self) -> i32 {
        match self {
            Orientation::E => 0,
            Orientation::N => 90,
            Orientation::W => 180,
            Orientation::S => 270,
        }
    }

    pub fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexLayout {
    pub nx: usize,
    pub ny: usize,
    pub obstacles: BTreeSet<usize>,
    pub bases: BTreeMap<String, BTreeSet<usize>>,
}

impl HexLayout {
    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell id of 1-based `(col, row)`.
    pub fn cell(&self, col: usize, row: usize) -> usize {
        (row - 1) * self.nx + (col - 1)
    }

    /// 1-based `(col, row)` of a cell id.
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx + 1, cell / self.nx + 1)
    }

    pub fn validate(&self) -> Result<(), HexError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(HexError::EmptyGrid);
        }
        let n = self.num_cells();
        for &c in self.obstacles.iter().chain(self.bases.values().flatten()) {
            if c >= n {
                return Err(HexError::CellOutOfRange(c));
            }
        }
        for (label, cells) in &self.bases {
            if label == OBSTACLE_ATOM {
                return Err(HexError::LabelCollision(label.clone()));
            }
            if let Some(&cell) = cells.intersection(&self.obstacles).next() {
                return Err(HexError::BaseOnObstacle {
                    label: label.clone(),
                    cell,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("layout serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HexError> {
        let l: HexLayout = serde_json::from_str(text)?;
        l.validate()?;
        Ok(l)
    }

    /// The six neighbours in counterclockwise order starting at 30°
    /// (NE, N, NW, SW, S, SE); `None` when off-grid.
    pub fn neighbours(&self, cell: usize) -> [Option<usize>; 6] {
        let (c, r) = (cell % self.nx, cell / self.nx);
        let (c, r) = (c as i64, r as i64);
        let (up, down) = if c % 2 == 0 { (r - 1, r) } else { (r, r + 1) };
        let at = |cc: i64, rr: i64| {
            (cc >= 0 && rr >= 0 && (cc as usize) < self.nx && (rr as usize) < self.ny)
                .then(|| rr as usize * self.nx + cc as usize)
        };
        [
            at(c + 1, up),
            at(c, r - 1),
            at(c - 1, up),
            at(c - 1, down),
            at(c, r + 1),
            at(c + 1, down),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HexConfig {
    pub layout: HexLayout,
    pub p_forward: f64,
    pub p_back: f64,
    pub p_right: f64,
    pub p_left: f64,
}

impl HexConfig {
    pub fn new(layout: HexLayout) -> Self {
        Self {
            layout,
            p_forward: 0.8,
            p_back: 0.7,
            p_right: 0.9,
            p_left: 0.9,
        }
    }
}

pub fn state_id(cell: usize, o: Orientation) -> usize {
    cell * 4 + o.index()
}

pub fn decode_state(s: usize) -> (usize, Orientation) {
    (s / 4, Orientation::ALL[s % 4])
}

/// Neighbour slots (0..6, at `30 + 60·i` degrees) making up the success set
/// when heading toward `deg`, plus the counterclockwise and clockwise drift
/// slots just outside it.
fn heading_slots(deg: i32) -> (Vec<usize>, usize, usize) {
    // signed offset of each slot from the heading, in (-180, 180]
    let off = |i: usize| 180 - (180 - (30 + 60 * i as i32 - deg)).rem_euclid(360);
    let cone: Vec<usize> = (0..6).filter(|&i| off(i).abs() <= 45).collect();
    let ccw = (0..6).filter(|&i| off(i) > 45).min_by_key(|&i| off(i)).expect("six slots");
    let cw = (0..6).filter(|&i| off(i) < -45).max_by_key(|&i| off(i)).expect("six slots");
    (cone, ccw, cw)
}

/// Builds the model; the initial state is cell (1,1) facing north.
pub fn generate_hexworld(cfg: &HexConfig) -> Result<MdpstModel, HexError> {
    let layout = &cfg.layout;
    layout.validate()?;
    for p in [cfg.p_forward, cfg.p_back, cfg.p_right, cfg.p_left] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(HexError::BadProbability(p));
        }
    }
    let mut props: Vec<String> = layout.bases.keys().cloned().collect();
    props.push(OBSTACLE_ATOM.into());
    let mut b = MdpstModel::builder(props, ACTIONS.iter().map(|a| a.to_string()).collect());
    for cell in 0..layout.num_cells() {
        let mut label = LabelSet::new();
        for (name, cells) in &layout.bases {
            if cells.contains(&cell) {
                label.insert(name.clone());
            }
        }
        if layout.obstacles.contains(&cell) {
            label.insert(OBSTACLE_ATOM);
        }
        let (col, row) = layout.coords(cell);
        for o in Orientation::ALL {
            b.add_state(Some(format!("c{col}r{row}{}", o.letter())), label.clone());
        }
    }
    for cell in 0..layout.num_cells() {
        let nb = layout.neighbours(cell);
        // off-grid moves clamp to the current cell
        let land = |slot: usize| nb[slot].unwrap_or(cell);
        for o in Orientation::ALL {
            let s = state_id(cell, o);
            for (a, deg, p) in [(0, o.degrees(), cfg.p_forward), (1, o.degrees() + 180, cfg.p_back)] {
                let (cone, ccw, cw) = heading_slots(deg);
                let success: BTreeSet<usize> = cone.iter().map(|&i| state_id(land(i), o)).collect();
                let drift = ((1.0 - p) / 2.0 * 1e12).round() / 1e12;
                let mut outs = vec![(p, success)];
                if drift > 0.0 {
                    outs.push((drift, BTreeSet::from([state_id(land(ccw), o)])));
                    outs.push((drift, BTreeSet::from([state_id(land(cw), o)])));
                }
                b.add_outcomes(s, a, outs);
            }
            for (a, to, p) in [(2, o.right(), cfg.p_right), (3, o.left(), cfg.p_left)] {
                let mut outs = vec![(p, [state_id(cell, to)])];
                if p < 1.0 {
                    outs.push((1.0 - p, [s]));
                }
                b.add_outcomes(s, a, outs);
            }
        }
    }
    Ok(b.build(state_id(layout.cell(1, 1), Orientation::N))?)
}

fn bases_reachable(layout: &HexLayout, from: usize) -> bool {
    let mut seen = vec![false; layout.num_cells()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(c) = queue.pop_front() {
        for n in layout.neighbours(c).into_iter().flatten() {
            if !seen[n] && !layout.obstacles.contains(&n) {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    layout.bases.values().flatten().all(|&c| seen[c])
}

/// Five single-cell bases at the corners and the centre, and a seeded 8 %
/// (floored) of the remaining cells as obstacles, redrawn until every base
/// can be reached from cell (1,1) without crossing an obstacle.
pub fn default_layout(nx: usize, ny: usize) -> Result<HexLayout, HexError> {
    if nx < 6 || ny < 3 {
        return Err(HexError::TooSmall { nx, ny });
    }
    let mut layout = HexLayout {
        nx,
        ny,
        obstacles: BTreeSet::new(),
        bases: BTreeMap::new(),
    };
    let spots = [(1, 1), (nx, 1), (nx.div_ceil(2), ny.div_ceil(2)), (1, ny), (nx, ny)];
    for (i, (c, r)) in spots.into_iter().enumerate() {
        let cell = layout.cell(c, r);
        layout.bases.insert(format!("b{}", i + 1), BTreeSet::from([cell]));
    }
    let taken: BTreeSet<usize> = layout.bases.values().flatten().copied().collect();
    let free: Vec<usize> = (0..layout.num_cells()).filter(|c| !taken.contains(c)).collect();
    let k = free.len() * 8 / 100;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = layout.cell(1, 1);
    loop {
        layout.obstacles = free.choose_multiple(&mut rng, k).copied().collect();
        if bases_reachable(&layout, start) {
            return Ok(layout);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(nx: usize, ny: usize) -> (HexLayout, MdpstModel) {
        let l = default_layout(nx, ny).unwrap();
        let m = generate_hexworld(&HexConfig::new(l.clone())).unwrap();
        (l, m)
    }

    #[test]
    fn heading_cones() {
        assert_eq!(heading_slots(0), (vec![0, 5], 1, 4));
        assert_eq!(heading_slots(90), (vec![1], 2, 0));
        assert_eq!(heading_slots(180), (vec![2, 3], 4, 1));
        assert_eq!(heading_slots(270), (vec![4], 5, 3));
    }

    #[test]
    fn neighbours_of_offset_columns() {
        let l = default_layout(10, 5).unwrap();
        // even column 3 (0-based 2), row 3: NE/NW step up a row
        let c = l.cell(3, 3);
        let want = [(4, 2), (3, 2), (2, 2), (2, 3), (3, 4), (4, 3)].map(|(x, y)| Some(l.cell(x, y)));
        assert_eq!(l.neighbours(c), want);
        // odd column 4 (0-based 3): SE/SW step down a row
        let c = l.cell(4, 3);
        let want = [(5, 3), (4, 2), (3, 3), (3, 4), (4, 4), (5, 4)].map(|(x, y)| Some(l.cell(x, y)));
        assert_eq!(l.neighbours(c), want);
        assert_eq!(l.neighbours(0)[1], None);
    }

    #[test]
    fn sizes_and_layout() {
        let (l, m) = model(10, 5);
        assert_eq!(m.num_states(), 200);
        assert_eq!(l.bases.len(), 5);
        assert_eq!(l.obstacles.len(), 3);
        assert!(!m.is_classical_mdp());
        assert!(m.validate().is_empty());
        assert!(default_layout(6, 3).is_ok());
        assert!(matches!(default_layout(5, 3), Err(HexError::TooSmall { .. })));
        assert_eq!(default_layout(10, 5).unwrap(), l);
    }

    #[test]
    fn interior_forward_east() {
        let (l, m) = model(10, 5);
        let s = state_id(l.cell(5, 3), Orientation::E);
        let outs = m.outcomes(s, 0).unwrap();
        let mut probs: Vec<(f64, usize)> = outs.iter().map(|o| (o.prob, o.targets.len())).collect();
        probs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(probs, vec![(0.1, 1), (0.1, 1), (0.8, 2)]);
        let bk = m.outcomes(s, 1).unwrap();
        assert!(bk.iter().any(|o| o.prob == 0.7 && o.targets.len() == 2));
    }

    #[test]
    fn corner_forward_collapses() {
        let (l, m) = model(10, 5);
        // top-right corner (even 0-based column 9) facing east: both success cells off-grid
        let s = state_id(l.cell(10, 1), Orientation::E);
        let outs = m.outcomes(s, 0).unwrap();
        let success = outs.iter().find(|o| o.prob >= 0.8 - 1e-12).unwrap();
        assert_eq!(success.targets, vec![s]);
    }

    #[test]
    fn turns_are_singletons() {
        let (_, m) = model(6, 3);
        let s = state_id(7, Orientation::W);
        let tr = m.outcomes(s, 2).unwrap();
        assert_eq!(tr.len(), 2);
        assert!(tr.iter().any(|o| o.prob == 0.9 && o.targets == vec![state_id(7, Orientation::N)]));
        assert!(tr.iter().any(|o| (o.prob - 0.1).abs() < 1e-12 && o.targets == vec![s]));
    }

    #[test]
    fn layout_json_round_trip() {
        let l = default_layout(8, 4).unwrap();
        let text = serde_json::to_string(&l.to_json()).unwrap();
        assert_eq!(HexLayout::from_json(&text).unwrap(), l);
        let bad = text.replace("\"nx\":8", "\"nx\":0");
        assert!(HexLayout::from_json(&bad).is_err());
    }
}
