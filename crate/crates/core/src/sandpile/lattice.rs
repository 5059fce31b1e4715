//! Height-model sandpile lattice with synchronous relaxation.

use std::fmt;

use crate::error::{Error, Result};

/// Relaxation gives up after this many sweeps.
pub const SWEEP_LIMIT: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Grains crossing the side leave the system.
    Open,
    /// Grains sent toward the side stay in the toppling cell.
    Closed,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Closed => "closed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Some(Boundary::Open),
            "closed" => Some(Boundary::Closed),
            _ => None,
        }
    }
}

/// Toppling directions, in the order remainder grains are dealt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Boundaries {
    pub north: Boundary,
    pub south: Boundary,
    pub east: Boundary,
    pub west: Boundary,
}

impl Boundaries {
    pub fn uniform(b: Boundary) -> Self {
        Boundaries { north: b, south: b, east: b, west: b }
    }

    pub fn all_open() -> Self {
        Self::uniform(Boundary::Open)
    }

    /// North and west closed, south and east open: the pile is fed at the
    /// north-west corner and drains through the other two sides.
    pub fn corner_closed() -> Self {
        Boundaries {
            north: Boundary::Closed,
            west: Boundary::Closed,
            south: Boundary::Open,
            east: Boundary::Open,
        }
    }

    pub fn side(&self, d: Direction) -> Boundary {
        match d {
            Direction::North => self.north,
            Direction::East => self.east,
            Direction::South => self.south,
            Direction::West => self.west,
        }
    }

    pub fn has_open_side(&self) -> bool {
        Direction::ALL.iter().any(|&d| self.side(d) == Boundary::Open)
    }
}

impl Default for Boundaries {
    fn default() -> Self {
        Self::corner_closed()
    }
}

/// Cell coordinates; row 0 is the north edge, column 0 the west edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

/// Grain accounting. `grains_in == grains_out + stored` at every step boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Ledger {
    pub grains_in: u64,
    pub grains_out: u64,
    pub stored: u64,
    pub timesteps: u64,
}

impl Ledger {
    pub fn is_balanced(&self) -> bool {
        self.grains_in == self.grains_out + self.stored
    }

    /// Mean injection rate in grains per timestep.
    pub fn injection_rate(&self) -> f64 {
        if self.timesteps == 0 {
            return 0.0;
        }
        self.grains_in as f64 / self.timesteps as f64
    }

    /// Mean dissipation rate in grains per timestep.
    pub fn dissipation_rate(&self) -> f64 {
        if self.timesteps == 0 {
            return 0.0;
        }
        self.grains_out as f64 / self.timesteps as f64
    }
}

/// One relaxation event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct AvalancheRecord {
    /// Total topplings summed over sweeps.
    pub size: u64,
    /// Distinct cells that toppled at least once.
    pub area: u64,
    /// Sweeps containing at least one toppling.
    pub duration: u64,
    /// Grains lost through open sides during this avalanche.
    pub dissipated: u64,
    pub trigger: Option<Cell>,
    pub timestep: u64,
}

/// Square height field with per-side boundaries and a toppling threshold.
///
/// Storage is a row-major grid padded by one ring of inert border cells.
/// Border heights start far below zero so they never topple; whatever they
/// receive is ignored, and the grains a toppling loses across open sides or
/// keeps on closed sides are precomputed per cell.
#[derive(Clone)]
pub struct Lattice {
    side: usize,
    threshold: u64,
    boundaries: Boundaries,
    heights: Vec<i64>,
    /// Net grains a toppling removes from each cell.
    loss: Vec<i64>,
    /// Grains a toppling of each cell sends across open sides.
    leak: Vec<u64>,
    shares: [i64; 4],
    ledger: Ledger,
    // Cells that may be at or above threshold, populated by every mutation.
    pending: Vec<u32>,
    current: Vec<u32>,
    next: Vec<u32>,
    toppled: Vec<u32>,
    avalanche_stamp: u32,
}

const BORDER_HEIGHT: i64 = i64::MIN / 4;

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("side", &self.side)
            .field("threshold", &self.threshold)
            .field("boundaries", &self.boundaries)
            .field("ledger", &self.ledger)
            .finish_non_exhaustive()
    }
}

/// Grains sent in each of N, E, S, W for one toppling: `threshold / 4` each,
/// remainder dealt one apiece starting from north.
pub fn toppling_shares(threshold: u64) -> [u64; 4] {
    let base = threshold / 4;
    let rem = threshold % 4;
    let mut shares = [base; 4];
    for share in shares.iter_mut().take(rem as usize) {
        *share += 1;
    }
    shares
}

impl Lattice {
    pub fn new(side: usize, threshold: u64, boundaries: Boundaries) -> Result<Self> {
        if side < 2 {
            return Err(Error::Config(format!("side must be at least 2, got {side}")));
        }
        if threshold < 1 {
            return Err(Error::Config("threshold must be at least 1".into()));
        }
        if side > 30_000 {
            return Err(Error::Config(format!("side {side} too large")));
        }
        if threshold > (1 << 40) {
            return Err(Error::Config(format!("threshold {threshold} too large")));
        }
        let stride = side + 2;
        let padded = stride * stride;
        let shares = toppling_shares(threshold);
        let mut heights = vec![BORDER_HEIGHT; padded];
        let mut loss = vec![0i64; padded];
        let mut leak = vec![0u64; padded];
        for row in 0..side {
            for col in 0..side {
                let i = (row + 1) * stride + col + 1;
                heights[i] = 0;
                let touching = [row == 0, col + 1 == side, row + 1 == side, col == 0];
                let mut kept = 0;
                for (k, d) in Direction::ALL.iter().enumerate() {
                    if touching[k] {
                        match boundaries.side(*d) {
                            Boundary::Open => leak[i] += shares[k],
                            Boundary::Closed => kept += shares[k],
                        }
                    }
                }
                loss[i] = (threshold - kept) as i64;
            }
        }
        Ok(Lattice {
            side,
            threshold,
            boundaries,
            heights,
            loss,
            leak,
            shares: shares.map(|s| s as i64),
            ledger: Ledger::default(),
            pending: Vec::new(),
            current: Vec::with_capacity(padded + 4),
            next: Vec::with_capacity(padded + 4),
            toppled: vec![0; padded],
            avalanche_stamp: 0,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn boundaries(&self) -> Boundaries {
        self.boundaries
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn cells(&self) -> usize {
        self.side * self.side
    }

    fn index(&self, cell: Cell) -> usize {
        assert!(cell.row < self.side && cell.col < self.side, "cell {cell:?} outside lattice");
        (cell.row + 1) * (self.side + 2) + cell.col + 1
    }

    pub fn height(&self, cell: Cell) -> u64 {
        self.heights[self.index(cell)] as u64
    }

    fn interior(&self) -> impl Iterator<Item = u64> + '_ {
        let stride = self.side + 2;
        self.heights[stride..stride * (self.side + 1)]
            .chunks_exact(stride)
            .flat_map(|row| row[1..=self.side].iter().map(|&h| h as u64))
    }

    /// Row-major copy of the height field.
    pub fn heights(&self) -> Vec<u64> {
        self.interior().collect()
    }

    pub fn max_height(&self) -> u64 {
        self.interior().max().unwrap_or(0)
    }

    pub fn is_relaxed(&self) -> bool {
        self.max_height() < self.threshold
    }

    /// Sum of the height field, computed from scratch.
    pub fn recount_stored(&self) -> u64 {
        self.interior().sum()
    }

    /// Adds grains from outside the system; counted as injected.
    pub fn add_grains(&mut self, cell: Cell, grains: u64) {
        let i = self.index(cell);
        self.heights[i] += grains as i64;
        self.ledger.grains_in += grains;
        self.ledger.stored += grains;
        if self.heights[i] >= self.threshold as i64 {
            self.pending.push(i as u32);
        }
    }

    /// Overwrites one cell. The difference is booked as injected or removed
    /// stock so the ledger stays balanced.
    pub fn set_height(&mut self, cell: Cell, height: u64) {
        let i = self.index(cell);
        let old = self.heights[i] as u64;
        if height >= old {
            self.ledger.grains_in += height - old;
        } else {
            self.ledger.grains_out += old - height;
        }
        self.ledger.stored = self.ledger.stored - old + height;
        self.heights[i] = height as i64;
        if height >= self.threshold {
            self.pending.push(i as u32);
        }
    }

    pub(crate) fn advance_clock(&mut self) {
        self.ledger.timesteps += 1;
    }

    /// Topples until every cell is below threshold. Each sweep topples every
    /// cell that was at or above threshold when the sweep began, once.
    pub fn relax(&mut self) -> Result<AvalancheRecord> {
        let g = self.threshold as i64;
        let stride = self.side + 2;
        let [s_n, s_e, s_s, s_w] = self.shares;

        if self.avalanche_stamp == u32::MAX {
            self.toppled.fill(0);
            self.avalanche_stamp = 0;
        }
        self.avalanche_stamp += 1;
        let aval = self.avalanche_stamp;

        let mut current = std::mem::take(&mut self.current);
        let mut next = std::mem::take(&mut self.next);
        self.pending.sort_unstable();
        self.pending.dedup();
        // Both lists keep room for every cell plus the speculative writes below.
        let cap = self.heights.len() + 4;
        current.clear();
        current.resize(cap, 0);
        next.clear();
        next.resize(cap, 0);
        let mut next_len = 0;
        for &c in &self.pending {
            if self.heights[c as usize] >= g {
                next[next_len] = c;
                next_len += 1;
            }
        }
        self.pending.clear();

        let heights = &mut self.heights[..];
        let loss = &self.loss[..];
        let leak = &self.leak[..];
        let toppled = &mut self.toppled[..];
        let mut size = 0u64;
        let mut area = 0u64;
        let mut duration = 0u64;
        let mut dissipated = 0u64;
        while next_len > 0 {
            std::mem::swap(&mut current, &mut next);
            let current_len = next_len;
            next_len = 0;
            duration += 1;
            if duration > SWEEP_LIMIT {
                self.current = current;
                self.next = next;
                return Err(Error::SweepLimit(SWEEP_LIMIT));
            }
            size += current_len as u64;
            for &c in &current[..current_len] {
                let ci = c as usize;
                // SAFETY: every queued index is an interior cell of the padded
                // grid, so `ci` and its four neighbours are in bounds for
                // `heights`, `loss`, `leak` and `toppled`. `next` holds
                // `heights.len() + 4` slots and each cell is pushed at most once
                // per sweep, so `next_len + 4 < next.len()` at every write.
                unsafe {
                    let n = ci - stride;
                    let s = ci + stride;
                    let w = ci - 1;
                    let e = ci + 1;
                    let stamp = toppled.get_unchecked_mut(ci);
                    area += u64::from(*stamp != aval);
                    *stamp = aval;
                    dissipated += *leak.get_unchecked(ci);
                    let h = *heights.get_unchecked(ci) - *loss.get_unchecked(ci);
                    *heights.get_unchecked_mut(ci) = h;
                    // A cell crosses the threshold at most once per sweep, so
                    // pushing on the crossing never duplicates an entry. Writes
                    // are unconditional; only the length advances on a push.
                    *next.get_unchecked_mut(next_len) = c;
                    next_len += usize::from(h >= g);
                    for (t, share) in [(n, s_n), (e, s_e), (s, s_s), (w, s_w)] {
                        let slot = heights.get_unchecked_mut(t);
                        let before = *slot;
                        let after = before + share;
                        *slot = after;
                        *next.get_unchecked_mut(next_len) = t as u32;
                        next_len += usize::from((before < g) & (after >= g));
                    }
                }
            }
        }

        self.ledger.grains_out += dissipated;
        self.ledger.stored -= dissipated;
        self.current = current;
        self.next = next;
        Ok(AvalancheRecord {
            size,
            area,
            duration,
            dissipated,
            trigger: None,
            timestep: self.ledger.timesteps,
        })
    }

    /// Plain-text dump: one row per line, heights separated by spaces.
    pub fn to_text_grid(&self) -> String {
        let mut out = String::with_capacity(self.cells() * 2);
        for row in self.heights().chunks(self.side) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}
