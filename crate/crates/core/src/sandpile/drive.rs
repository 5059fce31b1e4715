use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lattice::{AvalancheRecord, Boundary, Cell, Lattice};
use crate::error::{Error, Result};

/// Simulation RNG: ChaCha8, a counter-based stream cipher generator.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SitePolicy {
    /// The cell where the two closed sides meet.
    CornerCell,
    /// Uniform over the `extent × extent` block at the closed corner.
    TopRegion { extent: usize },
    /// Uniform over the whole lattice.
    UniformRandom,
}

impl SitePolicy {
    pub fn name(&self) -> String {
        match self {
            SitePolicy::CornerCell => "corner".into(),
            SitePolicy::TopRegion { extent } => format!("top-region:{extent}"),
            SitePolicy::UniformRandom => "uniform".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        match s {
            "corner" => Some(SitePolicy::CornerCell),
            "uniform" => Some(SitePolicy::UniformRandom),
            _ => {
                let extent = s.strip_prefix("top-region:")?.parse().ok()?;
                Some(SitePolicy::TopRegion { extent })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub grains_per_event: u64,
    pub site_policy: SitePolicy,
    /// Chance that a drive event happens on a given timestep, in (0, 1].
    pub event_probability: f64,
}

impl DriveSpec {
    pub fn corner(grains_per_event: u64) -> Self {
        DriveSpec {
            grains_per_event,
            site_policy: SitePolicy::CornerCell,
            event_probability: 1.0,
        }
    }

    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        if self.grains_per_event < 1 {
            return Err(Error::Config("grains_per_event must be at least 1".into()));
        }
        if !(self.event_probability > 0.0 && self.event_probability <= 1.0) {
            return Err(Error::Config(format!(
                "event_probability must lie in (0, 1], got {}",
                self.event_probability
            )));
        }
        match self.site_policy {
            SitePolicy::TopRegion { extent } if extent == 0 || extent > lattice.side() => {
                return Err(Error::Config(format!(
                    "top-region extent must be in 1..={}, got {extent}",
                    lattice.side()
                )));
            }
            SitePolicy::CornerCell | SitePolicy::TopRegion { .. } | SitePolicy::UniformRandom => {}
        }
        Ok(())
    }
}

/// Which corner a block anchored at the closed corner grows from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Corner {
    north: bool,
    west: bool,
}

/// The first corner (NW, NE, SE, SW) joining two closed sides; north-west
/// when there is none.
fn closed_corner(lattice: &Lattice) -> Corner {
    let b = lattice.boundaries();
    let closed = |x: Boundary| x == Boundary::Closed;
    // NW, NE, SE, SW
    let candidates = [
        (closed(b.north) && closed(b.west), Corner { north: true, west: true }),
        (closed(b.north) && closed(b.east), Corner { north: true, west: false }),
        (closed(b.south) && closed(b.east), Corner { north: false, west: false }),
        (closed(b.south) && closed(b.west), Corner { north: false, west: true }),
    ];
    candidates
        .iter()
        .find(|(ok, _)| *ok)
        .map_or(Corner { north: true, west: true }, |&(_, c)| c)
}

fn corner_offset(lattice: &Lattice, corner: Corner, dr: usize, dc: usize) -> Cell {
    let last = lattice.side() - 1;
    let row = if corner.north { dr } else { last - dr };
    let col = if corner.west { dc } else { last - dc };
    Cell::new(row, col)
}

/// The cell fed by `SitePolicy::CornerCell`.
pub fn corner_cell(lattice: &Lattice) -> Cell {
    corner_offset(lattice, closed_corner(lattice), 0, 0)
}

/// Adds one event's grains with probability `spec.event_probability`.
/// Returns the driven cell, or `None` when no event happened this timestep.
pub fn drive<R: Rng + ?Sized>(lattice: &mut Lattice, spec: &DriveSpec, rng: &mut R) -> Result<Option<Cell>> {
    if spec.event_probability < 1.0 && !rng.gen_bool(spec.event_probability) {
        return Ok(None);
    }
    let cell = match spec.site_policy {
        SitePolicy::CornerCell => corner_cell(lattice),
        SitePolicy::TopRegion { extent } => {
            let corner = closed_corner(lattice);
            let k = rng.gen_range(0..extent * extent);
            corner_offset(lattice, corner, k / extent, k % extent)
        }
        SitePolicy::UniformRandom => {
            let side = lattice.side();
            let k = rng.gen_range(0..side * side);
            Cell::new(k / side, k % side)
        }
    };
    lattice.add_grains(cell, spec.grains_per_event);
    Ok(Some(cell))
}

/// A lattice with its drive and RNG: the unit that runs one timestep at a time.
#[derive(Debug, Clone)]
pub struct Simulation {
    lattice: Lattice,
    spec: DriveSpec,
    rng: SimRng,
    seed: u64,
}

impl Simulation {
    pub fn new(lattice: Lattice, spec: DriveSpec, seed: u64) -> Result<Self> {
        spec.validate(&lattice)?;
        Ok(Simulation {
            lattice,
            spec,
            rng: seeded_rng(seed),
            seed,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn lattice_mut(&mut self) -> &mut Lattice {
        &mut self.lattice
    }

    pub fn spec(&self) -> &DriveSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Drive, relax to completion, advance the clock. Returns a record when a
    /// drive event happened, including events that toppled nothing.
    pub fn step(&mut self) -> Result<Option<AvalancheRecord>> {
        let site = drive(&mut self.lattice, &self.spec, &mut self.rng)?;
        let outcome = match site {
            Some(cell) => {
                let mut rec = self.lattice.relax()?;
                rec.trigger = Some(cell);
                Some(rec)
            }
            None => None,
        };
        self.lattice.advance_clock();
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandpile::Boundaries;

    #[test]
    fn corner_policy_hits_closed_corner() {
        let lattice = Lattice::new(100, 4, Boundaries::corner_closed()).unwrap();
        let mut sim = Simulation::new(lattice, DriveSpec::corner(4), 7).unwrap();
        for _ in 0..200 {
            let rec = sim.step().unwrap().unwrap();
            assert_eq!(rec.trigger, Some(Cell::new(0, 0)));
        }
    }

    #[test]
    fn corner_follows_closed_sides() {
        let b = Boundaries {
            north: Boundary::Open,
            south: Boundary::Closed,
            east: Boundary::Closed,
            west: Boundary::Open,
        };
        let lattice = Lattice::new(5, 4, b).unwrap();
        assert_eq!(corner_cell(&lattice), Cell::new(4, 4));
        let open = Lattice::new(5, 4, Boundaries::all_open()).unwrap();
        assert_eq!(corner_cell(&open), Cell::new(0, 0));
    }

    #[test]
    fn deterministic_injection_per_step() {
        let lattice = Lattice::new(20, 4, Boundaries::corner_closed()).unwrap();
        let mut sim = Simulation::new(lattice, DriveSpec::corner(4), 1).unwrap();
        for t in 1..=500u64 {
            assert!(sim.step().unwrap().is_some());
            assert_eq!(sim.lattice().ledger().grains_in, 4 * t);
            assert_eq!(sim.lattice().ledger().timesteps, t);
        }
    }

    #[test]
    fn top_region_stays_in_block() {
        let lattice = Lattice::new(30, 4, Boundaries::corner_closed()).unwrap();
        let spec = DriveSpec {
            grains_per_event: 1,
            site_policy: SitePolicy::TopRegion { extent: 3 },
            event_probability: 1.0,
        };
        let mut sim = Simulation::new(lattice, spec, 3).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let c = sim.step().unwrap().unwrap().trigger.unwrap();
            assert!(c.row < 3 && c.col < 3);
            seen.insert(c);
        }
        assert_eq!(seen.len(), 9);
    }

    #[test]
    fn rejects_bad_specs() {
        let lattice = Lattice::new(10, 4, Boundaries::corner_closed()).unwrap();
        let mut spec = DriveSpec::corner(0);
        assert!(spec.validate(&lattice).is_err());
        spec.grains_per_event = 1;
        spec.event_probability = 0.0;
        assert!(spec.validate(&lattice).is_err());
        spec.event_probability = 1.0;
        spec.site_policy = SitePolicy::TopRegion { extent: 11 };
        assert!(spec.validate(&lattice).is_err());
    }

    #[test]
    fn bernoulli_events_skip_timesteps() {
        let lattice = Lattice::new(10, 4, Boundaries::corner_closed()).unwrap();
        let spec = DriveSpec {
            event_probability: 0.25,
            ..DriveSpec::corner(1)
        };
        let mut sim = Simulation::new(lattice, spec, 11).unwrap();
        let events = (0..40_000).filter(|_| sim.step().unwrap().is_some()).count();
        // binomial sd ~ 87
        assert!((events as i64 - 10_000).abs() < 450, "events = {events}");
        assert_eq!(sim.lattice().ledger().timesteps, 40_000);
    }

    #[test]
    fn site_policy_names_round_trip() {
        for p in [SitePolicy::CornerCell, SitePolicy::UniformRandom, SitePolicy::TopRegion { extent: 4 }] {
            assert_eq!(SitePolicy::parse(&p.name()), Some(p));
        }
        assert_eq!(SitePolicy::parse("top-region:x"), None);
    }
}
