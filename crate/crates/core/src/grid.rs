//! The rectangular evacuation space: geometry, exit bands, static distance
//! utilities and per-patch occupancy.
//!
//! Patches are addressed as `(x, y)` with `x` in `0..width` and `y` in
//! `0..height`. The left exit band sits on column `0`, the right one on
//! column `width - 1`; both span `door_width` rows centered vertically.

use crate::error::{EvacError, Result};

/// Integer patch coordinate. Signed so neighbour arithmetic can step off the
/// grid before being clipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Patch {
    pub x: i32,
    pub y: i32,
}

impl Patch {
    pub const fn new(x: i32, y: i32) -> Self {
        Patch { x, y }
    }

    pub fn center(self) -> (f64, f64) {
        (self.x as f64 + 0.5, self.y as f64 + 0.5)
    }

    /// Patch containing a continuous position.
    pub fn containing(x: f64, y: f64) -> Self {
        Patch::new(x.floor() as i32, y.floor() as i32)
    }
}

/// Which exit an agent is heading for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExitSide {
    Left,
    Right,
}

impl ExitSide {
    /// +1 for the right exit, -1 for the left one.
    pub fn forward_dx(self) -> i32 {
        match self {
            ExitSide::Left => -1,
            ExitSide::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub door_width: usize,
    /// Side length of a patch in meters.
    pub patch_side: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            width: 68,
            height: 20,
            door_width: 6,
            patch_side: 1.0,
        }
    }
}

impl GridSpec {
    pub fn new(width: usize, height: usize, door_width: usize) -> Result<Self> {
        let spec = GridSpec {
            width,
            height,
            door_width,
            patch_side: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 3 {
            return Err(EvacError::InvalidConfig(format!(
                "grid width must be at least 3, got {}",
                self.width
            )));
        }
        if self.door_width < 1 || self.door_width > self.height {
            return Err(EvacError::InvalidConfig(format!(
                "door width must be in 1..={}, got {}",
                self.height, self.door_width
            )));
        }
        if !(self.patch_side > 0.0) {
            return Err(EvacError::InvalidConfig(
                "patch side must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn patch_count(&self) -> usize {
        self.width * self.height
    }

    /// Inclusive row range `(lo, hi)` occupied by both exit bands.
    pub fn band_rows(&self) -> (i32, i32) {
        let lo = ((self.height - self.door_width) / 2) as i32;
        (lo, lo + self.door_width as i32 - 1)
    }

    pub fn exit_column(&self, side: ExitSide) -> i32 {
        match side {
            ExitSide::Left => 0,
            ExitSide::Right => self.width as i32 - 1,
        }
    }

    pub fn contains(&self, p: Patch) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    pub fn check(&self, p: Patch) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(EvacError::OutOfGrid {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Row-major index of an in-grid patch.
    #[inline]
    pub fn index(&self, p: Patch) -> usize {
        debug_assert!(self.contains(p));
        p.y as usize * self.width + p.x as usize
    }

    #[inline]
    pub fn patch_at(&self, index: usize) -> Patch {
        Patch::new((index % self.width) as i32, (index / self.width) as i32)
    }

    /// True iff `p` lies in the left or right exit band.
    pub fn is_exit(&self, p: Patch) -> bool {
        self.exit_side_of(p).is_some()
    }

    pub fn exit_side_of(&self, p: Patch) -> Option<ExitSide> {
        let (lo, hi) = self.band_rows();
        if p.y < lo || p.y > hi {
            return None;
        }
        if p.x == 0 {
            Some(ExitSide::Left)
        } else if p.x == self.width as i32 - 1 {
            Some(ExitSide::Right)
        } else {
            None
        }
    }

    /// The band patch of `side` closest to `p`.
    pub fn nearest_exit_patch(&self, p: Patch, side: ExitSide) -> Patch {
        let (lo, hi) = self.band_rows();
        Patch::new(self.exit_column(side), p.y.clamp(lo, hi))
    }

    /// Euclidean distance, in patch units, from the center of `p` to the
    /// nearest patch center of the `side` exit band.
    pub fn exit_distance(&self, p: Patch, side: ExitSide) -> f64 {
        let target = self.nearest_exit_patch(p, side);
        let dx = (p.x - target.x) as f64;
        let dy = (p.y - target.y) as f64;
        dx.hypot(dy)
    }

    /// Length of the diagonal of the space, the normaliser of the distance utility.
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    /// In-grid cells of the 3x3 block centered on `p`.
    pub fn moore_block(&self, p: Patch) -> impl Iterator<Item = Patch> + '_ {
        (-1..=1).flat_map(move |dy| {
            (-1..=1).filter_map(move |dx| {
                let q = Patch::new(p.x + dx, p.y + dy);
                self.contains(q).then_some(q)
            })
        })
    }
}

/// Distance utility `(D - d) / D` for a patch at distance `d` from its exit
/// in a space with diagonal `D`.
pub fn distance_utility(distance: f64, diagonal: f64) -> f64 {
    (diagonal - distance) / diagonal
}

/// Static and dynamic per-patch state.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchField {
    spec: GridSpec,
    pub ud_left: Vec<f64>,
    pub ud_right: Vec<f64>,
    /// Expected comfort utility, refreshed once per tick.
    pub uec: Vec<f64>,
    /// Live agent count per patch.
    pub occupancy: Vec<u32>,
    /// Occupancy frozen at the start of the current tick.
    pub snapshot: Vec<u32>,
}

impl PatchField {
    /// Builds both distance-utility fields; dynamic parts start empty with
    /// `uec = 1` everywhere.
    pub fn build_distance_fields(spec: GridSpec) -> Self {
        let diag = spec.diagonal();
        let n = spec.patch_count();
        let mut ud_left = Vec::with_capacity(n);
        let mut ud_right = Vec::with_capacity(n);
        for i in 0..n {
            let p = spec.patch_at(i);
            ud_left.push(distance_utility(
                spec.exit_distance(p, ExitSide::Left),
                diag,
            ));
            ud_right.push(distance_utility(
                spec.exit_distance(p, ExitSide::Right),
                diag,
            ));
        }
        PatchField {
            spec,
            ud_left,
            ud_right,
            uec: vec![1.0; n],
            occupancy: vec![0; n],
            snapshot: vec![0; n],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn ud(&self, side: ExitSide, p: Patch) -> f64 {
        let i = self.spec.index(p);
        match side {
            ExitSide::Left => self.ud_left[i],
            ExitSide::Right => self.ud_right[i],
        }
    }

    pub fn uec_at(&self, p: Patch) -> f64 {
        self.uec[self.spec.index(p)]
    }

    pub fn occupancy_at(&self, p: Patch) -> u32 {
        self.occupancy[self.spec.index(p)]
    }

    /// Live agent count summed over the clipped Moore block of `p`.
    pub fn occupancy_moore(&self, p: Patch) -> Result<u32> {
        self.spec.check(p)?;
        Ok(moore_sum(&self.spec, &self.occupancy, p))
    }

    /// Same as [`occupancy_moore`](Self::occupancy_moore) over the tick-start snapshot.
    pub fn snapshot_moore(&self, p: Patch) -> u32 {
        moore_sum(&self.spec, &self.snapshot, p)
    }

    pub fn add_agent(&mut self, p: Patch) {
        let i = self.spec.index(p);
        self.occupancy[i] += 1;
    }

    pub fn remove_agent(&mut self, p: Patch) {
        let i = self.spec.index(p);
        debug_assert!(self.occupancy[i] > 0, "removing from empty patch {p:?}");
        self.occupancy[i] -= 1;
    }

    pub fn total_occupancy(&self) -> u64 {
        self.occupancy.iter().map(|&c| c as u64).sum()
    }

    pub fn freeze_snapshot(&mut self) {
        self.snapshot.copy_from_slice(&self.occupancy);
    }
}

fn moore_sum(spec: &GridSpec, counts: &[u32], p: Patch) -> u32 {
    spec.moore_block(p).map(|q| counts[spec.index(q)]).sum()
}
