//! Simulation parameters and their textual `key = value` form.

use std::fmt;
use std::str::FromStr;

use crate::error::{EvacError, Result};
use crate::grid::GridSpec;
use crate::utilities::BnePredictionParams;

/// How policies are handed out to the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MovingPattern {
    Sr,
    Rf,
    /// Every agent uses BNE.
    Bne,
    /// `pct_bne` percent BNE, the rest shortest-route.
    BneSr,
    /// `pct_bne` percent BNE, the rest random-follow.
    BneRf,
}

impl MovingPattern {
    pub const ALL: [MovingPattern; 5] = [
        MovingPattern::Sr,
        MovingPattern::Rf,
        MovingPattern::Bne,
        MovingPattern::BneSr,
        MovingPattern::BneRf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MovingPattern::Sr => "SR",
            MovingPattern::Rf => "RF",
            MovingPattern::Bne => "BNE",
            MovingPattern::BneSr => "BNE+SR",
            MovingPattern::BneRf => "BNE+RF",
        }
    }
}

impl fmt::Display for MovingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MovingPattern {
    type Err = EvacError;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c.to_ascii_uppercase())
            .collect();
        match norm.as_str() {
            "SR" => Ok(MovingPattern::Sr),
            "RF" => Ok(MovingPattern::Rf),
            "BNE" => Ok(MovingPattern::Bne),
            "BNE+SR" | "BNE-SR" | "BNESR" => Ok(MovingPattern::BneSr),
            "BNE+RF" | "BNE-RF" | "BNERF" => Ok(MovingPattern::BneRf),
            _ => Err(EvacError::InvalidConfig(format!(
                "unknown moving pattern `{}` (expected SR, RF, BNE, BNE+SR or BNE+RF)",
                s.trim()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub number_persons: usize,
    /// Percentage of BNE agents in the mixed patterns, 0..=100.
    pub pct_bne: f64,
    /// Percent chance that a nearby agent enters a given patch.
    pub probability_competing: f64,
    /// Exit width in patches.
    pub door_width: usize,
    /// Free walking speed, m/s.
    pub move_speed: f64,
    /// Distance covered in one tick at free speed, m.
    pub step_length: f64,
    /// Random-follow visibility radius, patches.
    pub follow_radius: f64,
    pub weight_ud: f64,
    pub moving_pattern: MovingPattern,
    pub seed: u64,
    pub max_ticks: u64,
    pub width: usize,
    pub height: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            number_persons: 2000,
            pct_bne: 100.0,
            probability_competing: 16.7,
            door_width: 6,
            move_speed: 2.0,
            step_length: 0.7,
            follow_radius: 3.0,
            weight_ud: 1.0,
            moving_pattern: MovingPattern::Bne,
            seed: 0,
            max_ticks: 50_000,
            width: 68,
            height: 20,
        }
    }
}

/// Canonical parameter names accepted by [`SimConfig::set`].
pub const PARAMETER_NAMES: [&str; 13] = [
    "number_persons",
    "pct_bne",
    "probability_competing",
    "door_width",
    "move_speed",
    "step_length",
    "follow_radius",
    "weight_ud",
    "moving_pattern",
    "seed",
    "max_ticks",
    "width",
    "height",
];

/// Maps a user-facing spelling (`number-persons`, `Pattern`, ...) to its
/// canonical parameter name.
pub fn canonical_name(key: &str) -> Result<&'static str> {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    let k = match k.as_str() {
        "pattern" => "moving_pattern",
        "percentage_of_agents_with_bne" => "pct_bne",
        other => other,
    }
    .to_owned();
    PARAMETER_NAMES
        .iter()
        .copied()
        .find(|&n| n == k)
        .ok_or_else(|| EvacError::UnknownParameter(key.trim().to_owned()))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        EvacError::InvalidConfig(format!(
            "cannot parse `{}` as a value for {key}",
            value.trim()
        ))
    })
}

impl SimConfig {
    /// Sets one parameter from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let name = canonical_name(key)?;
        match name {
            "number_persons" => self.number_persons = parse(name, value)?,
            "pct_bne" => self.pct_bne = parse(name, value.trim().trim_end_matches('%'))?,
            "probability_competing" => {
                self.probability_competing = parse(name, value.trim().trim_end_matches('%'))?
            }
            "door_width" => self.door_width = parse(name, value)?,
            "move_speed" => self.move_speed = parse(name, value)?,
            "step_length" => self.step_length = parse(name, value)?,
            "follow_radius" => self.follow_radius = parse(name, value)?,
            "weight_ud" => self.weight_ud = parse(name, value)?,
            "moving_pattern" => self.moving_pattern = value.parse()?,
            "seed" => self.seed = parse(name, value)?,
            "max_ticks" => self.max_ticks = parse(name, value)?,
            "width" => self.width = parse(name, value)?,
            "height" => self.height = parse(name, value)?,
            _ => unreachable!("canonical_name returned {name}"),
        }
        Ok(())
    }

    /// Textual value of one parameter, in the form [`set`](Self::set) accepts.
    pub fn get(&self, key: &str) -> Result<String> {
        let name = canonical_name(key)?;
        Ok(match name {
            "number_persons" => self.number_persons.to_string(),
            "pct_bne" => self.pct_bne.to_string(),
            "probability_competing" => self.probability_competing.to_string(),
            "door_width" => self.door_width.to_string(),
            "move_speed" => self.move_speed.to_string(),
            "step_length" => self.step_length.to_string(),
            "follow_radius" => self.follow_radius.to_string(),
            "weight_ud" => self.weight_ud.to_string(),
            "moving_pattern" => self.moving_pattern.to_string(),
            "seed" => self.seed.to_string(),
            "max_ticks" => self.max_ticks.to_string(),
            "width" => self.width.to_string(),
            "height" => self.height.to_string(),
            _ => unreachable!("canonical_name returned {name}"),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EvacError::InvalidConfig(msg));
        if self.number_persons == 0 {
            return bad("number_persons must be at least 1".into());
        }
        if !(0.0..=100.0).contains(&self.pct_bne) {
            return bad(format!(
                "pct_bne must lie in [0, 100], got {}",
                self.pct_bne
            ));
        }
        if !(self.probability_competing > 0.0 && self.probability_competing < 100.0) {
            return bad(format!(
                "probability_competing must lie in (0, 100), got {}",
                self.probability_competing
            ));
        }
        if !(self.move_speed > 0.0 && self.move_speed.is_finite()) {
            return bad(format!(
                "move_speed must be positive, got {}",
                self.move_speed
            ));
        }
        if !(self.step_length > 0.0 && self.step_length.is_finite()) {
            return bad(format!(
                "step_length must be positive, got {}",
                self.step_length
            ));
        }
        if !(self.follow_radius > 0.0 && self.follow_radius.is_finite()) {
            return bad(format!(
                "follow_radius must be positive, got {}",
                self.follow_radius
            ));
        }
        if self.max_ticks == 0 {
            return bad("max_ticks must be at least 1".into());
        }
        self.grid_spec().validate()?;
        self.prediction_params()?;
        let interior = self.width * self.height - 2 * self.door_width;
        if interior == 0 {
            return bad("grid has no non-exit patch to place agents on".into());
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            width: self.width,
            height: self.height,
            door_width: self.door_width,
            patch_side: 1.0,
        }
    }

    pub fn prediction_params(&self) -> Result<BnePredictionParams> {
        BnePredictionParams::new(self.probability_competing / 100.0, self.weight_ud)
    }

    /// Duration of one tick in seconds: a free-speed agent covers exactly one
    /// step length per tick.
    pub fn tick_seconds(&self) -> f64 {
        self.step_length / self.move_speed
    }

    /// Number of BNE agents the pattern calls for.
    pub fn bne_count(&self) -> usize {
        match self.moving_pattern {
            MovingPattern::Sr | MovingPattern::Rf => 0,
            MovingPattern::Bne => self.number_persons,
            MovingPattern::BneSr | MovingPattern::BneRf => {
                (self.pct_bne * self.number_persons as f64 / 100.0).round() as usize
            }
        }
    }
}
