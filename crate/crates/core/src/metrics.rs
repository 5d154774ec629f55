//! Run observables: evacuation time and mean expected comfort.

use crate::config::SimConfig;
use crate::grid::PatchField;

/// Mean expected comfort over the currently occupied patches, each patch
/// counted once. `None` when nobody is left.
pub fn record_tick_uec(field: &PatchField) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (uec, &occ) in field.uec.iter().zip(&field.occupancy) {
        if occ > 0 {
            sum += uec;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Running accumulator of per-tick comfort samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UecSamples {
    sum: f64,
    count: u64,
}

impl UecSamples {
    pub fn push(&mut self, sample: f64) {
        self.sum += sample;
        self.count += 1;
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Unweighted mean; a run that produced no sample reports full comfort.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            1.0
        } else {
            self.sum / self.count as f64
        }
    }
}

impl FromIterator<f64> for UecSamples {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = UecSamples::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub evac_ticks: u64,
    pub evac_seconds: f64,
    pub mean_uec: f64,
    pub stalled: bool,
    pub seed: u64,
    pub config: SimConfig,
}

pub fn finalize(ticks: u64, samples: &UecSamples, stalled: bool, config: &SimConfig) -> RunRecord {
    RunRecord {
        evac_ticks: ticks,
        evac_seconds: ticks as f64 * config.tick_seconds(),
        mean_uec: samples.mean(),
        stalled,
        seed: config.seed,
        config: config.clone(),
    }
}
