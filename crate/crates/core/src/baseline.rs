//! Delta-method aging curve: average year-over-year WAR change by age,
//! chained forward from season 6.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::cohort::{Career, BOUNDARY_SEASON};
use crate::error::{Error, Result};
use crate::features::{FIRST_TARGET_SEASON, LAST_TARGET_SEASON};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgeDelta {
    /// Mean of `WAR(age + 1) - WAR(age)` over the sampled players.
    pub mean: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AgingCurve {
    pub deltas: BTreeMap<i32, AgeDelta>,
}

/// Ages with a recorded WAR for a career, keyed by `season year - birth year`.
fn war_by_age(career: &Career) -> BTreeMap<i32, f64> {
    let Some(birth) = career.birth_year() else {
        return BTreeMap::new();
    };
    career
        .seasons
        .values()
        .filter_map(|s| s.war.map(|w| (s.year - birth, w)))
        .collect()
}

/// Unweighted mean WAR change for each age, using only players with a
/// recorded WAR at both ages of the pair.
pub fn fit_aging_curve<'a>(careers: impl IntoIterator<Item = &'a Career>) -> AgingCurve {
    let mut sums: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for c in careers {
        let wars = war_by_age(c);
        for (&age, &w) in &wars {
            if let Some(&next) = wars.get(&(age + 1)) {
                let e = sums.entry(age).or_default();
                e.0 += next - w;
                e.1 += 1;
            }
        }
    }
    AgingCurve {
        deltas: sums
            .into_iter()
            .map(|(age, (sum, n))| {
                (
                    age,
                    AgeDelta {
                        mean: sum / n as f64,
                        n,
                    },
                )
            })
            .collect(),
    }
}

impl AgingCurve {
    /// Delta for `age`, borrowing the nearest fitted age (the younger one on
    /// ties) when `age` itself has no samples. An empty curve gives 0.
    pub fn delta_at(&self, age: i32) -> f64 {
        if let Some(d) = self.deltas.get(&age) {
            return d.mean;
        }
        let below = self.deltas.range(..age).next_back();
        let above = self.deltas.range(age..).next();
        match (below, above) {
            (None, None) => 0.0,
            (Some((_, d)), None) | (None, Some((_, d))) => d.mean,
            (Some((&a, lo)), Some((&b, hi))) => {
                if age - a <= b - age {
                    lo.mean
                } else {
                    hi.mean
                }
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("age,delta,n\n");
        for (age, d) in &self.deltas {
            let _ = writeln!(s, "{age},{},{}", d.mean, d.n);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::write(path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaPrediction {
    pub value: f64,
    /// Season-6 WAR was missing and 0 was used as the starting point.
    pub imputed_base: bool,
}

/// Season-6 WAR plus the curve's delta for every age step up to the target
/// season.
pub fn predict_delta_method(career: &Career, curve: &AgingCurve, target_year: u32) -> Result<DeltaPrediction> {
    if !(FIRST_TARGET_SEASON..=LAST_TARGET_SEASON).contains(&target_year) {
        return Err(Error::InvalidArgument(format!(
            "target year {target_year} is outside {FIRST_TARGET_SEASON}..={LAST_TARGET_SEASON}"
        )));
    }
    let base_age = career.age_at(BOUNDARY_SEASON).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} has no birth year; the delta method needs an age",
            career.player_id
        ))
    })?;
    let base = career.war(BOUNDARY_SEASON);
    let steps = (target_year - BOUNDARY_SEASON) as i32;
    let value = base.unwrap_or(0.0) + (0..steps).map(|k| curve.delta_at(base_age + k)).sum::<f64>();
    Ok(DeltaPrediction {
        value,
        imputed_base: base.is_none(),
    })
}
