use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::{ProxyPolygon, RegionSet};
use crate::view::quality::{first_wins_composite, score_with_pool};
use crate::view::ProjectedRegion;
use crate::Scalar;

/// Weights and limits of the greedy selection objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionWeights {
    pub lambda_p: f64,
    pub lambda_g: f64,
    pub lambda_c: f64,
    pub lambda_s: f64,
    /// Remaining-area fraction at which selection stops.
    pub tau: f64,
    pub max_view_angle_deg: f64,
    /// Camera-to-plane distance limit; None means unlimited.
    pub max_distance: Option<f64>,
}

impl Default for SelectionWeights {
    fn default() -> Self {
        SelectionWeights {
            lambda_p: 1.0,
            lambda_g: 1.0,
            lambda_c: 1.0,
            lambda_s: 1.0,
            tau: 0.02,
            max_view_angle_deg: 75.0,
            max_distance: None,
        }
    }
}

impl SelectionWeights {
    pub fn validate(&self) -> Result<()> {
        let ws = [
            ("lambda_p", self.lambda_p),
            ("lambda_g", self.lambda_g),
            ("lambda_c", self.lambda_c),
            ("lambda_s", self.lambda_s),
        ];
        for (name, w) in ws {
            if !(w >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::Config("tau must be in [0, 1)".into()));
        }
        if !(self.max_view_angle_deg > 0.0) {
            return Err(Error::Config("max_view_angle_deg must be positive".into()));
        }
        if let Some(d) = self.max_distance {
            if !(d > 0.0) {
                return Err(Error::Config("max_distance must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Result of the greedy loop: regions in selection order plus what remains
/// uncovered.
#[derive(Clone, Debug)]
pub struct SelectionState {
    pub selected: Vec<ProjectedRegion>,
    pub unobserved: RegionSet,
    pub initial_area: f64,
    /// First-selected color per grid node, the baseline for Q_smooth.
    pub composite: Vec<Option<[f64; 3]>>,
}

impl SelectionState {
    pub fn fresh(polygon: &ProxyPolygon<Scalar>, grid_len: usize) -> Self {
        let unobserved = RegionSet::from_boundary(&polygon.boundary);
        let initial_area = unobserved.area();
        SelectionState {
            selected: Vec::new(),
            unobserved,
            initial_area,
            composite: vec![None; grid_len],
        }
    }

    pub fn iteration(&self) -> usize {
        self.selected.len()
    }

    pub fn uncovered_fraction(&self) -> f64 {
        if self.initial_area <= 0.0 {
            return 0.0;
        }
        self.unobserved.area() / self.initial_area
    }

    pub fn selected_ids(&self) -> Vec<usize> {
        self.selected.iter().map(|r| r.view_id).collect()
    }
}

/// Greedy view selection: every iteration scores all remaining candidates
/// against the current state and takes the argmax (ties to the lowest view
/// id), until the uncovered fraction drops to tau or candidates run out.
pub fn select_views(
    polygon: &ProxyPolygon<Scalar>,
    candidates: Vec<ProjectedRegion>,
    weights: &SelectionWeights,
) -> Result<SelectionState> {
    weights.validate()?;
    let grid_len = candidates.first().map(|r| r.grid.len()).unwrap_or(0);
    let mut state = SelectionState::fresh(polygon, grid_len);
    let pool_means: Vec<[f64; 3]> = candidates.iter().map(|r| r.mean_color).collect();
    let mut remaining = candidates;
    while !remaining.is_empty() && state.uncovered_fraction() > weights.tau {
        let mut best: Option<(usize, f64)> = None;
        for (idx, r) in remaining.iter().enumerate() {
            let q = score_with_pool(r, &state, &pool_means, polygon, weights)?;
            let better = match best {
                None => true,
                Some((bi, bq)) => {
                    q > bq || (q == bq && r.view_id < remaining[bi].view_id)
                }
            };
            if better {
                best = Some((idx, q));
            }
        }
        let (idx, _) = best.expect("remaining non-empty");
        let picked = remaining.remove(idx);
        state.unobserved = state.unobserved.difference(&picked.footprint);
        let patch = first_wins_composite(state.composite.len(), std::slice::from_ref(&picked));
        for (slot, v) in state.composite.iter_mut().zip(patch) {
            if slot.is_none() {
                *slot = v;
            }
        }
        state.selected.push(picked);
    }
    Ok(state)
}
