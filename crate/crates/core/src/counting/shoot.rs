//! Direction fans of trajectories from a base point, shared by the
//! counting and integral routines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::driver::FlowTask;
use crate::flow::ode::IntegrationOptions;
use crate::flow::trajectory::Trajectory;
use crate::flow::GeodesicState;
use crate::surface::profile::PoleEnd;
use crate::surface::ProfileSurface;
use std::f64::consts::PI;

/// A base point for shooting: interior chart point or a pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SourcePoint {
    Interior { theta: f64, l: f64 },
    Pole(PoleEnd),
}

impl SourcePoint {
    pub fn l(&self, surface: &ProfileSurface) -> f64 {
        match self {
            SourcePoint::Interior { l, .. } => *l,
            SourcePoint::Pole(PoleEnd::Bottom) => 0.0,
            SourcePoint::Pole(PoleEnd::Top) => surface.total_length(),
        }
    }
}

/// A fan of geodesics from one point, each carrying the Jacobi solution
/// seeded with (0, 1) and the running integral of |y|.
pub struct ShotBundle {
    pub source: SourcePoint,
    /// Direction parameter of each trajectory: the heading at an interior
    /// point, or the departure meridian angle at a pole.
    pub directions: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub t_max: f64,
}

impl ShotBundle {
    /// Shoot `n_dirs` evenly spaced directions for time `t_max`.
    pub fn shoot(
        surface: &ProfileSurface,
        source: SourcePoint,
        n_dirs: usize,
        t_max: f64,
        opts: IntegrationOptions,
    ) -> Result<ShotBundle> {
        let directions: Vec<f64> = (0..n_dirs)
            .map(|i| 2.0 * PI * i as f64 / n_dirs as f64)
            .collect();
        let trajectories: Result<Vec<Trajectory>> = directions
            .par_iter()
            .map(|&dir| {
                let task = FlowTask::new(surface)
                    .with_options(opts)
                    .with_jacobi(1)
                    .with_abs_y();
                match source {
                    SourcePoint::Interior { theta, l } => {
                        let v0 = GeodesicState::from_heading(theta, l, dir);
                        task.run(&v0, t_max, &[0.0, 1.0, 0.0])
                    }
                    SourcePoint::Pole(end) => {
                        task.run_from_pole(end, dir, t_max, &[0.0, 1.0, 0.0])
                    }
                }
            })
            .collect();
        Ok(ShotBundle {
            source,
            directions,
            trajectories: trajectories?,
            t_max,
        })
    }

    pub fn n_dirs(&self) -> usize {
        self.directions.len()
    }

    /// Integral of |y| at the end of each trajectory.
    pub fn abs_y_totals(&self) -> Vec<f64> {
        self.trajectories
            .iter()
            .map(|t| t.last().extras[5])
            .collect()
    }
}
