//! Area-uniform sampling on a surface of revolution: the area element is
//! 2 pi r(l) dl, inverted through the tabulated cumulative area.

use crate::surface::ProfileSurface;

pub struct AreaSampler {
    l_grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl AreaSampler {
    pub fn new(surface: &ProfileSurface, resolution: usize) -> AreaSampler {
        let total = surface.total_length();
        let mut l_grid = Vec::with_capacity(resolution + 1);
        let mut cumulative = Vec::with_capacity(resolution + 1);
        let mut acc = 0.0;
        let mut prev = 0.0;
        for i in 0..=resolution {
            let l = total * i as f64 / resolution as f64;
            let f = 2.0 * std::f64::consts::PI * surface.radius(l);
            if i > 0 {
                acc += 0.5 * (prev + f) * (total / resolution as f64);
            }
            prev = f;
            l_grid.push(l);
            cumulative.push(acc);
        }
        AreaSampler { l_grid, cumulative }
    }

    pub fn total_area(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Inverse-CDF sample: u in [0, 1) -> latitude l.
    pub fn sample_l(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total_area();
        let idx = self.cumulative.partition_point(|&a| a < target);
        if idx == 0 {
            return self.l_grid[0];
        }
        if idx >= self.cumulative.len() {
            return *self.l_grid.last().unwrap();
        }
        let (a0, a1) = (self.cumulative[idx - 1], self.cumulative[idx]);
        let (l0, l1) = (self.l_grid[idx - 1], self.l_grid[idx]);
        let w = if a1 > a0 { (target - a0) / (a1 - a0) } else { 0.5 };
        l0 + w * (l1 - l0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_area_is_4pi() {
        let s = ProfileSurface::unit_sphere();
        let sampler = AreaSampler::new(&s, 4000);
        assert!(
            (sampler.total_area() - 4.0 * std::f64::consts::PI).abs() < 1e-6,
            "area {}",
            sampler.total_area()
        );
    }

    #[test]
    fn median_latitude_of_sphere_is_equator() {
        let s = ProfileSurface::unit_sphere();
        let sampler = AreaSampler::new(&s, 4000);
        let l = sampler.sample_l(0.5);
        assert!((l - std::f64::consts::FRAC_PI_2).abs() < 1e-3, "median {l}");
    }
}
