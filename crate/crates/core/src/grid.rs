//! Tensor grids in polar coordinates.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameters of a geometrically graded polar grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Inner radius. Zero keeps the vertex as a grid node; a positive value
    /// imposes a homogeneous Dirichlet condition on the arc `r = r_min`.
    pub r_min: f64,
    pub r_max: f64,
    /// Number of radial elements.
    pub n_r: usize,
    /// Ratio between consecutive radial element widths.
    pub grading: f64,
    /// Number of angular elements.
    pub n_theta: usize,
}

/// Radial nodes plus the angular resolution.
///
/// Radial element widths grow geometrically away from `r_min`, so nodes
/// concentrate near the vertex where eigenfunctions vary fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub grading: f64,
    pub n_theta: usize,
    r_nodes: Vec<f64>,
}

pub fn build_grid(spec: GridSpec) -> Result<PolarGrid> {
    let GridSpec { r_min, r_max, n_r, grading, n_theta } = spec;
    if !(r_min >= 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::config(format!("need 0 ≤ r_min < r_max, got [{r_min}, {r_max}]")));
    }
    if n_r < 8 {
        return Err(Error::config(format!("need at least 8 radial elements, got {n_r}")));
    }
    if n_theta < 4 {
        return Err(Error::config(format!("need at least 4 angular elements, got {n_theta}")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::config(format!("grading must be ≥ 1, got {grading}")));
    }
    let r_nodes = geometric_nodes(r_min, r_max, n_r, grading);
    Ok(PolarGrid { r_min, r_max, n_r, grading, n_theta, r_nodes })
}

/// `n + 1` nodes from `lo` to `hi` whose consecutive gaps grow by `grading`.
pub fn geometric_nodes(lo: f64, hi: f64, n: usize, grading: f64) -> Vec<f64> {
    let widths: Vec<f64> = (0..n).map(|k| grading.powi(k as i32)).collect();
    let total: f64 = widths.iter().sum();
    let mut nodes = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    nodes.push(lo);
    for w in &widths[..n - 1] {
        acc += w;
        nodes.push(lo + (hi - lo) * acc / total);
    }
    nodes.push(hi);
    nodes
}

impl PolarGrid {
    /// Geometric grid whose first element has width close to `first_width`.
    pub fn with_first_width(r_min: f64, r_max: f64, n_r: usize, first_width: f64, n_theta: usize) -> Result<Self> {
        let span = r_max - r_min;
        if !(first_width > 0.0) {
            return Err(Error::config("first element width must be positive"));
        }
        let grading = if first_width * n_r as f64 >= span {
            1.0
        } else {
            // Solve w (gⁿ - 1)/(g - 1) = span for g > 1 by bisection on ln g.
            let total = |g: f64| first_width * ((g.ln() * n_r as f64).exp_m1() / (g - 1.0));
            let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
            while total(hi) < span {
                hi = 1.0 + 2.0 * (hi - 1.0);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) < span {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            0.5 * (lo + hi)
        };
        build_grid(GridSpec { r_min, r_max, n_r, grading, n_theta })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            r_min: self.r_min,
            r_max: self.r_max,
            n_r: self.n_r,
            grading: self.grading,
            n_theta: self.n_theta,
        }
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }

    pub fn has_vertex(&self) -> bool {
        self.r_min == 0.0
    }

    /// Splits every radial element in the ratio `1 : √grading` and every
    /// angular element in half. Existing nodes are kept bit-for-bit, so the
    /// finite-element spaces are nested.
    pub fn refine(&self) -> PolarGrid {
        let g = self.grading.sqrt();
        let mut r_nodes = Vec::with_capacity(2 * self.n_r + 1);
        for w in self.r_nodes.windows(2) {
            r_nodes.push(w[0]);
            r_nodes.push(w[0] + (w[1] - w[0]) / (1.0 + g));
        }
        r_nodes.push(self.r_max);
        PolarGrid {
            r_min: self.r_min,
            r_max: self.r_max,
            n_r: 2 * self.n_r,
            grading: g,
            n_theta: 2 * self.n_theta,
            r_nodes,
        }
    }

    /// Uniformly scales all radii by `factor`.
    pub fn scaled(&self, factor: f64) -> PolarGrid {
        PolarGrid {
            r_min: self.r_min * factor,
            r_max: self.r_max * factor,
            r_nodes: self.r_nodes.iter().map(|r| r * factor).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_r: usize, grading: f64) -> GridSpec {
        GridSpec { r_min: 0.0, r_max: 10.0, n_r, grading, n_theta: 8 }
    }

    #[test]
    fn uniform_when_grading_is_one() {
        let g = build_grid(spec(10, 1.0)).unwrap();
        for w in g.r_nodes().windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_spacing_increases() {
        let g = build_grid(spec(600, 1.02)).unwrap();
        let widths: Vec<f64> = g.r_nodes().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(widths.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.r_nodes().last().unwrap(), 10.0);
    }

    #[test]
    fn refinement_nests_nodes() {
        let g = build_grid(spec(16, 1.1)).unwrap();
        let f = g.refine();
        assert_eq!(f.n_r, 32);
        assert_eq!(f.n_theta, 16);
        for (i, &r) in g.r_nodes().iter().enumerate() {
            assert_eq!(f.r_nodes()[2 * i].to_bits(), r.to_bits());
        }
        let widths: Vec<f64> = f.r_nodes().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(widths.windows(2).all(|w| w[1] > w[0] * (1.0 - 1e-9)));
    }

    #[test]
    fn first_width_solver() {
        let g = PolarGrid::with_first_width(0.0, 100.0, 200, 0.01, 8).unwrap();
        let w0 = g.r_nodes()[1] - g.r_nodes()[0];
        assert!((w0 / 0.01 - 1.0).abs() < 1e-6, "{w0}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(spec(4, 1.0)).is_err());
        assert!(build_grid(GridSpec { n_theta: 2, ..spec(10, 1.0) }).is_err());
        assert!(build_grid(GridSpec { r_min: -1.0, ..spec(10, 1.0) }).is_err());
        assert!(build_grid(GridSpec { grading: 0.9, ..spec(10, 1.0) }).is_err());
    }
}
