//! Bilinear finite elements on polar tensor grids.
//!
//! Functions are discretized in the original (Cartesian) unknown `u`, whose
//! quadratic form in polar coordinates reads
//!
//! ```text
//! q(u) = ∫∫ (|u_r|² r + |u_θ|²/r) dr dθ  -  γ Σ_b ∫ |u(r, θ_b)|² dr
//! m(u) = ∫∫ |u|² r dr dθ
//! ```
//!
//! where `θ_b` runs over the Robin edges of a sector or the rays of a star
//! graph. This is the same operator as the half-density form in
//! `v = r^{1/2} u` (with its `-|v|²/(4r²)` term), but the vertex is a regular
//! point here: all nodes at `r = 0` are merged into a single degree of
//! freedom and no artificial inner boundary is needed. Every discrete space
//! is a subspace of the form domain, so discrete eigenvalues are upper bounds
//! of the corresponding min-max values.
//!
//! Radial coefficients (`r`, `1/r`, `1`) are integrated exactly against the
//! linear hat functions; the angular factors are exact polynomials.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{geometric_nodes, PolarGrid};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Half sector `0 < θ < α`, natural condition on the bisector.
    Even,
    /// Half sector `0 < θ < α`, Dirichlet condition on the bisector.
    Odd,
    /// The whole sector `-α < θ < α`.
    Full,
}

impl std::str::FromStr for Parity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            "full" => Ok(Parity::Full),
            _ => Err(Error::config(format!("unknown parity '{s}'"))),
        }
    }
}

/// The Robin Laplacian on the sector of half-opening `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorProblem {
    pub alpha: f64,
    pub gamma: f64,
    pub parity: Parity,
}

impl SectorProblem {
    pub fn new(alpha: f64, gamma: f64, parity: Parity) -> Result<Self> {
        if !(alpha > 0.0 && alpha < FRAC_PI_2) {
            return Err(Error::config(format!("half-opening α must lie in (0, π/2), got {alpha}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config(format!("Robin coefficient must be positive, got {gamma}")));
        }
        Ok(Self { alpha, gamma, parity })
    }

    pub fn even(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, Parity::Even)
    }

    /// `-γ²/sin²α`, the bottom of the spectrum.
    pub fn ground_energy(&self) -> f64 {
        -(self.gamma / self.alpha.sin()).powi(2)
    }

    /// `-γ²`, the bottom of the essential spectrum.
    pub fn threshold(&self) -> f64 {
        -self.gamma * self.gamma
    }
}

/// A degree of freedom of an assembled pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DofNode {
    Vertex,
    Node { ir: usize, it: usize },
}

/// Geometry needed to turn coefficient vectors back into grid functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilLayout {
    pub r_nodes: Vec<f64>,
    /// Angular nodes; for periodic layouts the last node is not repeated.
    pub theta_nodes: Vec<f64>,
    pub periodic: bool,
    /// Total angular length (`2π` for periodic layouts).
    pub theta_span: f64,
}

impl PencilLayout {
    fn n_theta_nodes(&self) -> usize {
        self.theta_nodes.len()
    }

    /// Angular element `t` as `(left node, right node, width)`.
    fn theta_element(&self, t: usize) -> (usize, usize, f64) {
        let nt = self.n_theta_nodes();
        if self.periodic {
            let right = (t + 1) % nt;
            let hi = if right == 0 { self.theta_nodes[0] + self.theta_span } else { self.theta_nodes[right] };
            (t, right, hi - self.theta_nodes[t])
        } else {
            (t, t + 1, self.theta_nodes[t + 1] - self.theta_nodes[t])
        }
    }

    fn n_theta_elements(&self) -> usize {
        if self.periodic {
            self.n_theta_nodes()
        } else {
            self.n_theta_nodes() - 1
        }
    }
}

/// Discrete pencil `(K, M)` with its degree-of-freedom map.
#[derive(Debug, Clone)]
pub struct AssembledPencil {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub dof_map: Vec<DofNode>,
    /// Analytic lower bound of the Rayleigh quotient `xᵀKx / xᵀMx`.
    pub lower_bound: f64,
    pub layout: PencilLayout,
}

impl AssembledPencil {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Coefficient vector sampled on the full `(r, θ)` node array, with
    /// zeros on Dirichlet nodes. Rows are radial indices.
    pub fn nodal_values(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let nr = self.layout.r_nodes.len();
        let nt = self.layout.n_theta_nodes();
        let mut out = vec![vec![0.0; nt]; nr];
        for (dof, node) in self.dof_map.iter().enumerate() {
            match *node {
                DofNode::Vertex => out[0].iter_mut().for_each(|v| *v = x[dof]),
                DofNode::Node { ir, it } => out[ir][it] = x[dof],
            }
        }
        out
    }

    /// `p(r) = r ∫ |u(r, θ)|² dθ` at every radial node, i.e. the angular mass
    /// of the half-density `r^{1/2} u`.
    pub fn radial_profile(&self, x: &[f64]) -> Vec<f64> {
        let vals = self.nodal_values(x);
        let layout = &self.layout;
        vals.iter()
            .zip(&layout.r_nodes)
            .map(|(row, &r)| {
                let mut s = 0.0;
                for t in 0..layout.n_theta_elements() {
                    let (a, b, h) = layout.theta_element(t);
                    let (u, v) = (row[a], row[b]);
                    s += h / 3.0 * (u * u + u * v + v * v);
                }
                r * s
            })
            .collect()
    }

    /// Writes `K` and `M` in the triplet text format.
    pub fn write_triplets<W: std::io::Write>(&self, k_out: W, m_out: W) -> Result<()> {
        self.k.write_triplets(k_out)?;
        self.m.write_triplets(m_out)
    }
}

/// Exact one-dimensional element integrals on `[r0, r1]` for hat functions
/// `N0 = (r1 - r)/h`, `N1 = (r - r0)/h`.
#[derive(Debug, Clone, Copy)]
struct RadialElement {
    /// `∫ N_a' N_b' r dr`
    stiff: [[f64; 2]; 2],
    /// `∫ N_a N_b r dr`
    mass: [[f64; 2]; 2],
    /// `∫ N_a N_b dr`
    line: [[f64; 2]; 2],
    /// `∫ N_a N_b / r dr`; the `(0,0)` entry is infinite for `r0 = 0` and
    /// is only used away from the vertex.
    inv_r: [[f64; 2]; 2],
}

/// `∫ N_a N_b / r dr` as functions of `x = h/r0`.
fn inv_r_integrals(x: f64) -> [f64; 3] {
    if x < 0.1 {
        let (mut i00, mut i01, mut i11) = (0.0, 0.0, 0.0);
        let mut pow = x; // x^{k-2}
        for k in 3..40 {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            i00 += sign * 2.0 * pow / (kf * (kf - 1.0) * (kf - 2.0));
            i01 += sign * pow / (kf * (kf - 1.0));
            i11 += sign * pow / kf;
            pow *= x;
            if pow < 1e-18 * x {
                break;
            }
        }
        [i00, i01, i11]
    } else {
        let l = x.ln_1p();
        let x2 = x * x;
        [
            ((1.0 + x) * (1.0 + x) * l - x - 1.5 * x2) / x2,
            ((2.0 + x) * x / 2.0 - (1.0 + x) * l) / x2,
            (x2 / 2.0 - x + l) / x2,
        ]
    }
}

impl RadialElement {
    fn new(r0: f64, r1: f64) -> Self {
        let h = r1 - r0;
        let s = (r0 + r1) / (2.0 * h);
        let inv_r = if r0 == 0.0 {
            [[f64::INFINITY, 0.5], [0.5, 0.5]]
        } else {
            let [i00, i01, i11] = inv_r_integrals(h / r0);
            [[i00, i01], [i01, i11]]
        };
        Self {
            stiff: [[s, -s], [-s, s]],
            mass: [
                [h / 12.0 * (3.0 * r0 + r1), h / 12.0 * (r0 + r1)],
                [h / 12.0 * (r0 + r1), h / 12.0 * (r0 + 3.0 * r1)],
            ],
            line: [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]],
            inv_r,
        }
    }
}

/// How grid nodes map to degrees of freedom.
struct DofNumbering {
    /// `index[ir][it]`, `None` on Dirichlet nodes.
    index: Vec<Vec<Option<usize>>>,
    dof_map: Vec<DofNode>,
    vertex: bool,
}

impl DofNumbering {
    /// θ-fastest ordering keeps the bandwidth near the number of angular nodes.
    fn new(nr: usize, nt: usize, vertex: bool, dirichlet_theta: &[usize]) -> Self {
        let mut index = vec![vec![None; nt]; nr];
        let mut dof_map = Vec::new();
        if vertex && dirichlet_theta.is_empty() {
            dof_map.push(DofNode::Vertex);
            index[0].iter_mut().for_each(|e| *e = Some(0));
        }
        // ring 0 is either the vertex or a Dirichlet arc; the outer ring is Dirichlet.
        for (ir, row) in index.iter_mut().enumerate().take(nr - 1).skip(1) {
            for (it, e) in row.iter_mut().enumerate() {
                if !dirichlet_theta.contains(&it) {
                    *e = Some(dof_map.len());
                    dof_map.push(DofNode::Node { ir, it });
                }
            }
        }
        Self { index, dof_map, vertex }
    }
}

fn assemble(
    grid: &PolarGrid,
    layout: PencilLayout,
    robin_nodes: &[usize],
    dirichlet_theta: &[usize],
    gamma: f64,
    lower_bound: f64,
) -> Result<AssembledPencil> {
    let nr = grid.r_nodes().len();
    let nt = layout.n_theta_nodes();
    let numbering = DofNumbering::new(nr, nt, grid.has_vertex(), dirichlet_theta);
    let n = numbering.dof_map.len();
    if n == 0 {
        return Err(Error::config("grid has no interior degrees of freedom"));
    }
    let r = grid.r_nodes();
    let n_te = layout.n_theta_elements();

    let (kb, mb): (Vec<_>, Vec<_>) = (0..nr - 1)
        .into_par_iter()
        .map(|e| {
            let el = RadialElement::new(r[e], r[e + 1]);
            let mut kt = TripletBuilder::with_capacity(n, 16 * n_te + 8);
            let mut mt = TripletBuilder::with_capacity(n, 16 * n_te);
            let at_vertex = numbering.vertex && e == 0;
            for t in 0..n_te {
                let (t0, t1, h) = layout.theta_element(t);
                let st = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
                let mt_loc = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
                let nodes = [(0, t0, 0), (0, t1, 1), (1, t0, 0), (1, t1, 1)];
                for (p, &(a, ta, pa)) in nodes.iter().enumerate() {
                    for &(b, tb, pb) in &nodes[p..] {
                        let (Some(gi), Some(gj)) = (numbering.index[e + a][ta], numbering.index[e + b][tb]) else {
                            continue;
                        };
                        // The merged vertex function is constant in θ.
                        let inv_r = if at_vertex && (a == 0 || b == 0) { 0.0 } else { el.inv_r[a][b] * st[pa][pb] };
                        let kv = el.stiff[a][b] * mt_loc[pa][pb] + inv_r;
                        let mv = el.mass[a][b] * mt_loc[pa][pb];
                        let off_diag_pair = !(a == b && ta == tb);
                        push_pair(&mut kt, gi, gj, kv, off_diag_pair);
                        push_pair(&mut mt, gi, gj, mv, off_diag_pair);
                    }
                }
            }
            for &tb in robin_nodes {
                for a in 0..2 {
                    for b in a..2 {
                        let (Some(gi), Some(gj)) = (numbering.index[e + a][tb], numbering.index[e + b][tb]) else {
                            continue;
                        };
                        push_pair(&mut kt, gi, gj, -gamma * el.line[a][b], a != b);
                    }
                }
            }
            (kt, mt)
        })
        .unzip();

    let mut k = TripletBuilder::new(n);
    let mut m = TripletBuilder::new(n);
    kb.into_iter().for_each(|b| k.extend(b));
    mb.into_iter().for_each(|b| m.extend(b));
    Ok(AssembledPencil {
        k: k.build(),
        m: m.build(),
        dof_map: numbering.dof_map,
        lower_bound,
        layout,
    })
}

/// Emits a local pair once per triangle; pairs of distinct local nodes that
/// land on the same global dof (the merged vertex) count twice.
fn push_pair(b: &mut TripletBuilder, gi: usize, gj: usize, v: f64, distinct_local: bool) {
    if gi == gj {
        b.push(gi, gi, if distinct_local { 2.0 * v } else { v });
    } else {
        b.push_sym(gi, gj, v);
    }
}

/// Assembles the sector pencil on `grid`.
pub fn assemble_sector(p: &SectorProblem, grid: &PolarGrid) -> Result<AssembledPencil> {
    let nte = grid.n_theta;
    let (lo, robin, dirichlet): (f64, Vec<usize>, Vec<usize>) = match p.parity {
        Parity::Even => (0.0, vec![nte], vec![]),
        Parity::Odd => (0.0, vec![nte], vec![0]),
        Parity::Full => (-p.alpha, vec![0, nte], vec![]),
    };
    let span = p.alpha - lo;
    let theta_nodes: Vec<f64> = (0..=nte).map(|i| lo + span * i as f64 / nte as f64).collect();
    let layout = PencilLayout {
        r_nodes: grid.r_nodes().to_vec(),
        theta_nodes,
        periodic: false,
        theta_span: span,
    };
    assemble(grid, layout, &robin, &dirichlet, p.gamma, p.ground_energy())
}

/// Bottom of the spectrum of the Robin sector with half-opening `beta` and
/// coefficient `gamma`, for any `β ∈ (0, π]`.
pub fn sector_bottom(beta: f64, gamma: f64) -> f64 {
    if beta < FRAC_PI_2 {
        -(gamma / beta.sin()).powi(2)
    } else {
        -gamma * gamma
    }
}

/// Angular nodes of a star graph: every ray angle is a node, each gap gets
/// at least two elements and roughly `n_theta · gap/2π` of them. With
/// `ray_grading > 1` the elements shrink geometrically towards the rays,
/// symmetric about the middle of each gap.
pub fn star_theta_nodes(angles: &[f64], n_theta: usize, ray_grading: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    if !(ray_grading >= 1.0 && ray_grading.is_finite()) {
        return Err(Error::config(format!("ray grading must be at least 1, got {ray_grading}")));
    }
    if angles.is_empty() {
        return Err(Error::config("a star graph needs at least one ray"));
    }
    if angles.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("ray angles must be strictly increasing (no duplicates)"));
    }
    if angles[0] < 0.0 || *angles.last().unwrap() >= 2.0 * PI {
        return Err(Error::config("ray angles must lie in [0, 2π)"));
    }
    let mut nodes = Vec::new();
    let mut rays = Vec::with_capacity(angles.len());
    for (j, &a) in angles.iter().enumerate() {
        let b = angles.get(j + 1).copied().unwrap_or(angles[0] + 2.0 * PI);
        let gap = b - a;
        let m = ((n_theta as f64 * gap / (2.0 * PI)).round() as usize).max(2);
        rays.push(nodes.len());
        if ray_grading == 1.0 {
            nodes.extend((0..m).map(|i| a + gap * i as f64 / m as f64));
        } else {
            let half = m.div_ceil(2);
            let left = geometric_nodes(0.0, gap / 2.0, half, ray_grading);
            nodes.extend(left.iter().map(|t| a + t));
            nodes.extend(left[1..half].iter().rev().map(|t| b - t));
        }
    }
    Ok((nodes, rays))
}

/// Assembles the δ-interaction on the star graph with rays at `angles`.
///
/// The lower bound comes from decoupling the plane into the sectors between
/// consecutive rays, each a Robin sector with coefficient `γ/2`.
pub fn assemble_stargraph(angles: &[f64], gamma: f64, grid: &PolarGrid) -> Result<AssembledPencil> {
    assemble_stargraph_graded(angles, gamma, grid, 1.0)
}

/// [`assemble_stargraph`] with angular elements graded towards the rays,
/// see [`star_theta_nodes`].
pub fn assemble_stargraph_graded(angles: &[f64], gamma: f64, grid: &PolarGrid, ray_grading: f64) -> Result<AssembledPencil> {
    if !(gamma > 0.0) {
        return Err(Error::config("coupling γ must be positive"));
    }
    let (theta_nodes, rays) = star_theta_nodes(angles, grid.n_theta, ray_grading)?;
    let lower_bound = half_gaps(angles)
        .into_iter()
        .map(|beta| sector_bottom(beta, gamma / 2.0))
        .fold(f64::INFINITY, f64::min);
    let layout = PencilLayout {
        r_nodes: grid.r_nodes().to_vec(),
        theta_nodes,
        periodic: true,
        theta_span: 2.0 * PI,
    };
    assemble(grid, layout, &rays, &[], gamma, lower_bound)
}

/// Half-gaps `(θ_{j+1} - θ_j)/2` with `θ_{M+1} = θ_1 + 2π`.
pub fn half_gaps(angles: &[f64]) -> Vec<f64> {
    (0..angles.len())
        .map(|j| {
            let b = angles.get(j + 1).copied().unwrap_or(angles[0] + 2.0 * PI);
            (b - angles[j]) / 2.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use crate::quadrature::integrate;

    #[test]
    fn inv_r_integrals_match_quadrature() {
        for (r0, r1) in [(1.0, 1.01), (1.0, 1.099), (1.0, 1.101), (0.3, 2.0), (5.0, 5.0001)] {
            let h: f64 = r1 - r0;
            let el = RadialElement::new(r0, r1);
            let q = |f: &dyn Fn(f64) -> f64| integrate(f, r0, r1, 1e-15, 0.0).value;
            let n0 = |r: f64| (r1 - r) / h;
            let n1 = |r: f64| (r - r0) / h;
            let refs = [
                q(&|r| n0(r) * n0(r) / r),
                q(&|r| n0(r) * n1(r) / r),
                q(&|r| n1(r) * n1(r) / r),
            ];
            let got = [el.inv_r[0][0], el.inv_r[0][1], el.inv_r[1][1]];
            for (g, w) in got.iter().zip(refs) {
                assert!((g - w).abs() <= 1e-13 * w.abs().max(1e-3), "[{r0},{r1}]: {g} vs {w}");
            }
            let sum = got[0] + 2.0 * got[1] + got[2];
            assert!((sum - (r1 / r0).ln()).abs() < 1e-14 * sum.max(1.0));
        }
    }

    fn small_grid() -> PolarGrid {
        build_grid(GridSpec { r_min: 0.0, r_max: 8.0, n_r: 24, grading: 1.05, n_theta: 6 }).unwrap()
    }

    #[test]
    fn pencils_are_bitwise_symmetric() {
        let g = small_grid();
        for parity in [Parity::Even, Parity::Odd, Parity::Full] {
            let p = SectorProblem::new(0.7, 1.0, parity).unwrap();
            let pen = assemble_sector(&p, &g).unwrap();
            assert!(pen.k.is_symmetric(), "{parity:?}");
            assert!(pen.m.is_symmetric(), "{parity:?}");
        }
        let star = assemble_stargraph(&[0.0, 2.0, 4.0], 1.0, &g).unwrap();
        assert!(star.k.is_symmetric() && star.m.is_symmetric());
    }

    #[test]
    fn forms_are_exact_on_radial_hat() {
        let g = small_grid();
        let p = SectorProblem::even(0.7).unwrap();
        let pen = assemble_sector(&p, &g).unwrap();
        // u = 1 - r/r_max is exactly representable; ∫∫ u² r dr dθ = α r_max²/12.
        let x: Vec<f64> = pen
            .dof_map
            .iter()
            .map(|d| match *d {
                DofNode::Vertex => 1.0,
                DofNode::Node { ir, .. } => 1.0 - g.r_nodes()[ir] / g.r_max,
            })
            .collect();
        let mass = pen.m.quadratic_form(&x);
        let want = 0.7 * 64.0 / 12.0;
        assert!((mass - want).abs() < 1e-12 * want);
        // ∫∫ |u_r|² r = α ∫ r/r_max² dr = α/2; boundary: -γ ∫ (1 - r/R)² dr = -R/3
        let form = pen.k.quadratic_form(&x);
        let want = 0.7 / 2.0 - 8.0 / 3.0;
        assert!((form - want).abs() < 1e-12, "{form} vs {want}");
    }

    #[test]
    fn lower_bounds() {
        let g = small_grid();
        let p = SectorProblem::new(0.5, 2.0, Parity::Even).unwrap();
        let pen = assemble_sector(&p, &g).unwrap();
        assert!((pen.lower_bound + 4.0 / 0.5f64.sin().powi(2)).abs() < 1e-12);
        let s = assemble_stargraph(&[0.0, FRAC_PI_2], 1.0, &g).unwrap();
        assert!((s.lower_bound + 0.5).abs() < 1e-12);
        let s = assemble_stargraph(&[1.0], 1.0, &g).unwrap();
        assert!((s.lower_bound + 0.25).abs() < 1e-12);
    }

    #[test]
    fn star_rejects_duplicates() {
        let g = small_grid();
        assert!(assemble_stargraph(&[0.5, 0.5], 1.0, &g).is_err());
        assert!(assemble_stargraph(&[], 1.0, &g).is_err());
    }

    #[test]
    fn star_nodes_include_rays() {
        for grading in [1.0, 1.3] {
            let (nodes, rays) = star_theta_nodes(&[0.0, 1.0, 4.0], 24, grading).unwrap();
            assert_eq!(nodes[rays[1]], 1.0);
            assert_eq!(nodes[rays[2]], 4.0);
            assert!(nodes.windows(2).all(|w| w[1] > w[0]));
            assert!(*nodes.last().unwrap() < 2.0 * PI);
        }
        let (nodes, rays) = star_theta_nodes(&[0.0, 1.0], 40, 1.5).unwrap();
        // widths shrink towards both ends of a gap
        let w: Vec<f64> = nodes[rays[0]..=rays[1]].windows(2).map(|p| p[1] - p[0]).collect();
        assert!(w[0] < w[w.len() / 2] && w[w.len() - 1] < w[w.len() / 2]);
        assert!((w[0] - w[w.len() - 1]).abs() < 1e-14);
        assert!(star_theta_nodes(&[0.0], 8, 0.5).is_err());
    }

    #[test]
    fn odd_parity_drops_bisector() {
        let g = small_grid();
        let even = assemble_sector(&SectorProblem::new(0.7, 1.0, Parity::Even).unwrap(), &g).unwrap();
        let odd = assemble_sector(&SectorProblem::new(0.7, 1.0, Parity::Odd).unwrap(), &g).unwrap();
        // odd loses the vertex and one node per interior ring
        assert_eq!(even.dim() - odd.dim(), 1 + (g.r_nodes().len() - 2));
    }
}
