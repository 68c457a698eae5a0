//! Poisson shot-noise fields `X(x) = sum_i M_i g(x - x_i)` with Rademacher
//! marks, and grid estimators of their excursion functionals.

use std::io::Write;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::point_process::{dist, PointConfiguration, Region, Shape};
use crate::spatial::KdTree;

/// Radial kernel with closed-form value and gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `c_g (1 + |x|)^(-delta)`; the gradient is taken as 0 at the origin.
    PolynomialDecay { c_g: f64, delta: f64 },
    /// `amplitude * exp(-|x|^2 / (2 bandwidth^2))`
    Gaussian { amplitude: f64, bandwidth: f64 },
}

impl KernelSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            KernelSpec::PolynomialDecay { c_g, delta } => {
                if !(c_g >= 0.0) || !c_g.is_finite() {
                    return Err(GeoError::param("c_g", "must be finite and nonnegative"));
                }
                if !(delta > dim as f64) || !delta.is_finite() {
                    return Err(GeoError::param("delta", "decay exponent must exceed the dimension"));
                }
            }
            KernelSpec::Gaussian { amplitude, bandwidth } => {
                if !amplitude.is_finite() {
                    return Err(GeoError::param("amplitude", "must be finite"));
                }
                if !(bandwidth > 0.0) || !bandwidth.is_finite() {
                    return Err(GeoError::param("bandwidth", "must be positive"));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn value_radial(&self, r: f64) -> f64 {
        match *self {
            KernelSpec::PolynomialDecay { c_g, delta } => c_g * (1.0 + r).powf(-delta),
            KernelSpec::Gaussian { amplitude, bandwidth } => {
                amplitude * (-(r * r) / (2.0 * bandwidth * bandwidth)).exp()
            }
        }
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        self.value_radial(norm(v))
    }

    /// `g'(r) / r`, so that `grad g(v) = v * radial_slope(|v|)`.
    #[inline]
    fn slope_over_r(&self, r: f64) -> f64 {
        match *self {
            KernelSpec::PolynomialDecay { c_g, delta } => {
                if r == 0.0 {
                    0.0
                } else {
                    -c_g * delta * (1.0 + r).powf(-delta - 1.0) / r
                }
            }
            KernelSpec::Gaussian { amplitude, bandwidth } => {
                let h2 = bandwidth * bandwidth;
                -amplitude * (-(r * r) / (2.0 * h2)).exp() / h2
            }
        }
    }

    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let s = self.slope_over_r(norm(v));
        v.iter().map(|c| c * s).collect()
    }

    /// A constant `C` with `|g(x)|, |grad g(x)| <= C (1+|x|)^(-delta)` for
    /// the polynomial family (`delta` as given). For the Gaussian family the
    /// bound holds for every `delta`, with a `delta`-dependent constant, and
    /// `None` is returned.
    pub fn decay_constant(&self) -> Option<f64> {
        match *self {
            KernelSpec::PolynomialDecay { c_g, delta } => Some(c_g * delta.max(1.0)),
            KernelSpec::Gaussian { .. } => None,
        }
    }

    /// Source cutoff for which the neglected far-field mass is below
    /// `1e-8` of `|g(0)|`.
    pub fn default_cutoff(&self, dim: usize) -> f64 {
        const REL: f64 = 1e-8;
        match *self {
            KernelSpec::PolynomialDecay { delta, .. } => {
                let sphere = dim as f64 * crate::point_process::unit_ball_volume(dim);
                (sphere / ((delta - dim as f64) * REL)).powf(1.0 / (delta - dim as f64))
            }
            KernelSpec::Gaussian { bandwidth, .. } => {
                // tail mass of the radial profile beyond R, crude but safe
                let mut r = bandwidth;
                while (-(r * r) / (2.0 * bandwidth * bandwidth)).exp() * (r / bandwidth).powi(dim as i32)
                    > REL
                {
                    r += 0.25 * bandwidth;
                }
                r
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Sources, kernel and optional cutoff radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    sources: PointConfiguration,
    kernel: KernelSpec,
    cutoff: Option<f64>,
}

impl FieldSample {
    pub fn new(sources: PointConfiguration, kernel: KernelSpec, cutoff: Option<f64>) -> Result<Self> {
        if sources.sign_marks().is_none() && !sources.is_empty() {
            return Err(GeoError::MarkMismatch {
                expected: "sign",
                got: sources.mark_variant().name(),
            });
        }
        kernel.validate(sources.dim())?;
        if let Some(c) = cutoff {
            if !(c > 0.0) {
                return Err(GeoError::param("cutoff", "must be positive"));
            }
        }
        Ok(FieldSample {
            sources,
            kernel,
            cutoff,
        })
    }

    pub fn sources(&self) -> &PointConfiguration {
        &self.sources
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    /// The same sources with every mark flipped.
    pub fn negated(&self) -> FieldSample {
        let mut out = self.clone();
        if let Some(s) = self.sources.sign_marks() {
            let flipped: Vec<crate::point_process::Mark> =
                s.iter().map(|&m| crate::point_process::Mark::Sign(-m)).collect();
            let pts: Vec<Vec<f64>> = self.sources.points().map(|p| p.to_vec()).collect();
            out.sources = PointConfiguration::from_marked_points(self.sources.dim(), &pts, &flipped)
                .expect("flipping marks preserves validity");
        }
        out
    }

    fn mark(&self, i: usize) -> f64 {
        self.sources.sign_marks().map_or(1.0, |s| s[i] as f64)
    }

    fn in_range(&self, x: &[f64], i: usize) -> bool {
        self.cutoff.map_or(true, |c| dist(x, self.sources.point(i)) <= c)
    }
}

fn check_dim(fs: &FieldSample, x: &[f64]) -> Result<()> {
    if x.len() != fs.sources.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: fs.sources.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

pub fn eval_field(fs: &FieldSample, x: &[f64]) -> Result<f64> {
    check_dim(fs, x)?;
    let mut off = vec![0.0; x.len()];
    let mut total = 0.0;
    for i in 0..fs.sources.len() {
        if fs.in_range(x, i) {
            for (k, o) in off.iter_mut().enumerate() {
                *o = x[k] - fs.sources.point(i)[k];
            }
            total += fs.mark(i) * fs.kernel.value(&off);
        }
    }
    Ok(total)
}

pub fn eval_gradient(fs: &FieldSample, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(fs, x)?;
    let d = x.len();
    let mut g = vec![0.0; d];
    let mut off = vec![0.0; d];
    for i in 0..fs.sources.len() {
        if fs.in_range(x, i) {
            for k in 0..d {
                off[k] = x[k] - fs.sources.point(i)[k];
            }
            let s = fs.mark(i) * fs.kernel.slope_over_r(norm(&off));
            for k in 0..d {
                g[k] += off[k] * s;
            }
        }
    }
    Ok(g)
}

/// Cell-centered grid over a window. Cube windows are split into `m^d`
/// cells of side `side / m` with `m = round(side / h)`; ball windows keep
/// the nodes of the bounding-cube grid that lie inside the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    window: Region,
    per_axis: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(window: Region, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GeoError::param("spacing", "must be positive"));
        }
        let side = 2.0 * window.scale();
        let per_axis = ((side / h).round() as usize).max(1);
        Ok(Grid {
            spacing: side / per_axis as f64,
            per_axis,
            window,
        })
    }

    pub fn window(&self) -> &Region {
        &self.window
    }

    /// Effective spacing (the requested `h` adjusted to fit the window).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.window.dim() as i32)
    }

    fn node(&self, mut flat: usize, out: &mut [f64]) {
        let c = self.window.center().coords();
        let lo = self.window.scale();
        for (k, o) in out.iter_mut().enumerate() {
            let ix = flat % self.per_axis;
            flat /= self.per_axis;
            *o = c[k] - lo + (ix as f64 + 0.5) * self.spacing;
        }
    }

    fn lattice_size(&self) -> usize {
        self.per_axis.pow(self.window.dim() as u32)
    }

    /// Node coordinates, first axis fastest.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let d = self.window.dim();
        let mut out = Vec::with_capacity(self.lattice_size());
        let mut p = vec![0.0; d];
        for f in 0..self.lattice_size() {
            self.node(f, &mut p);
            if self.window.shape() == Shape::Cube || self.window.contains(&p) {
                out.push(p.clone());
            }
        }
        out
    }
}

const BLOCK: usize = 4096;

/// Field values and gradients at every node of a grid, in node order.
fn sample_grid(fs: &FieldSample, grid: &Grid, want_grad: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if grid.window.dim() != fs.sources.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: fs.sources.dim(),
            got: grid.window.dim(),
        });
    }
    let nodes = grid.nodes();
    let tree = fs.cutoff.map(|_| KdTree::new(&fs.sources));
    let eval_block = |block: &[Vec<f64>]| -> Vec<(f64, Vec<f64>)> {
        block
            .iter()
            .map(|x| {
                let d = x.len();
                let mut val = 0.0;
                let mut grad = vec![0.0; if want_grad { d } else { 0 }];
                let mut off = vec![0.0; d];
                let mut visit = |i: usize| {
                    for k in 0..d {
                        off[k] = x[k] - fs.sources.point(i)[k];
                    }
                    let r = norm(&off);
                    let m = fs.mark(i);
                    val += m * fs.kernel.value_radial(r);
                    if want_grad {
                        let s = m * fs.kernel.slope_over_r(r);
                        for k in 0..d {
                            grad[k] += off[k] * s;
                        }
                    }
                };
                match (&tree, fs.cutoff) {
                    (Some(t), Some(c)) => t.within(x, c).into_iter().for_each(&mut visit),
                    _ => (0..fs.sources.len()).for_each(&mut visit),
                }
                (val, grad)
            })
            .collect()
    };
    let blocks: Vec<Vec<(f64, Vec<f64>)>> = nodes.par_chunks(BLOCK).map(eval_block).collect();
    let mut vals = Vec::with_capacity(nodes.len());
    let mut grads = Vec::with_capacity(if want_grad { nodes.len() } else { 0 });
    for b in blocks {
        for (v, g) in b {
            vals.push(v);
            if want_grad {
                grads.push(g);
            }
        }
    }
    Ok((vals, grads))
}

/// Field values at the grid nodes, in [`Grid::nodes`] order.
pub fn field_on_grid(fs: &FieldSample, grid: &Grid) -> Result<Vec<f64>> {
    Ok(sample_grid(fs, grid, false)?.0)
}

/// `h^d * #{nodes with X >= u}`
pub fn excursion_volume(fs: &FieldSample, u: f64, grid: &Grid) -> Result<f64> {
    let vals = field_on_grid(fs, grid)?;
    Ok(grid.cell_volume() * vals.iter().filter(|&&v| v >= u).count() as f64)
}

/// Compactly supported C^1 test function `phi(u) = c (u-a)^2 (b-u)^2` on
/// `[a, b]`, with its primitive `Phi` vanishing at `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothTest {
    pub a: f64,
    pub b: f64,
    pub scale: f64,
}

impl SmoothTest {
    pub fn new(a: f64, b: f64, scale: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(GeoError::param("support", "need finite a < b"));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(GeoError::param("scale", "must be finite and nonnegative"));
        }
        Ok(SmoothTest { a, b, scale })
    }

    /// Bump normalised to unit integral.
    pub fn normalized(a: f64, b: f64) -> Result<Self> {
        let w = b - a;
        SmoothTest::new(a, b, 30.0 / w.powi(5))
    }

    pub fn phi(&self, u: f64) -> f64 {
        if u <= self.a || u >= self.b {
            0.0
        } else {
            self.scale * (u - self.a).powi(2) * (self.b - u).powi(2)
        }
    }

    #[allow(non_snake_case)]
    pub fn Phi(&self, u: f64) -> f64 {
        let w = self.b - self.a;
        let t = (u - self.a).clamp(0.0, w);
        self.scale * (w * w * t.powi(3) / 3.0 - w * t.powi(4) / 2.0 + t.powi(5) / 5.0)
    }

    pub fn integral(&self) -> f64 {
        self.scale * (self.b - self.a).powi(5) / 30.0
    }

    pub fn scaled(&self, c: f64) -> Result<SmoothTest> {
        SmoothTest::new(self.a, self.b, self.scale * c)
    }
}

/// `h^d * sum over nodes of Phi(X)`
pub fn smoothed_volume(fs: &FieldSample, test: &SmoothTest, grid: &Grid) -> Result<f64> {
    let vals = field_on_grid(fs, grid)?;
    Ok(grid.cell_volume() * vals.iter().map(|&v| test.Phi(v)).sum::<f64>())
}

/// `h^d * sum over nodes of phi(X) |grad X|`
pub fn smoothed_perimeter(fs: &FieldSample, test: &SmoothTest, grid: &Grid) -> Result<f64> {
    let (vals, grads) = sample_grid(fs, grid, true)?;
    Ok(grid.cell_volume()
        * vals
            .iter()
            .zip(&grads)
            .map(|(&v, g)| test.phi(v) * norm(g))
            .sum::<f64>())
}

/// Length of the `u`-level curve by marching squares on the cell-centered
/// node lattice (cube windows, `d = 2`). Segments on the window boundary are
/// never produced: the lattice hull lies strictly inside the window.
pub fn perimeter_marching(fs: &FieldSample, u: f64, grid: &Grid) -> Result<f64> {
    if grid.window.dim() != 2 {
        return Err(GeoError::UnsupportedDimension(grid.window.dim()));
    }
    if grid.window.shape() != Shape::Cube {
        return Err(GeoError::param("grid", "marching squares needs a cube window"));
    }
    let vals = field_on_grid(fs, grid)?;
    Ok(marching_length(&vals, grid.per_axis, grid.spacing, u))
}

fn marching_length(vals: &[f64], m: usize, h: f64, u: f64) -> f64 {
    let at = |i: usize, j: usize| vals[j * m + i];
    let mut total = 0.0;
    // edge crossing positions in cell-local coordinates
    let lerp = |a: f64, b: f64| -> f64 { (u - a) / (b - a) };
    for j in 0..m.saturating_sub(1) {
        for i in 0..m.saturating_sub(1) {
            let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let inside: Vec<bool> = v.iter().map(|&x| x >= u).collect();
            let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            let mut pts: Vec<(usize, (f64, f64))> = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if inside[a] != inside[b] {
                    let t = lerp(v[a], v[b]);
                    let (pa, pb) = (corners[a], corners[b]);
                    pts.push((e, (pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1))));
                }
            }
            let seg = |p: (f64, f64), q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
            match pts.len() {
                2 => total += seg(pts[0].1, pts[1].1),
                4 => {
                    // saddle: resolve with the cell-center average
                    let center = 0.25 * v.iter().sum::<f64>() >= u;
                    if center == inside[0] {
                        // corner 0 joined to corner 2: cut off corners 1 and 3
                        total += seg(pts[0].1, pts[1].1) + seg(pts[2].1, pts[3].1);
                    } else {
                        total += seg(pts[3].1, pts[0].1) + seg(pts[1].1, pts[2].1);
                    }
                }
                _ => {}
            }
        }
    }
    total * h
}

/// `int phi(u) f(u) du` over the support of `phi` by 64-point
/// Gauss-Legendre quadrature.
pub fn integrate_against<F: FnMut(f64) -> f64>(test: &SmoothTest, mut f: F) -> f64 {
    let rule = GaussLegendre::new(64).expect("degree 64 is valid");
    rule.integrate(test.a, test.b, |u| test.phi(u) * f(u))
}

/// Writes `x,y[,z],value` rows for every grid node.
pub fn write_field_csv<W: Write>(fs: &FieldSample, grid: &Grid, mut out: W) -> std::io::Result<()> {
    let vals = field_on_grid(fs, grid).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let axes = ["x", "y", "z"];
    let d = grid.window.dim();
    let header: Vec<String> = (0..d)
        .map(|k| axes.get(k).map_or(format!("x{k}"), |s| s.to_string()))
        .chain(std::iter::once("value".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (p, v) in grid.nodes().iter().zip(vals) {
        let row: Vec<String> = p.iter().chain(std::iter::once(&v)).map(|c| format!("{c:.17e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
