//! Finite point configurations, observation windows and seeded Poisson
//! samplers.
//!
//! A [`PointConfiguration`] stores its coordinates in one flat buffer
//! (`dim` values per point) next to a parallel mark column. Every sampler
//! is a pure function of a [`SeedState`], so replica `k` of a campaign can
//! be regenerated independently of how replicas are scheduled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

/// A point of `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(GeoError::UnsupportedDimension(0));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeoError::param("coords", "all coordinates must be finite"));
        }
        Ok(Point { coords })
    }

    /// Origin of `R^dim`.
    pub fn origin(dim: usize) -> Self {
        Point {
            coords: vec![0.0; dim.max(1)],
        }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Point::new(coords.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point { coords: c.to_vec() }
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point { coords: c.to_vec() }
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Chebyshev (sup-norm) distance.
#[inline]
pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Lexicographic comparison of coordinate slices (total order on floats).
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// A single mark value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mark {
    None,
    /// Arrival time in `(0, 1)`.
    Time(f64),
    /// Rademacher sign.
    Sign(i8),
}

impl Mark {
    pub fn variant(&self) -> MarkVariant {
        match self {
            Mark::None => MarkVariant::None,
            Mark::Time(_) => MarkVariant::Time,
            Mark::Sign(_) => MarkVariant::Sign,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Mark::Time(t) if !(t > 0.0 && t < 1.0) => {
                Err(GeoError::param("mark", format!("time mark {t} outside (0,1)")))
            }
            Mark::Sign(s) if s != 1 && s != -1 => {
                Err(GeoError::param("mark", format!("sign mark {s} not in {{-1,+1}}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkVariant {
    None,
    Time,
    Sign,
}

impl MarkVariant {
    pub fn name(self) -> &'static str {
        match self {
            MarkVariant::None => "none",
            MarkVariant::Time => "time",
            MarkVariant::Sign => "sign",
        }
    }
}

/// Mark column of a configuration; all marks share one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Marks {
    None,
    Time(Vec<f64>),
    Sign(Vec<i8>),
}

impl Marks {
    pub fn variant(&self) -> MarkVariant {
        match self {
            Marks::None => MarkVariant::None,
            Marks::Time(_) => MarkVariant::Time,
            Marks::Sign(_) => MarkVariant::Sign,
        }
    }

    fn empty(variant: MarkVariant) -> Self {
        match variant {
            MarkVariant::None => Marks::None,
            MarkVariant::Time => Marks::Time(Vec::new()),
            MarkVariant::Sign => Marks::Sign(Vec::new()),
        }
    }
}

/// A finite point configuration in `R^dim` with an optional mark column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    dim: usize,
    coords: Vec<f64>,
    marks: Marks,
}

impl PointConfiguration {
    pub fn empty(dim: usize) -> Self {
        PointConfiguration {
            dim,
            coords: Vec::new(),
            marks: Marks::None,
        }
    }

    pub fn empty_marked(dim: usize, variant: MarkVariant) -> Self {
        PointConfiguration {
            dim,
            coords: Vec::new(),
            marks: Marks::empty(variant),
        }
    }

    /// Builds an unmarked configuration from point coordinates.
    ///
    /// Ties and repeated points are accepted here; graph builders break
    /// ties by lexicographic order.
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_coords(dim, p)?;
            coords.extend_from_slice(p);
        }
        Ok(PointConfiguration {
            dim,
            coords,
            marks: Marks::None,
        })
    }

    pub fn from_marked_points(dim: usize, points: &[Vec<f64>], marks: &[Mark]) -> Result<Self> {
        if points.len() != marks.len() {
            return Err(GeoError::param("marks", "length differs from point count"));
        }
        let variant = marks.first().map_or(MarkVariant::None, |m| m.variant());
        let mut cfg = PointConfiguration::empty_marked(dim, variant);
        for (p, m) in points.iter().zip(marks) {
            check_coords(dim, p)?;
            m.validate()?;
            cfg.push_unchecked(p, *m)?;
        }
        Ok(cfg)
    }

    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>, marks: Marks) -> Self {
        PointConfiguration { dim, coords, marks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn coords_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn marks(&self) -> &Marks {
        &self.marks
    }

    pub fn mark_variant(&self) -> MarkVariant {
        self.marks.variant()
    }

    pub fn mark(&self, i: usize) -> Mark {
        match &self.marks {
            Marks::None => Mark::None,
            Marks::Time(t) => Mark::Time(t[i]),
            Marks::Sign(s) => Mark::Sign(s[i]),
        }
    }

    /// Time marks, if the configuration carries them.
    pub fn time_marks(&self) -> Option<&[f64]> {
        match &self.marks {
            Marks::Time(t) => Some(t),
            _ => None,
        }
    }

    pub fn sign_marks(&self) -> Option<&[i8]> {
        match &self.marks {
            Marks::Sign(s) => Some(s),
            _ => None,
        }
    }

    /// Index of a point with exactly these coordinates.
    pub fn position_of(&self, p: &[f64]) -> Option<usize> {
        self.points().position(|q| q == p)
    }

    /// First pair of points with identical coordinates.
    pub fn find_duplicate_points(&self) -> Option<(usize, usize)> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        idx.windows(2)
            .find(|w| self.point(w[0]) == self.point(w[1]))
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
    }

    /// First pair of points carrying the same time mark.
    pub fn find_duplicate_marks(&self) -> Option<(usize, usize)> {
        let times = self.time_marks()?;
        let mut idx: Vec<usize> = (0..times.len()).collect();
        idx.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        idx.windows(2)
            .find(|w| times[w[0]] == times[w[1]])
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
    }

    fn push_unchecked(&mut self, p: &[f64], m: Mark) -> Result<()> {
        match (&mut self.marks, m) {
            (Marks::None, Mark::None) => {}
            (Marks::Time(v), Mark::Time(t)) => v.push(t),
            (Marks::Sign(v), Mark::Sign(s)) => v.push(s),
            (marks, m) => {
                return Err(GeoError::MarkMismatch {
                    expected: marks.variant().name(),
                    got: m.variant().name(),
                })
            }
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// Sub-configuration of the points lying in `region`, in their original
    /// order and with their marks.
    pub fn restrict(&self, region: &Region) -> Result<PointConfiguration> {
        if region.dim() != self.dim {
            return Err(GeoError::DimensionMismatch {
                expected: self.dim,
                got: region.dim(),
            });
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| region.contains(self.point(i)))
            .collect();
        Ok(self.select(&keep))
    }

    /// Sub-configuration made of the listed indices (in that order).
    pub fn select(&self, idx: &[usize]) -> PointConfiguration {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        let marks = match &self.marks {
            Marks::None => Marks::None,
            Marks::Time(t) => Marks::Time(idx.iter().map(|&i| t[i]).collect()),
            Marks::Sign(s) => Marks::Sign(idx.iter().map(|&i| s[i]).collect()),
        };
        PointConfiguration {
            dim: self.dim,
            coords,
            marks,
        }
    }

    /// Configuration with `p` appended.
    pub fn add_point(&self, p: &Point, m: Mark) -> Result<PointConfiguration> {
        check_coords(self.dim, p.coords())?;
        m.validate()?;
        if let Some(i) = self.position_of(p.coords()) {
            return Err(GeoError::DuplicatePoint(i));
        }
        // an empty unmarked configuration adopts the variant of its first mark
        let mut out = if self.is_empty() && self.mark_variant() != m.variant() {
            PointConfiguration::empty_marked(self.dim, m.variant())
        } else {
            self.clone()
        };
        out.push_unchecked(p.coords(), m)?;
        Ok(out)
    }
}

fn check_coords(dim: usize, p: &[f64]) -> Result<()> {
    if p.len() != dim {
        return Err(GeoError::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    if p.iter().any(|c| !c.is_finite()) {
        return Err(GeoError::param("coords", "all coordinates must be finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cube,
    Ball,
}

/// Closed axis-aligned cube (scale = half-side) or Euclidean ball
/// (scale = radius).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    shape: Shape,
    center: Point,
    scale: f64,
}

impl Region {
    pub fn new(shape: Shape, center: Point, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(GeoError::InvalidRegion(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Region {
            shape,
            center,
            scale,
        })
    }

    pub fn cube(center: Point, half_side: f64) -> Result<Self> {
        Region::new(Shape::Cube, center, half_side)
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        Region::new(Shape::Ball, center, radius)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Same shape and center, different scale.
    pub fn with_scale(&self, scale: f64) -> Result<Region> {
        Region::new(self.shape, self.center.clone(), scale)
    }

    /// Same shape and scale, centered at `center`.
    pub fn translated_to(&self, center: &Point) -> Result<Region> {
        Region::new(self.shape, center.clone(), self.scale)
    }

    /// Region with scale reduced by `eps`; errors when `eps >= scale`.
    pub fn shrink(&self, eps: f64) -> Result<Region> {
        if !(eps < self.scale) {
            return Err(GeoError::InvalidRegion(format!(
                "cannot shrink scale {} by {eps}",
                self.scale
            )));
        }
        Region::new(self.shape, self.center.clone(), self.scale - eps)
    }

    /// Closed-set membership.
    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        let c = self.center.coords();
        match self.shape {
            Shape::Cube => p
                .iter()
                .zip(c)
                .all(|(x, y)| (x - y).abs() <= self.scale),
            Shape::Ball => dist2(p, c) <= self.scale * self.scale,
        }
    }

    /// Lebesgue volume.
    pub fn volume(&self) -> f64 {
        let d = self.dim() as i32;
        match self.shape {
            Shape::Cube => (2.0 * self.scale).powi(d),
            Shape::Ball => unit_ball_volume(self.dim()) * self.scale.powi(d),
        }
    }

    /// Euclidean distance from `p` to the region (0 inside).
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        let c = self.center.coords();
        match self.shape {
            Shape::Cube => p
                .iter()
                .zip(c)
                .map(|(x, y)| {
                    let e = ((x - y).abs() - self.scale).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            Shape::Ball => (dist(p, c) - self.scale).max(0.0),
        }
    }

    /// Euclidean distance from `p` to the boundary of the region.
    pub fn boundary_distance(&self, p: &[f64]) -> f64 {
        if self.contains(p) {
            let c = self.center.coords();
            match self.shape {
                Shape::Cube => p
                    .iter()
                    .zip(c)
                    .map(|(x, y)| self.scale - (x - y).abs())
                    .fold(f64::INFINITY, f64::min),
                Shape::Ball => self.scale - dist(p, c),
            }
        } else {
            self.distance_to(p)
        }
    }

    /// Whether `other` is a subset of `self`.
    pub fn contains_region(&self, other: &Region) -> bool {
        let c = self.center.coords();
        let oc = other.center.coords();
        match (self.shape, other.shape) {
            (Shape::Cube, Shape::Cube) => oc
                .iter()
                .zip(c)
                .all(|(x, y)| (x - y).abs() + other.scale <= self.scale),
            (Shape::Cube, Shape::Ball) => oc
                .iter()
                .zip(c)
                .all(|(x, y)| (x - y).abs() + other.scale <= self.scale),
            (Shape::Ball, Shape::Ball) => dist(oc, c) + other.scale <= self.scale,
            (Shape::Ball, Shape::Cube) => {
                // farthest corner of the cube
                let far: f64 = oc
                    .iter()
                    .zip(c)
                    .map(|(x, y)| {
                        let e = (x - y).abs() + other.scale;
                        e * e
                    })
                    .sum();
                far.sqrt() <= self.scale
            }
        }
    }

    /// Whether the closed regions overlap.
    pub fn intersects(&self, other: &Region) -> bool {
        let c = self.center.coords();
        let oc = other.center.coords();
        match (self.shape, other.shape) {
            (Shape::Cube, Shape::Cube) => oc
                .iter()
                .zip(c)
                .all(|(x, y)| (x - y).abs() <= self.scale + other.scale),
            (Shape::Ball, Shape::Ball) => dist(oc, c) <= self.scale + other.scale,
            (Shape::Cube, Shape::Ball) => self.distance_to(oc) <= other.scale,
            (Shape::Ball, Shape::Cube) => other.distance_to(c) <= self.scale,
        }
    }

    /// Uniform point in the region.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let c = self.center.coords();
        loop {
            let start = out.len();
            for &ci in c {
                out.push(ci + self.scale * (2.0 * rng.random::<f64>() - 1.0));
            }
            if self.shape == Shape::Cube || self.contains(&out[start..]) {
                return;
            }
            out.truncate(start);
        }
    }
}

/// Volume of the unit ball of `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Root seed plus stream index; replica `k` of a campaign uses stream `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedState {
    pub root_seed: u64,
    pub stream_index: u64,
}

impl SeedState {
    pub fn new(root_seed: u64, stream_index: u64) -> Self {
        SeedState {
            root_seed,
            stream_index,
        }
    }

    /// ChaCha8 generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Independent root derived from this one and a label, for nested
    /// campaigns (e.g. one root per window scale).
    pub fn derive(&self, label: u64) -> SeedState {
        SeedState::new(splitmix64(self.root_seed ^ splitmix64(label)), self.stream_index)
    }

    pub fn with_stream(&self, stream_index: u64) -> SeedState {
        SeedState::new(self.root_seed, stream_index)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_intensity(region: &Region, intensity: f64) -> Result<f64> {
    if !(intensity > 0.0) || !intensity.is_finite() {
        return Err(GeoError::InvalidIntensity(intensity));
    }
    let mean = intensity * region.volume();
    if !mean.is_finite() {
        return Err(GeoError::InvalidRegion("non-finite volume".into()));
    }
    Ok(mean)
}

fn sample_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as usize
}

/// Homogeneous Poisson process of the given intensity on `region`.
pub fn sample_poisson(region: &Region, intensity: f64, seed: SeedState) -> Result<PointConfiguration> {
    let mut rng = seed.rng();
    sample_poisson_with(region, intensity, &mut rng)
}

/// As [`sample_poisson`], drawing from an existing generator.
pub fn sample_poisson_with<R: Rng + ?Sized>(
    region: &Region,
    intensity: f64,
    rng: &mut R,
) -> Result<PointConfiguration> {
    let mean = check_intensity(region, intensity)?;
    let n = sample_count(mean, rng);
    let mut coords = Vec::with_capacity(n * region.dim());
    for _ in 0..n {
        region.sample_uniform(rng, &mut coords);
    }
    Ok(PointConfiguration::from_raw(region.dim(), coords, Marks::None))
}

/// Homogeneous Poisson process with i.i.d. marks, independent of positions:
/// uniform `(0,1)` times or Rademacher signs.
pub fn sample_marked_poisson(
    region: &Region,
    intensity: f64,
    variant: MarkVariant,
    seed: SeedState,
) -> Result<PointConfiguration> {
    let mut rng = seed.rng();
    sample_marked_poisson_with(region, intensity, variant, &mut rng)
}

pub fn sample_marked_poisson_with<R: Rng + ?Sized>(
    region: &Region,
    intensity: f64,
    variant: MarkVariant,
    rng: &mut R,
) -> Result<PointConfiguration> {
    let base = sample_poisson_with(region, intensity, rng)?;
    let n = base.len();
    let marks = match variant {
        MarkVariant::None => Marks::None,
        MarkVariant::Time => Marks::Time((0..n).map(|_| open_unit(rng)).collect()),
        MarkVariant::Sign => Marks::Sign(
            (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        ),
    };
    Ok(PointConfiguration::from_raw(base.dim, base.coords, marks))
}

/// Uniform draw from the open interval `(0,1)`.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let t: f64 = rng.random();
        if t > 0.0 {
            return t;
        }
    }
}
