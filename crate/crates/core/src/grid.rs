//! Periodic computational box, uniform grids and dyadic cube geometry.
//!
//! The domain is the box `[0, 2L)^n` (n = 1 or 2) with periodic boundary
//! conventions. `L` is a power of two and the number of points per axis is a
//! power of two, so every dyadic cube of level `0..=V_max` is a union of grid
//! cells and the rectangle rule integrates cube indicators exactly.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{pairwise_sum, Real};

/// Minimum number of grid points per axis inside a finest-level cube.
pub const MIN_POINTS_PER_CUBE_AXIS: usize = 4;

/// A uniform periodic grid on `[0, 2L)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    half_extent: T,
    points_per_axis: usize,
    spacing: T,
    log2_half_extent: i32,
    finest_level: u32,
}

fn exact_log2<T: Real>(x: T) -> Option<i32> {
    if !(x > T::zero()) || !x.is_finite() {
        return None;
    }
    let k = x.log2().round();
    let k_int = k.to_i32()?;
    (T::lit(2.0).powi(k_int) == x).then_some(k_int)
}

impl<T: Real> Grid<T> {
    /// Builds the grid for dimension `dim`, half-extent `half_extent` and
    /// `points_per_axis` samples along each axis.
    pub fn new(dim: usize, half_extent: T, points_per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidConfiguration(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if !points_per_axis.is_power_of_two() || points_per_axis < 16 {
            return Err(Error::InvalidConfiguration(format!(
                "points per axis must be a power of two >= 16, got {points_per_axis}"
            )));
        }
        let log_l = exact_log2(half_extent).ok_or_else(|| {
            Error::InvalidConfiguration(format!(
                "half-extent must be a positive power of two, got {half_extent}"
            ))
        })?;
        // Level-0 cubes have unit side and must tile [0, 2L).
        if log_l < -1 {
            return Err(Error::InvalidConfiguration(format!(
                "half-extent {half_extent} too small: the box must contain a unit cube"
            )));
        }
        let spacing = T::lit(2.0) * half_extent / T::from_usize_lossy(points_per_axis);
        // Points per unit length is 2^(log2 N - log2 L - 1).
        let log_points_per_unit = points_per_axis.trailing_zeros() as i32 - log_l - 1;
        let finest = log_points_per_unit - MIN_POINTS_PER_CUBE_AXIS.trailing_zeros() as i32;
        if finest < 0 {
            return Err(Error::InvalidConfiguration(format!(
                "grid too coarse: a unit cube holds fewer than {MIN_POINTS_PER_CUBE_AXIS} points per axis"
            )));
        }
        Ok(Self {
            dim,
            half_extent,
            points_per_axis,
            spacing,
            log2_half_extent: log_l,
            finest_level: finest as u32,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_extent(&self) -> T {
        self.half_extent
    }

    /// Side length `2L` of the box.
    pub fn extent(&self) -> T {
        T::lit(2.0) * self.half_extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Total number of grid points, `N^n`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell measure `h^n`.
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim as i32)
    }

    /// Finest dyadic level `V_max` whose cubes still hold at least
    /// [`MIN_POINTS_PER_CUBE_AXIS`] points per axis.
    pub fn finest_level(&self) -> u32 {
        self.finest_level
    }

    /// Grid points per axis inside one cube of level `v` (requires `v <= V_max`).
    pub fn cells_per_cube_axis(&self, level: u32) -> usize {
        let per_unit = self.points_per_axis >> (self.log2_half_extent + 1);
        per_unit >> level
    }

    /// Number of level-`v` cubes along one axis of the box.
    pub fn cubes_per_axis(&self, level: u32) -> usize {
        self.points_per_axis / self.cells_per_cube_axis(level)
    }

    /// Axis indices `[i0, i1]` of a flat index (`i1 = 0` when `n = 1`).
    #[inline]
    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx % self.points_per_axis, idx / self.points_per_axis]
        }
    }

    #[inline]
    pub fn flat_index(&self, axes: [usize; 2]) -> usize {
        axes[0] + if self.dim == 2 { axes[1] * self.points_per_axis } else { 0 }
    }

    /// Coordinates of grid point `idx`; samples sit at `i * h`.
    #[inline]
    pub fn coords(&self, idx: usize) -> [T; 2] {
        let [i0, i1] = self.axis_indices(idx);
        [
            T::from_usize_lossy(i0) * self.spacing,
            T::from_usize_lossy(i1) * self.spacing,
        ]
    }

    /// Periodic separation along one axis, in units of cells.
    #[inline]
    fn wrap_cells(&self, d: usize) -> usize {
        d.min(self.points_per_axis - d)
    }

    /// Periodic Euclidean distance between two grid points.
    pub fn periodic_distance(&self, a: usize, b: usize) -> T {
        let [a0, a1] = self.axis_indices(a);
        let [b0, b1] = self.axis_indices(b);
        let d0 = self.wrap_cells(a0.abs_diff(b0));
        let d1 = self.wrap_cells(a1.abs_diff(b1));
        let s2 = (d0 * d0 + d1 * d1) as f64;
        T::lit(s2.sqrt()) * self.spacing
    }

    /// Periodic distance from grid point `idx` to the origin.
    pub fn distance_to_origin(&self, idx: usize) -> T {
        self.periodic_distance(idx, 0)
    }

    /// Periodic distance from grid point `idx` to the box center `(L, .., L)`.
    pub fn distance_to_center(&self, idx: usize) -> T {
        let [i0, i1] = self.axis_indices(idx);
        let half = self.points_per_axis / 2;
        let d0 = i0.abs_diff(half);
        let d1 = if self.dim == 2 { i1.abs_diff(half) } else { 0 };
        T::lit(((d0 * d0 + d1 * d1) as f64).sqrt()) * self.spacing
    }

    /// Signed integer DFT frequency index along an axis, in `(-N/2, N/2]`.
    #[inline]
    pub fn signed_frequency(&self, k: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let k = k as i64;
        if k > n / 2 {
            k - n
        } else {
            k
        }
    }

    /// Angular frequency vector of DFT bin `idx`: `xi = pi k / L`.
    pub fn angular_frequency(&self, idx: usize) -> [T; 2] {
        let [k0, k1] = self.axis_indices(idx);
        let scale = T::PI() / self.half_extent;
        [
            T::lit(self.signed_frequency(k0) as f64) * scale,
            if self.dim == 2 {
                T::lit(self.signed_frequency(k1) as f64) * scale
            } else {
                T::zero()
            },
        ]
    }

    /// Euclidean norm of [`Self::angular_frequency`].
    pub fn frequency_norm(&self, idx: usize) -> T {
        let [a, b] = self.angular_frequency(idx);
        (a * a + b * b).sqrt()
    }

    /// Angular Nyquist frequency `pi / h`.
    pub fn nyquist(&self) -> T {
        T::PI() / self.spacing
    }

    /// Rectangle-rule integral of real samples.
    pub fn integrate(&self, samples: &[T]) -> T {
        pairwise_sum(samples) * self.cell_volume()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}

/// Dyadic cube `Q_{v,m}` of side `2^{-v}` and lower-left corner `2^{-v} m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub level: u32,
    /// Multi-index `m`; the second component is zero in one dimension.
    pub index: [i64; 2],
}

impl DyadicCube {
    pub fn new(level: u32, index: [i64; 2]) -> Self {
        Self { level, index }
    }

    pub fn side<T: Real>(&self) -> T {
        T::lit(2.0).powi(-(self.level as i32))
    }

    /// `|Q| = 2^{-vn}`.
    pub fn measure<T: Real>(&self, dim: usize) -> T {
        T::lit(2.0).powi(-((self.level as usize * dim) as i32))
    }

    pub fn corner<T: Real>(&self) -> [T; 2] {
        let s: T = self.side();
        [
            T::lit(self.index[0] as f64) * s,
            T::lit(self.index[1] as f64) * s,
        ]
    }

    /// The unique cube of level `v - 1` containing this one.
    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            index: [self.index[0].div_euclid(2), self.index[1].div_euclid(2)],
        })
    }

    /// Checks that the cube lies inside the box and is resolved by the grid.
    pub fn validate<T: Real>(&self, grid: &Grid<T>) -> Result<()> {
        if self.level > grid.finest_level() {
            return Err(Error::ResolutionExceeded {
                level: self.level as i64,
                max: grid.finest_level() as i64,
            });
        }
        let per_axis = grid.cubes_per_axis(self.level) as i64;
        let active = if grid.dim() == 1 { 1 } else { 2 };
        for (i, &m) in self.index.iter().enumerate() {
            let ok = if i < active { (0..per_axis).contains(&m) } else { m == 0 };
            if !ok {
                return Err(Error::InvalidConfiguration(format!(
                    "cube Q_{{{},{:?}}} lies outside the box [0, {})^{}",
                    self.level,
                    &self.index[..active],
                    grid.extent(),
                    grid.dim()
                )));
            }
        }
        Ok(())
    }

    /// Flat index of the grid point at the cube's lower-left corner.
    pub fn corner_index<T: Real>(&self, grid: &Grid<T>) -> usize {
        let c = grid.cells_per_cube_axis(self.level);
        grid.flat_index([self.index[0] as usize * c, self.index[1] as usize * c])
    }

    /// Flat indices of all grid cells inside the cube (assumes a valid cube).
    pub fn cells<T: Real>(&self, grid: &Grid<T>) -> Vec<usize> {
        let c = grid.cells_per_cube_axis(self.level);
        let s0 = self.index[0] as usize * c;
        if grid.dim() == 1 {
            (s0..s0 + c).collect()
        } else {
            let s1 = self.index[1] as usize * c;
            let mut out = Vec::with_capacity(c * c);
            for i1 in s1..s1 + c {
                for i0 in s0..s0 + c {
                    out.push(grid.flat_index([i0, i1]));
                }
            }
            out
        }
    }

    /// Number of grid cells inside the cube.
    pub fn cell_count<T: Real>(&self, grid: &Grid<T>) -> usize {
        grid.cells_per_cube_axis(self.level).pow(grid.dim() as u32)
    }

    /// The dyadic cube of level `v` containing grid point `idx`.
    pub fn containing<T: Real>(grid: &Grid<T>, level: u32, idx: usize) -> Self {
        let c = grid.cells_per_cube_axis(level);
        let [i0, i1] = grid.axis_indices(idx);
        Self::new(level, [(i0 / c) as i64, (i1 / c) as i64])
    }
}

/// All cubes of level `v` inside the box, ordered with the first axis fastest.
pub fn enumerate_cubes<T: Real>(grid: &Grid<T>, level: u32) -> Result<Vec<DyadicCube>> {
    if level > grid.finest_level() {
        return Err(Error::ResolutionExceeded {
            level: level as i64,
            max: grid.finest_level() as i64,
        });
    }
    let per_axis = grid.cubes_per_axis(level) as i64;
    let outer = if grid.dim() == 2 { per_axis } else { 1 };
    let mut cubes = Vec::with_capacity((per_axis * outer) as usize);
    for m1 in 0..outer {
        for m0 in 0..per_axis {
            cubes.push(DyadicCube::new(level, [m0, m1]));
        }
    }
    Ok(cubes)
}

/// Indicator `chi_{v,m}` sampled on the grid.
pub fn cube_mask<T: Real>(cube: &DyadicCube, grid: &Grid<T>) -> Result<GridFunction<T>> {
    cube.validate(grid)?;
    let mut values = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    for idx in cube.cells(grid) {
        values[idx] = Complex::new(T::one(), T::zero());
    }
    GridFunction::new(*grid, values)
}

/// Complex samples of a function on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self {
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); grid.len()],
        }
    }

    pub fn from_real(grid: Grid<T>, values: &[T]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&r| Complex::new(r, T::zero())).collect())
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid<T>, mut f: impl FnMut([T; 2]) -> Complex<T>) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Pointwise modulus.
    pub fn abs(&self) -> Vec<T> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| z * c).collect(),
        }
    }

    /// Pointwise `a * self + b * other`.
    pub fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::InvalidConfiguration("grid mismatch".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| x * a + y * b)
            .collect();
        Ok(Self { grid: self.grid, values })
    }

    /// Rectangle-rule integral of the samples.
    pub fn mass(&self) -> Complex<T> {
        let re: Vec<T> = self.values.iter().map(|z| z.re).collect();
        let im: Vec<T> = self.values.iter().map(|z| z.im).collect();
        Complex::new(self.grid.integrate(&re), self.grid.integrate(&im))
    }
}
