//! Uniform cell-centred grids on the cube `[-half_width, half_width]^dim` and
//! scalar fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub dim: usize,
    pub half_width: T,
    pub points_per_axis: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(dim: usize, half_width: T, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::domain("dim", format!("grids support dim 1 or 2, got {dim}")));
        }
        if !(half_width > T::zero() && half_width.is_finite()) {
            return Err(Error::domain("half_width", format!("must be > 0, got {half_width}")));
        }
        if points_per_axis == 0 || !points_per_axis.is_multiple_of(2) {
            return Err(Error::domain(
                "points_per_axis",
                format!("must be positive and even, got {points_per_axis}"),
            ));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
        })
    }

    #[inline]
    pub fn spacing(&self) -> T {
        T::lit(2.0) * self.half_width / T::of_usize(self.points_per_axis)
    }

    /// Quadrature weight `h^dim` of one cell.
    #[inline]
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell-centre coordinate of node `i` along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        -self.half_width + (T::of_usize(i) + T::lit(0.5)) * self.spacing()
    }

    pub fn axis_coords(&self) -> Vec<T> {
        (0..self.points_per_axis).map(|i| self.coord(i)).collect()
    }

    /// Writes the coordinates of flat node `index` into `out` (row-major, axis 0 slowest).
    #[inline]
    pub fn point(&self, index: usize, out: &mut [T]) {
        let n = self.points_per_axis;
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            out[axis] = self.coord(rest % n);
            rest /= n;
        }
    }

    /// Flat indices of nodes on the outermost layer of the grid.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let n = self.points_per_axis;
        (0..self.len())
            .filter(|&idx| {
                let mut rest = idx;
                (0..self.dim).any(|_| {
                    let i = rest % n;
                    rest /= n;
                    i == 0 || i == n - 1
                })
            })
            .collect()
    }
}

/// Values of a scalar field at the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField<T> {
    pub spec: GridSpec<T>,
    pub values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                spec.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain("values", format!("non-finite value at node {bad}")));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec<T>) -> Self {
        Self {
            spec,
            values: vec![T::zero(); spec.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(spec: GridSpec<T>, mut f: impl FnMut(&[T]) -> T) -> Self {
        let mut point = vec![T::zero(); spec.dim];
        let values = (0..spec.len())
            .map(|idx| {
                spec.point(idx, &mut point);
                f(&point)
            })
            .collect();
        Self { spec, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Shape(format!(
                "grids differ: {:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect(),
        })
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: T, other: &Self) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + c * b;
        }
        Ok(())
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.spec.cell_volume()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Largest `|value|` on the outermost layer of nodes.
    pub fn boundary_max_abs(&self) -> T {
        self.spec
            .boundary_nodes()
            .into_iter()
            .map(|i| self.values[i].abs())
            .fold(T::zero(), T::max)
    }

    /// Mirror image `x -> -x` (all axes).
    pub fn mirrored(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            spec: self.spec,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, 1.0, 3).is_err());
        assert!(GridSpec::new(3, 1.0, 4).is_err());
        assert!(GridSpec::new(1, 0.0, 4).is_err());
        let spec = GridSpec::new(1, 2.0, 4).unwrap();
        assert_eq!(spec.spacing(), 1.0);
        assert_eq!(spec.axis_coords(), vec![-1.5, -0.5, 0.5, 1.5]);
    }

    #[test]
    fn two_dimensional_layout_is_row_major() {
        let spec = GridSpec::new(2, 1.0, 2).unwrap();
        let field = GridField::from_fn(spec, |x| 10.0 * x[0] + x[1]);
        assert_eq!(field.values, vec![-5.5, -4.5, 4.5, 5.5]);
        assert_eq!(spec.boundary_nodes().len(), 4);
        let big = GridSpec::new(2, 1.0, 4).unwrap();
        assert_eq!(big.boundary_nodes().len(), 12);
    }

    #[test]
    fn integral_of_constant_is_volume() {
        let spec = GridSpec::new(2, 1.5f64, 6).unwrap();
        let field = GridField::from_fn(spec, |_| 2.0);
        assert!((field.integral() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_values() {
        let spec = GridSpec::new(1, 1.0, 2).unwrap();
        assert!(GridField::new(spec, vec![0.0, f64::NAN]).is_err());
        assert!(GridField::new(spec, vec![0.0]).is_err());
    }
}
