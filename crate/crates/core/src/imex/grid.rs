use std::f64::consts::PI;

use num_complex::Complex64;

use super::ImexError;

/// Uniform periodic grid of `J` cells on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    cells: usize,
    dx: f64,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(cells: usize) -> Result<Self, ImexError> {
        if cells < Self::MIN_CELLS {
            return Err(ImexError::TooFewCells(cells));
        }
        Ok(Self {
            cells,
            dx: 1.0 / cells as f64,
        })
    }

    /// Grid whose cell width is `dx`, which must divide 1 to within 1e-9.
    pub fn with_dx(dx: f64) -> Result<Self, ImexError> {
        let n = (1.0 / dx).round();
        if dx.is_nan() || dx <= 0.0 || !n.is_finite() || ((n * dx) - 1.0).abs() > 1e-9 {
            return Err(ImexError::IncommensurateDx(dx));
        }
        Self::new(n as usize)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Center of cell `j`.
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(|j| self.x(j))
    }
}

/// Cell values `u_j ∈ ℝᵈ`, stored cell by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self, ImexError> {
        let expected = grid.cells() * dim;
        if dim == 0 || values.len() != expected {
            return Err(ImexError::FieldShape {
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ImexError::NonFinite);
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.cells() * dim],
        }
    }

    /// `u_j = c` in every cell.
    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let values = value
            .iter()
            .copied()
            .cycle()
            .take(grid.cells() * value.len())
            .collect();
        Self {
            grid,
            dim: value.len(),
            values,
        }
    }

    pub(crate) fn from_raw(grid: Grid, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells() * dim);
        Self { grid, dim, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `sqrt(Δx · Σⱼ ‖uⱼ‖²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Spatial mean of each component.
    pub fn means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for cell in self.values.chunks(self.dim) {
            for (acc, v) in m.iter_mut().zip(cell) {
                *acc += v;
            }
        }
        let n = self.grid.cells() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &GridField, b: f64) -> Result<GridField, ImexError> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(ImexError::FieldShape {
                expected: self.values.len(),
                actual: other.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_raw(self.grid, self.dim, values))
    }

    /// Applies `f` to every cell vector.
    pub fn map_cells(&self, out_dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> GridField {
        let mut values = Vec::with_capacity(self.grid.cells() * out_dim);
        for cell in self.values.chunks(self.dim) {
            let v = f(cell);
            debug_assert_eq!(v.len(), out_dim);
            values.extend(v);
        }
        Self::from_raw(self.grid, out_dim, values)
    }
}

/// `u_j = Re Σ c_k e^{i2πk x_j}`.
pub fn init_fourier(
    grid: Grid,
    dim: usize,
    modes: &[(i64, Vec<Complex64>)],
) -> Result<GridField, ImexError> {
    let mut values = vec![0.0; grid.cells() * dim];
    for (k, coeff) in modes {
        if 2 * k.unsigned_abs() as usize >= grid.cells() {
            return Err(ImexError::UnresolvedMode {
                k: *k,
                cells: grid.cells(),
            });
        }
        if coeff.len() != dim {
            return Err(ImexError::FieldShape {
                expected: dim,
                actual: coeff.len(),
            });
        }
        for (j, x) in grid.centers().enumerate() {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * (*k as f64) * x);
            for (i, c) in coeff.iter().enumerate() {
                values[j * dim + i] += (c * phase).re;
            }
        }
    }
    GridField::new(grid, dim, values)
}

/// Coefficient `c` of mode `k` (0 < k < J/2) in `u_j = Re(c·e^{i2πk x_j}) + …`,
/// i.e. `(2/J) Σⱼ uⱼ e^{−i2πk xⱼ}`.
pub fn fourier_coefficient(u: &GridField, k: i64) -> Result<Vec<Complex64>, ImexError> {
    let grid = u.grid();
    let cells = grid.cells();
    if k == 0 || 2 * k.unsigned_abs() as usize >= cells {
        return Err(ImexError::UnresolvedMode { k, cells });
    }
    let d = u.dim();
    let mut c = vec![Complex64::new(0.0, 0.0); d];
    for (j, x) in grid.centers().enumerate() {
        let phase = Complex64::from_polar(2.0 / cells as f64, -2.0 * PI * k as f64 * x);
        for (ci, v) in c.iter_mut().zip(u.cell(j)) {
            *ci += phase * v;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_checks() {
        assert!(Grid::new(3).is_err());
        let g = Grid::new(4).unwrap();
        assert_eq!(g.x(0), 0.125);
        assert_eq!(Grid::with_dx(1.0 / 200.0).unwrap().cells(), 200);
        assert!(Grid::with_dx(0.3).is_err());
    }

    #[test]
    fn fourier_examples() {
        let g = Grid::new(16).unwrap();
        let one = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let u = init_fourier(g, 3, &[(2, one.clone())]).unwrap();
        for (j, x) in g.centers().enumerate() {
            assert!((u.cell(j)[0] - (4.0 * PI * x).cos()).abs() < 1e-14);
            assert_eq!(u.cell(j)[1], 0.0);
        }
        let z = init_fourier(g, 3, &[]).unwrap();
        assert_eq!(z.l2_norm(), 0.0);
        let c = vec![Complex64::new(1.5, 0.0), Complex64::new(-2.0, 0.0)];
        let u = init_fourier(g, 2, &[(0, c)]).unwrap();
        assert!(u.values().chunks(2).all(|v| v == [1.5, -2.0]));
        assert!(init_fourier(g, 3, &[(8, one.clone())]).is_err());
        assert!(init_fourier(g, 3, &[(-8, one)]).is_err());
    }

    #[test]
    fn coefficient_roundtrip() {
        let g = Grid::new(11).unwrap();
        let c = vec![Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5)];
        let u = init_fourier(
            g,
            2,
            &[
                (3, c.clone()),
                (1, vec![Complex64::new(1.0, 0.0); 2]),
                (0, vec![Complex64::new(4.0, 0.0); 2]),
            ],
        )
        .unwrap();
        let back = fourier_coefficient(&u, 3).unwrap();
        for (a, b) in back.iter().zip(&c) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(fourier_coefficient(&u, 0).is_err());
        assert!(fourier_coefficient(&u, 6).is_err());
    }

    #[test]
    fn l2_and_means() {
        let g = Grid::new(8).unwrap();
        let u = GridField::constant(g, &[3.0, -4.0]);
        assert!((u.l2_norm() - 5.0).abs() < 1e-14);
        assert_eq!(u.means(), vec![3.0, -4.0]);
        assert!(GridField::new(g, 2, vec![0.0; 15]).is_err());
        assert!(GridField::new(g, 1, vec![f64::NAN; 8]).is_err());
    }
}
