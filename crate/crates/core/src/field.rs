//! Uniform tensor grids, node-sampled fields, finite-difference stencils and
//! trapezoid quadrature.
//!
//! Nodes are indexed row-major: node `(i, j)` sits at `(x0 + i*hx, y0 + j*hy)`
//! and lives at `j * (nx + 1) + i` in every value array.

use serde::{Deserialize, Serialize};

use crate::bump::TestBump;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Minimum number of cells per axis; the one-sided boundary stencils need it.
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl GridSpec {
    /// Grid with `nx` by `ny` cells covering the rectangle `[lo, hi]`.
    pub fn new(nx: usize, ny: usize, lo: Point, hi: Point) -> Result<Self> {
        if !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(Error::Config(format!("empty rectangle [{lo:?}, {hi:?}]")));
        }
        let grid = GridSpec {
            nx,
            ny,
            x0: lo[0],
            y0: lo[1],
            hx: (hi[0] - lo[0]) / nx as f64,
            hy: (hi[1] - lo[1]) / ny as f64,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Square grid with `n` cells per side over `[lo, hi]²`.
    pub fn square(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(n, n, [lo, lo], [hi, hi])
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_CELLS || self.ny < MIN_CELLS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_CELLS} cells per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        let finite = [self.x0, self.y0, self.hx, self.hy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.hx <= 0.0 || self.hy <= 0.0 {
            return Err(Error::Config(format!("invalid grid geometry {self:?}")));
        }
        Ok(())
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.nx as f64 * self.hx
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.ny as f64 * self.hy
    }

    /// Nodes along x (`nx + 1`).
    pub fn cols(&self) -> usize {
        self.nx + 1
    }

    pub fn rows(&self) -> usize {
        self.ny + 1
    }

    pub fn len(&self) -> usize {
        self.cols() * self.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cols() + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        [self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy]
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Whether the closed disk `B(center, radius)` lies inside the closed rectangle.
    pub fn contains_disk(&self, center: Point, radius: f64) -> bool {
        center[0] - radius >= self.x0
            && center[0] + radius <= self.x1()
            && center[1] - radius >= self.y0
            && center[1] + radius <= self.y1()
    }

    /// Whether the closed disk stays away from the boundary ring of nodes.
    pub fn disk_is_interior(&self, center: Point, radius: f64) -> bool {
        center[0] - radius > self.x0 + self.hx
            && center[0] + radius < self.x1() - self.hx
            && center[1] - radius > self.y0 + self.hy
            && center[1] + radius < self.y1() - self.hy
    }

    /// Trapezoid weight of node `(i, j)`.
    #[inline]
    pub fn trapezoid_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.hx * self.hy
    }

    /// The same rectangle with twice as many cells per axis.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            hx: 0.5 * self.hx,
            hy: 0.5 * self.hy,
            ..*self
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, Point)> + '_ {
        (0..self.rows()).flat_map(move |j| (0..self.cols()).map(move |i| (i, j, self.node(i, j))))
    }
}

/// Pointwise value and first derivatives of a planar function.
pub trait PlanarFunction {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> [f64; 2];
}

/// Second-order jet at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    /// Symmetric: `hess[0][1] == hess[1][0]`.
    pub hess: [[f64; 2]; 2],
}

/// Functions with exactly computable second derivatives.
pub trait SecondOrder {
    fn jet(&self, x: Point) -> Jet;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorField {
    pub grid: GridSpec,
    pub comp1: Vec<f64>,
    pub comp2: Vec<f64>,
}

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(k) => Err(Error::Domain(format!(
            "{what}: non-finite value {} at node {k}",
            values[k]
        ))),
    }
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        check_finite("scalar field", &values)?;
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at every node.
    pub fn sample(grid: GridSpec, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = grid.nodes().map(|(_, _, x)| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Max abs difference over interior nodes only.
    pub fn interior_max_abs_diff(&self, other: &ScalarField) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for j in 1..g.ny {
            for i in 1..g.nx {
                let k = g.index(i, j);
                worst = worst.max((self.values[k] - other.values[k]).abs());
            }
        }
        worst
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            grid: GridSpec,
            values: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        Self::new(raw.grid, raw.values)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl VectorField {
    pub fn new(grid: GridSpec, comp1: Vec<f64>, comp2: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if comp1.len() != grid.len() || comp2.len() != grid.len() {
            return Err(Error::Config("vector component length mismatch".into()));
        }
        check_finite("vector field comp1", &comp1)?;
        check_finite("vector field comp2", &comp2)?;
        Ok(VectorField { grid, comp1, comp2 })
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.comp1[k], self.comp2[k]]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            grid: GridSpec,
            comp1: Vec<f64>,
            comp2: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        Self::new(raw.grid, raw.comp1, raw.comp2)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Second-order first derivative along x (`axis == 0`) or y.
fn diff(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let (n, h) = if axis == 0 {
        (grid.nx, grid.hx)
    } else {
        (grid.ny, grid.hy)
    };
    let at = |i: usize, j: usize, s: usize| -> f64 {
        if axis == 0 {
            f[grid.index(s, j)]
        } else {
            f[grid.index(i, s)]
        }
    };
    let mut out = vec![0.0; f.len()];
    for j in 0..grid.rows() {
        for i in 0..grid.cols() {
            let s = if axis == 0 { i } else { j };
            let d = if s == 0 {
                (-3.0 * at(i, j, 0) + 4.0 * at(i, j, 1) - at(i, j, 2)) / (2.0 * h)
            } else if s == n {
                (3.0 * at(i, j, n) - 4.0 * at(i, j, n - 1) + at(i, j, n - 2)) / (2.0 * h)
            } else {
                (at(i, j, s + 1) - at(i, j, s - 1)) / (2.0 * h)
            };
            out[grid.index(i, j)] = d;
        }
    }
    out
}

/// Second-order pure second derivative along one axis.
fn diff2(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let (n, h) = if axis == 0 {
        (grid.nx, grid.hx)
    } else {
        (grid.ny, grid.hy)
    };
    let at = |i: usize, j: usize, s: usize| -> f64 {
        if axis == 0 {
            f[grid.index(s, j)]
        } else {
            f[grid.index(i, s)]
        }
    };
    let h2 = h * h;
    let mut out = vec![0.0; f.len()];
    for j in 0..grid.rows() {
        for i in 0..grid.cols() {
            let s = if axis == 0 { i } else { j };
            let d = if s == 0 {
                (2.0 * at(i, j, 0) - 5.0 * at(i, j, 1) + 4.0 * at(i, j, 2) - at(i, j, 3)) / h2
            } else if s == n {
                (2.0 * at(i, j, n) - 5.0 * at(i, j, n - 1) + 4.0 * at(i, j, n - 2)
                    - at(i, j, n - 3))
                    / h2
            } else {
                (at(i, j, s + 1) - 2.0 * at(i, j, s) + at(i, j, s - 1)) / h2
            };
            out[grid.index(i, j)] = d;
        }
    }
    out
}

/// Discrete gradient: central differences inside, one-sided second-order
/// differences on the boundary ring.
pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    f.grid.validate()?;
    let g = f.grid;
    VectorField::new(g, diff(&g, &f.values, 0), diff(&g, &f.values, 1))
}

/// Fourth-order central gradient at nodes at least two steps from the edge;
/// the outer two rings keep the second-order stencil of [`gradient`].
pub fn gradient4(f: &ScalarField) -> Result<VectorField> {
    f.grid.validate()?;
    let g = f.grid;
    let mut out = [diff(&g, &f.values, 0), diff(&g, &f.values, 1)];
    for (axis, d) in out.iter_mut().enumerate() {
        let (n, h) = if axis == 0 {
            (g.nx, g.hx)
        } else {
            (g.ny, g.hy)
        };
        if n < 4 {
            continue;
        }
        for j in 0..g.rows() {
            for i in 0..g.cols() {
                let s = if axis == 0 { i } else { j };
                if s < 2 || s + 2 > n {
                    continue;
                }
                let at = |t: usize| {
                    if axis == 0 {
                        f.values[g.index(t, j)]
                    } else {
                        f.values[g.index(i, t)]
                    }
                };
                d[g.index(i, j)] =
                    (at(s - 2) - 8.0 * at(s - 1) + 8.0 * at(s + 1) - at(s + 2)) / (12.0 * h);
            }
        }
    }
    let [dx, dy] = out;
    VectorField::new(g, dx, dy)
}

/// Stencil Hessian of a sampled field.
#[derive(Debug, Clone)]
pub struct HessianField {
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
}

impl HessianField {
    #[inline]
    pub fn at(&self, k: usize) -> [[f64; 2]; 2] {
        [[self.xx[k], self.xy[k]], [self.xy[k], self.yy[k]]]
    }
}

/// Second-order stencil Hessian; the mixed derivative is the y-difference of
/// the x-difference (the four-corner formula at interior nodes).
pub fn hessian(f: &ScalarField) -> Result<HessianField> {
    f.grid.validate()?;
    let g = f.grid;
    let fx = diff(&g, &f.values, 0);
    Ok(HessianField {
        xx: diff2(&g, &f.values, 0),
        xy: diff(&g, &fx, 1),
        yy: diff2(&g, &f.values, 1),
    })
}

/// Tensor-product trapezoid rule for `∫ f` or `∫ f ψ`.
pub fn integrate(f: &ScalarField, weight: Option<&TestBump>) -> Result<f64> {
    let g = &f.grid;
    if let Some(psi) = weight {
        if !g.contains_disk(psi.center, psi.radius) {
            return Err(Error::Domain(format!(
                "bump support B({:?}, {}) escapes the grid rectangle",
                psi.center, psi.radius
            )));
        }
    }
    let mut total = 0.0;
    for (i, j, x) in g.nodes() {
        let w = g.trapezoid_weight(i, j);
        let v = f.values[g.index(i, j)];
        total += match weight {
            Some(psi) => w * v * psi.value(x),
            None => w * v,
        };
    }
    Ok(total)
}

/// Trapezoid sum of a nodewise integrand built from the node index and position.
pub fn integrate_nodes(grid: &GridSpec, mut f: impl FnMut(usize, Point) -> f64) -> f64 {
    let mut total = 0.0;
    for (i, j, x) in grid.nodes() {
        let w = grid.trapezoid_weight(i, j);
        if w != 0.0 {
            total += w * f(grid.index(i, j), x);
        }
    }
    total
}

/// Bilinear interpolant of a sampled field and of its stencil gradient.
#[derive(Debug, Clone)]
pub struct Interpolant {
    pub u: ScalarField,
    pub du: VectorField,
}

impl Interpolant {
    pub fn new(u: ScalarField) -> Result<Self> {
        let du = gradient(&u)?;
        Ok(Interpolant { u, du })
    }

    fn locate(&self, x: Point) -> (usize, usize, f64, f64) {
        let g = &self.u.grid;
        let sx = ((x[0] - g.x0) / g.hx).clamp(0.0, g.nx as f64);
        let sy = ((x[1] - g.y0) / g.hy).clamp(0.0, g.ny as f64);
        let i = (sx.floor() as usize).min(g.nx - 1);
        let j = (sy.floor() as usize).min(g.ny - 1);
        (i, j, sx - i as f64, sy - j as f64)
    }

    fn blend(&self, vals: &[f64], x: Point) -> f64 {
        let g = &self.u.grid;
        let (i, j, tx, ty) = self.locate(x);
        let v00 = vals[g.index(i, j)];
        let v10 = vals[g.index(i + 1, j)];
        let v01 = vals[g.index(i, j + 1)];
        let v11 = vals[g.index(i + 1, j + 1)];
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }
}

impl PlanarFunction for Interpolant {
    fn value(&self, x: Point) -> f64 {
        self.blend(&self.u.values, x)
    }

    fn gradient(&self, x: Point) -> [f64; 2] {
        [self.blend(&self.du.comp1, x), self.blend(&self.du.comp2, x)]
    }
}
