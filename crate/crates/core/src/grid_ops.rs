//! Spatial discretization on uniform interval/rectangle grids.
//!
//! Everything here is built around one choice: the Neumann Laplacian is the
//! standard second-order stencil with mirror ghost points, and the spectral
//! machinery (slow/fast splitting, tensor diffusion solves) uses the exact
//! eigenvectors of that *discrete* stencil, which are the type-I cosine modes
//! `cos(pi k j / (n-1))`. Projections therefore commute with the discrete
//! Laplacian to rounding, not merely to O(h^2).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float in decimal scientific notation with 17 significant digits
/// (enough to round-trip any f64). Used for every numeric artifact.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Uniform tensor grid on an interval (dim 1) or rectangle (dim 2).
///
/// Points are vertex-centered: axis `a` holds `n[a]` points at spacing
/// `lengths[a] / (n[a] - 1)`, endpoints included. Default side length is pi.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n: Vec<usize>,
    lengths: Vec<f64>,
}

/// Default side length per axis.
pub const DEFAULT_LENGTH: f64 = std::f64::consts::PI;

impl Grid {
    /// 1D grid on `(0, length)` with `n` points.
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Self::new(1, &[n], &[length])
    }

    /// 2D grid on `(0, lx) x (0, ly)` with `nx * ny` points.
    pub fn rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(2, &[nx, ny], &[lx, ly])
    }

    pub fn new(dim: usize, n: &[usize], lengths: &[f64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("grid dim must be 1 or 2, got {dim}")));
        }
        if n.len() != dim || lengths.len() != dim {
            return Err(Error::mismatch(format!(
                "grid dim {dim} needs {dim} point counts and lengths, got {} and {}",
                n.len(),
                lengths.len()
            )));
        }
        for (&ni, &li) in n.iter().zip(lengths) {
            if ni < 3 {
                return Err(Error::invalid(format!("need at least 3 points per axis, got {ni}")));
            }
            if !(li > 0.0) || !li.is_finite() {
                return Err(Error::invalid(format!("axis length must be positive, got {li}")));
            }
        }
        Ok(Grid {
            dim,
            n: n.to_vec(),
            lengths: lengths.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point count along `axis`.
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.n[axis] - 1) as f64
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Domain measure (length or area).
    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Node coordinates along `axis`.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.n[axis]).map(|i| i as f64 * h).collect()
    }

    /// Trapezoid quadrature weight of flattened point `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        let mut w = 1.0;
        let mut rem = idx;
        for a in 0..self.dim {
            let i = rem % self.n[a];
            rem /= self.n[a];
            let h = self.spacing(a);
            w *= if i == 0 || i == self.n[a] - 1 { 0.5 * h } else { h };
        }
        w
    }

    /// All trapezoid weights, flattened in field order.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }
}

/// Scalar field on a [`Grid`], stored row-major (first axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    /// Wraps raw values, checking conformity and finiteness.
    pub fn new(values: Vec<f64>, grid: &Grid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::mismatch(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field contains non-finite entries"));
        }
        Ok(Field { values })
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Field {
            values: vec![value; grid.len()],
        }
    }

    /// Wraps raw values without conformity checks; every grid-bound operation
    /// re-validates the length.
    pub fn from_raw(values: Vec<f64>) -> Self {
        Field { values }
    }

    /// Builds a field from a function of the point coordinates.
    /// In 1D the second coordinate is 0.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nx = grid.n(0);
        let hx = grid.spacing(0);
        let mut values = Vec::with_capacity(grid.len());
        if grid.dim() == 1 {
            for i in 0..nx {
                values.push(f(i as f64 * hx, 0.0));
            }
        } else {
            let hy = grid.spacing(1);
            for j in 0..grid.n(1) {
                for i in 0..nx {
                    values.push(f(i as f64 * hx, j as f64 * hy));
                }
            }
        }
        Field { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn conform(&self, grid: &Grid) -> Result<()> {
        if self.values.len() != grid.len() {
            return Err(Error::mismatch(format!(
                "field has {} values, grid has {} points",
                self.values.len(),
                grid.len()
            )));
        }
        Ok(())
    }

    /// Pointwise combination of two fields.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }
}

/// Trapezoid quadrature of a field over the grid.
pub fn integrate(f: &Field, grid: &Grid) -> Result<f64> {
    f.conform(grid)?;
    let mut acc = 0.0;
    for (i, &v) in f.values().iter().enumerate() {
        acc += grid.weight(i) * v;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Neumann Laplacian and gradients
// ---------------------------------------------------------------------------

/// Applies the 1D mirror stencil along `axis`, accumulating into `out`.
fn add_axis_laplacian(f: &[f64], out: &mut [f64], grid: &Grid, axis: usize) {
    let n = grid.n(axis);
    let h2 = grid.spacing(axis) * grid.spacing(axis);
    let (stride, lines, line_stride) = axis_layout(grid, axis);
    for line in 0..lines {
        let base = line * line_stride;
        for i in 0..n {
            let c = f[base + i * stride];
            let lo = if i == 0 { f[base + stride] } else { f[base + (i - 1) * stride] };
            let hi = if i == n - 1 {
                f[base + (n - 2) * stride]
            } else {
                f[base + (i + 1) * stride]
            };
            out[base + i * stride] += (lo - 2.0 * c + hi) / h2;
        }
    }
}

/// Iteration layout for sweeping 1D lines along `axis`.
/// Returns (element stride, number of lines, stride between lines).
pub(crate) fn axis_layout(grid: &Grid, axis: usize) -> (usize, usize, usize) {
    if grid.dim() == 1 {
        (1, 1, 0)
    } else if axis == 0 {
        (1, grid.n(1), grid.n(0))
    } else {
        (grid.n(0), grid.n(0), 1)
    }
}

/// Second-order Neumann Laplacian (mirror ghost points enforce zero flux).
pub fn laplacian_neumann(f: &Field, grid: &Grid) -> Result<Field> {
    f.conform(grid)?;
    let mut out = vec![0.0; f.len()];
    for axis in 0..grid.dim() {
        add_axis_laplacian(f.values(), &mut out, grid, axis);
    }
    Ok(Field { values: out })
}

/// Nodal derivative along `axis`: centered in the interior, second-order
/// one-sided at the two boundary nodes.
pub fn gradient_axis(f: &Field, grid: &Grid, axis: usize) -> Result<Field> {
    f.conform(grid)?;
    let n = grid.n(axis);
    let h = grid.spacing(axis);
    let (stride, lines, line_stride) = axis_layout(grid, axis);
    let v = f.values();
    let mut out = vec![0.0; f.len()];
    for line in 0..lines {
        let base = line * line_stride;
        let at = |i: usize| v[base + i * stride];
        out[base] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        for i in 1..n - 1 {
            out[base + i * stride] = (at(i + 1) - at(i - 1)) / (2.0 * h);
        }
        out[base + (n - 1) * stride] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    }
    Ok(Field { values: out })
}

/// Which norm [`norm`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    H1,
    LInf,
}

/// Discrete L2 / H1 / Linf norm. L2 and the H1 gradient part use trapezoid
/// quadrature; H1 gradients are the nodal derivatives of [`gradient_axis`].
pub fn norm(f: &Field, grid: &Grid, which: Norm) -> Result<f64> {
    f.conform(grid)?;
    match which {
        Norm::LInf => Ok(f.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()))),
        Norm::L2 => {
            let sq = f.map(|v| v * v);
            Ok(integrate(&sq, grid)?.max(0.0).sqrt())
        }
        Norm::H1 => {
            let mut total = integrate(&f.map(|v| v * v), grid)?;
            for axis in 0..grid.dim() {
                let g = gradient_axis(f, grid, axis)?;
                total += integrate(&g.map(|v| v * v), grid)?;
            }
            Ok(total.max(0.0).sqrt())
        }
    }
}

// ---------------------------------------------------------------------------
// Cosine eigenbasis of the discrete stencil
// ---------------------------------------------------------------------------

/// Per-axis type-I cosine basis: `phi_k(j) = cos(pi k j / (n-1))`.
///
/// These are exact eigenvectors of the mirror stencil with eigenvalues
/// `-4 sin^2(pi k / (2(n-1))) / h^2`, orthogonal under trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
struct AxisBasis {
    n: usize,
    /// Forward transform, row k: weights `w_j phi_k(j) / <phi_k, phi_k>_w`.
    fwd: Vec<f64>,
    /// Inverse transform, row j: `phi_k(j)`.
    inv: Vec<f64>,
    /// Stencil eigenvalues, ascending in k (all <= 0).
    eig: Vec<f64>,
}

impl AxisBasis {
    fn new(n: usize, length: f64) -> Self {
        let h = length / (n - 1) as f64;
        let m = (n - 1) as f64;
        let mut fwd = vec![0.0; n * n];
        let mut inv = vec![0.0; n * n];
        let mut eig = vec![0.0; n];
        for k in 0..n {
            let norm_k = if k == 0 || k == n - 1 { length } else { length / 2.0 };
            let theta = std::f64::consts::PI * k as f64 / m;
            let s = (0.5 * theta).sin();
            eig[k] = -4.0 * s * s / (h * h);
            for j in 0..n {
                let phi = (theta * j as f64).cos();
                let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
                fwd[k * n + j] = w * phi / norm_k;
                inv[j * n + k] = phi;
            }
        }
        AxisBasis { n, fwd, inv, eig }
    }
}

/// Dense matrix application along one grid axis.
fn apply_axis(mat: &[f64], f: &[f64], out: &mut [f64], grid: &Grid, axis: usize) {
    let n = grid.n(axis);
    let (stride, lines, line_stride) = axis_layout(grid, axis);
    let mut buf = vec![0.0; n];
    for line in 0..lines {
        let base = line * line_stride;
        for k in 0..n {
            let row = &mat[k * n..(k + 1) * n];
            let mut acc = 0.0;
            for (j, &m) in row.iter().enumerate() {
                acc += m * f[base + j * stride];
            }
            buf[k] = acc;
        }
        for (k, &b) in buf.iter().enumerate() {
            out[base + k * stride] = b;
        }
    }
}

/// Cosine transform bound to a grid; diagonalizes the discrete Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineTransform {
    grid: Grid,
    axes: Vec<AxisBasis>,
}

impl CosineTransform {
    pub fn new(grid: &Grid) -> Self {
        let axes = (0..grid.dim())
            .map(|a| AxisBasis::new(grid.n(a), grid.length(a)))
            .collect();
        CosineTransform {
            grid: grid.clone(),
            axes,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Modal coefficients of `f`, flattened like the field itself
    /// (mode index k along axis 0 fastest).
    pub fn to_modal(&self, f: &Field) -> Result<Vec<f64>> {
        f.conform(&self.grid)?;
        let mut cur = f.values().to_vec();
        let mut out = vec![0.0; cur.len()];
        for axis in 0..self.grid.dim() {
            apply_axis(&self.axes[axis].fwd, &cur, &mut out, &self.grid, axis);
            std::mem::swap(&mut cur, &mut out);
        }
        Ok(cur)
    }

    pub fn from_modal(&self, coeffs: &[f64]) -> Result<Field> {
        if coeffs.len() != self.grid.len() {
            return Err(Error::mismatch("modal coefficient count does not match grid"));
        }
        let mut cur = coeffs.to_vec();
        let mut out = vec![0.0; cur.len()];
        for axis in 0..self.grid.dim() {
            apply_axis(&self.axes[axis].inv, &cur, &mut out, &self.grid, axis);
            std::mem::swap(&mut cur, &mut out);
        }
        Ok(Field { values: cur })
    }

    /// Stencil eigenvalue of the flattened mode `idx` (sum over axes).
    pub fn eigenvalue(&self, idx: usize) -> f64 {
        let mut rem = idx;
        let mut lam = 0.0;
        for (a, basis) in self.axes.iter().enumerate() {
            let k = rem % self.grid.n(a);
            rem /= self.grid.n(a);
            lam += basis.eig[k];
        }
        lam
    }

    /// Per-axis mode numbers of the flattened mode `idx`.
    pub fn mode_numbers(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        let mut ks = Vec::with_capacity(self.grid.dim());
        for a in 0..self.grid.dim() {
            ks.push(rem % self.grid.n(a));
            rem /= self.grid.n(a);
        }
        ks
    }
}

// ---------------------------------------------------------------------------
// Slow/fast spectral splitting
// ---------------------------------------------------------------------------

/// Slow or fast component selector for [`project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Slow,
    Fast,
}

/// Splitting of the cosine modes into slow (per-axis wavenumber <= k0) and
/// fast parts. The cutoff satisfies `k0^2 <= m_s_tilde / zeta < (k0+1)^2`.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    zeta: f64,
    m_s_tilde: f64,
    k0: usize,
    slow: Vec<bool>,
    all_slow: bool,
    transform: CosineTransform,
}

/// Builds the spectral split for `zeta` and `m_s_tilde` on `grid`.
pub fn build_split(zeta: f64, m_s_tilde: f64, grid: &Grid) -> Result<SpectralSplit> {
    if !(zeta > 0.0) {
        return Err(Error::invalid(format!("zeta must be positive, got {zeta}")));
    }
    if !(m_s_tilde > 0.0) {
        return Err(Error::invalid(format!("m_s_tilde must be positive, got {m_s_tilde}")));
    }
    let ratio = m_s_tilde / zeta;
    let mut k0 = ratio.sqrt().floor() as usize;
    // Guard against floating-point sqrt landing on the wrong side.
    while ((k0 + 1) * (k0 + 1)) as f64 <= ratio {
        k0 += 1;
    }
    while k0 > 0 && (k0 * k0) as f64 > ratio {
        k0 -= 1;
    }
    let transform = CosineTransform::new(grid);
    let slow: Vec<bool> = (0..grid.len())
        .map(|idx| transform.mode_numbers(idx).iter().all(|&k| k <= k0))
        .collect();
    let all_slow = slow.iter().all(|&s| s);
    Ok(SpectralSplit {
        zeta,
        m_s_tilde,
        k0,
        slow,
        all_slow,
        transform,
    })
}

impl SpectralSplit {
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn m_s_tilde(&self) -> f64 {
        self.m_s_tilde
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn grid(&self) -> &Grid {
        self.transform.grid()
    }

    /// Flattened indices of the slow cosine modes.
    pub fn slow_modes(&self) -> Vec<usize> {
        self.slow
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    /// True when every resolved mode is slow (projection is the identity).
    pub fn all_slow(&self) -> bool {
        self.all_slow
    }

    pub fn transform(&self) -> &CosineTransform {
        &self.transform
    }
}

/// Projects a field onto its slow or fast component.
pub fn project(f: &Field, split: &SpectralSplit, part: Part) -> Result<Field> {
    f.conform(split.grid())?;
    if split.all_slow {
        // All resolved modes are slow: P_s is literally the identity.
        return Ok(match part {
            Part::Slow => f.clone(),
            Part::Fast => Field {
                values: vec![0.0; f.len()],
            },
        });
    }
    let mut modal = split.transform.to_modal(f)?;
    for (i, c) in modal.iter_mut().enumerate() {
        let keep = match part {
            Part::Slow => split.slow[i],
            Part::Fast => !split.slow[i],
        };
        if !keep {
            *c = 0.0;
        }
    }
    split.transform.from_modal(&modal)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Writes a field as CSV: one row per grid line (a single row in 1D),
/// 17 significant digits per value.
pub fn write_field_csv<W: Write>(f: &Field, grid: &Grid, mut out: W) -> Result<()> {
    f.conform(grid)?;
    let nx = grid.n(0);
    let rows = if grid.dim() == 1 { 1 } else { grid.n(1) };
    for row in 0..rows {
        let line: Vec<String> = f.values()[row * nx..(row + 1) * nx]
            .iter()
            .map(|&v| fmt17(v))
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Binary field layout: `dim` then per-axis point counts as little-endian
/// u64, per-axis lengths as little-endian f64, then row-major f64 values.
pub fn write_field_binary<W: Write>(f: &Field, grid: &Grid, mut out: W) -> Result<()> {
    f.conform(grid)?;
    out.write_all(&(grid.dim() as u64).to_le_bytes())?;
    for a in 0..grid.dim() {
        out.write_all(&(grid.n(a) as u64).to_le_bytes())?;
    }
    for a in 0..grid.dim() {
        out.write_all(&grid.length(a).to_le_bytes())?;
    }
    for &v in f.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field in the [`write_field_binary`] layout, returning it with its
/// grid.
pub fn read_field_binary<R: Read>(mut input: R) -> Result<(Field, Grid)> {
    let mut u64buf = [0u8; 8];
    input.read_exact(&mut u64buf)?;
    let dim = u64::from_le_bytes(u64buf) as usize;
    if dim != 1 && dim != 2 {
        return Err(Error::invalid(format!("binary field has dim {dim}, expected 1 or 2")));
    }
    let mut n = Vec::with_capacity(dim);
    for _ in 0..dim {
        input.read_exact(&mut u64buf)?;
        n.push(u64::from_le_bytes(u64buf) as usize);
    }
    let mut lengths = Vec::with_capacity(dim);
    for _ in 0..dim {
        input.read_exact(&mut u64buf)?;
        lengths.push(f64::from_le_bytes(u64buf));
    }
    let grid = Grid::new(dim, &n, &lengths)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        input.read_exact(&mut u64buf)?;
        values.push(f64::from_le_bytes(u64buf));
    }
    let field = Field::new(values, &grid)?;
    Ok((field, grid))
}

/// Convenience wrappers over file paths.
pub fn save_field_binary(f: &Field, grid: &Grid, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_field_binary(f, grid, std::io::BufWriter::new(file))
}

pub fn load_field_binary(path: &Path) -> Result<(Field, Grid)> {
    let file = std::fs::File::open(path)?;
    read_field_binary(std::io::BufReader::new(file))
}
