//! Periodic grid geometry and the physical/spectral representation of fields.
//!
//! A field on the box `[-lx, lx) x [-ly, ly)` is stored as `nx * ny` samples
//! `u(x_a, y_b)` with `x_a = -lx + a dx`, `y_b = -ly + b dy`, row-major with the
//! x index fastest. Its spectrum holds the Fourier-series coefficients `c[j, m]`
//! such that
//!
//! ```text
//! u(x, y) = sum_{j, m} c[j, m] exp(i (xi_j x + eta_m y)),   xi_j = pi j / lx,  eta_m = pi m / ly
//! ```
//!
//! with `j` in `-nx/2 ..= nx/2 - 1` (likewise `m`). Coefficients are laid out
//! in FFT order along each axis: storage slot `s` holds mode `s` for
//! `s < n/2` and mode `s - n` otherwise, so the Nyquist mode `-n/2` sits in
//! slot `n/2`. Always go through [`GridSpec::mode_x`], [`GridSpec::xi`] and
//! friends instead of assuming this layout.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

/// Builds a grid; equivalent to [`GridSpec::new`].
pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<GridSpec> {
    GridSpec::new(nx, ny, lx, ly)
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be even and at least 4"
                )));
            }
            if n > u32::MAX as usize {
                return Err(Error::InvalidGrid(format!("{name} = {n} is too large")));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {l} must be positive and finite"
                )));
            }
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    /// Number of samples (and of Fourier modes).
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }

    /// Box area `4 lx ly`.
    pub fn area(&self) -> f64 {
        4.0 * self.lx * self.ly
    }

    pub fn x(&self, a: usize) -> f64 {
        -self.lx + a as f64 * self.dx()
    }

    pub fn y(&self, b: usize) -> f64 {
        -self.ly + b as f64 * self.dy()
    }

    /// Integer mode number stored in x-slot `s`.
    pub fn mode_x(&self, s: usize) -> i64 {
        slot_to_mode(s, self.nx)
    }

    /// Integer mode number stored in y-slot `s`.
    pub fn mode_y(&self, s: usize) -> i64 {
        slot_to_mode(s, self.ny)
    }

    /// Storage slot of x-mode `j`, if it lies on the lattice.
    pub fn slot_x(&self, j: i64) -> Option<usize> {
        mode_to_slot(j, self.nx)
    }

    /// Storage slot of y-mode `m`, if it lies on the lattice.
    pub fn slot_y(&self, m: i64) -> Option<usize> {
        mode_to_slot(m, self.ny)
    }

    /// Flat index of mode `(j, m)`.
    pub fn mode_index(&self, j: i64, m: i64) -> Option<usize> {
        Some(self.slot_y(m)? * self.nx + self.slot_x(j)?)
    }

    pub fn xi(&self, s: usize) -> f64 {
        PI * self.mode_x(s) as f64 / self.lx
    }

    pub fn eta(&self, s: usize) -> f64 {
        PI * self.mode_y(s) as f64 / self.ly
    }

    /// x-frequencies in storage order.
    pub fn frequencies_x(&self) -> Vec<f64> {
        (0..self.nx).map(|s| self.xi(s)).collect()
    }

    /// y-frequencies in storage order.
    pub fn frequencies_y(&self) -> Vec<f64> {
        (0..self.ny).map(|s| self.eta(s)).collect()
    }

    /// `(xi, eta)` for every flat coefficient index.
    pub fn frequencies(&self) -> Vec<(f64, f64)> {
        let xs = self.frequencies_x();
        let ys = self.frequencies_y();
        let mut out = Vec::with_capacity(self.len());
        for eta in &ys {
            for xi in &xs {
                out.push((*xi, *eta));
            }
        }
        out
    }

    /// Same box, `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.nx * factor, self.ny * factor, self.lx, self.ly)
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

fn slot_to_mode(s: usize, n: usize) -> i64 {
    if s < n / 2 {
        s as i64
    } else {
        s as i64 - n as i64
    }
}

fn mode_to_slot(j: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if j < -half || j >= half {
        None
    } else if j >= 0 {
        Some(j as usize)
    } else {
        Some((j + n as i64) as usize)
    }
}

fn check_finite(data: &[Complex64], what: &str) -> Result<()> {
    if data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Physical-space samples of a complex field.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values, "field samples")?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> Complex64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for b in 0..grid.ny() {
            let y = grid.y(b);
            for a in 0..grid.nx() {
                values.push(f(grid.x(a), y));
            }
        }
        Self::new(grid, values)
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, a: usize, b: usize) -> Complex64 {
        self.values[b * self.grid.nx + a]
    }

    pub fn is_finite(&self) -> bool {
        check_finite(&self.values, "").is_ok()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|z| alpha * z).collect())
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|z| z.conj()).collect())
    }

    pub fn to_spectrum(&self) -> Result<Spectrum> {
        to_spectrum(self)
    }
}

/// Fourier-series coefficients of a field.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "spectrum has {} coefficients, grid needs {}",
                coeffs.len(),
                grid.len()
            )));
        }
        check_finite(&coeffs, "spectral coefficients")?;
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// A spectrum with a single nonzero mode.
    pub fn single_mode(grid: GridSpec, j: i64, m: i64, amplitude: Complex64) -> Result<Self> {
        let idx = grid
            .mode_index(j, m)
            .ok_or_else(|| Error::InvalidParameter(format!("mode ({j}, {m}) not on grid")))?;
        let mut s = Self::zeros(grid);
        s.coeffs[idx] = amplitude;
        Self::new(grid, s.coeffs)
    }

    pub(crate) fn from_raw(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode `(j, m)`, zero when off-lattice.
    pub fn mode(&self, j: i64, m: i64) -> Complex64 {
        self.grid
            .mode_index(j, m)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn is_finite(&self) -> bool {
        check_finite(&self.coeffs, "").is_ok()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self::from_raw(self.grid, self.coeffs.iter().map(|z| alpha * z).collect())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: Complex64, other: &Spectrum) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn to_field(&self) -> Result<Field> {
        to_field(self)
    }

    /// Spectrum of the pointwise conjugate field.
    pub fn conj(&self) -> Self {
        let g = self.grid;
        let mut out = vec![Complex64::default(); g.len()];
        for sy in 0..g.ny() {
            let my = g.slot_y(-g.mode_y(sy)).unwrap_or(sy);
            for sx in 0..g.nx() {
                let mx = g.slot_x(-g.mode_x(sx)).unwrap_or(sx);
                out[sy * g.nx() + sx] = self.coeffs[my * g.nx() + mx].conj();
            }
        }
        Self::from_raw(g, out)
    }

    /// Embeds into a finer grid on the same box (zero padding).
    pub fn padded(&self, target: &GridSpec) -> Result<Self> {
        let g = self.grid;
        if target.lx() != g.lx()
            || target.ly() != g.ly()
            || target.nx() < g.nx()
            || target.ny() < g.ny()
        {
            return Err(Error::GridMismatch(format!(
                "cannot pad {g:?} into {target:?}"
            )));
        }
        let mut out = vec![Complex64::default(); target.len()];
        for sy in 0..g.ny() {
            let ty = target.slot_y(g.mode_y(sy)).expect("mode fits finer grid");
            for sx in 0..g.nx() {
                let tx = target.slot_x(g.mode_x(sx)).expect("mode fits finer grid");
                out[ty * target.nx() + tx] = self.coeffs[sy * g.nx() + sx];
            }
        }
        Ok(Self::from_raw(*target, out))
    }

    /// Keeps only the modes representable on the coarser grid `target`.
    pub fn truncated(&self, target: &GridSpec) -> Result<Self> {
        let g = self.grid;
        if target.lx() != g.lx()
            || target.ly() != g.ly()
            || target.nx() > g.nx()
            || target.ny() > g.ny()
        {
            return Err(Error::GridMismatch(format!(
                "cannot truncate {g:?} to {target:?}"
            )));
        }
        let mut out = vec![Complex64::default(); target.len()];
        for ty in 0..target.ny() {
            let sy = g.slot_y(target.mode_y(ty)).expect("mode fits finer grid");
            for tx in 0..target.nx() {
                let sx = g.slot_x(target.mode_x(tx)).expect("mode fits finer grid");
                out[ty * target.nx() + tx] = self.coeffs[sy * g.nx() + sx];
            }
        }
        Ok(Self::from_raw(*target, out))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place 2-D FFT of row-major data, x fastest.
fn fft2(data: &mut [Complex64], nx: usize, ny: usize, direction: FftDirection) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let row = planner.plan_fft(nx, direction);
        let col = planner.plan_fft(ny, direction);
        row.process(data);

        let mut column = vec![Complex64::default(); ny];
        for a in 0..nx {
            for b in 0..ny {
                column[b] = data[b * nx + a];
            }
            col.process(&mut column);
            for b in 0..ny {
                data[b * nx + a] = column[b];
            }
        }
    });
}

/// `(-1)^(j + m)` for the mode stored at flat index `(sx, sy)`; accounts for the
/// grid starting at `-l` rather than `0`.
fn shift_sign(g: &GridSpec, sx: usize, sy: usize) -> f64 {
    if (g.mode_x(sx) + g.mode_y(sy)).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Forward transform, normalized by `1 / (nx ny)`.
pub fn to_spectrum(f: &Field) -> Result<Spectrum> {
    check_finite(&f.values, "field passed to to_spectrum")?;
    let g = f.grid;
    let mut data = f.values.clone();
    fft2(&mut data, g.nx(), g.ny(), FftDirection::Forward);
    let norm = 1.0 / g.len() as f64;
    for sy in 0..g.ny() {
        for sx in 0..g.nx() {
            data[sy * g.nx() + sx] *= norm * shift_sign(&g, sx, sy);
        }
    }
    Ok(Spectrum::from_raw(g, data))
}

/// Inverse transform: exact synthesis of the Fourier series at the grid points.
pub fn to_field(s: &Spectrum) -> Result<Field> {
    check_finite(&s.coeffs, "spectrum passed to to_field")?;
    let g = s.grid;
    let mut data = s.coeffs.clone();
    for sy in 0..g.ny() {
        for sx in 0..g.nx() {
            data[sy * g.nx() + sx] *= shift_sign(&g, sx, sy);
        }
    }
    fft2(&mut data, g.nx(), g.ny(), FftDirection::Inverse);
    Ok(Field::from_raw(g, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_4x4_pi() {
        let g = make_grid(4, 4, PI, PI).unwrap();
        assert!((g.dx() - PI / 2.0).abs() < 1e-15);
        assert!((g.dy() - PI / 2.0).abs() < 1e-15);
        assert_eq!(g.frequencies_x(), vec![0.0, 1.0, -2.0, -1.0]);
        let mut sorted = g.frequencies_x();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![-2.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn grid_8x4_spacing() {
        let g = make_grid(8, 4, 2.0 * PI, PI).unwrap();
        assert!((g.dx() - PI / 2.0).abs() < 1e-15);
        assert!((g.dy() - PI / 2.0).abs() < 1e-15);
        let mut xs = g.frequencies_x();
        xs.sort_by(f64::total_cmp);
        assert!(xs.windows(2).all(|w| (w[1] - w[0] - 0.5).abs() < 1e-15));
        let mut ys = g.frequencies_y();
        ys.sort_by(f64::total_cmp);
        assert!(ys.windows(2).all(|w| (w[1] - w[0] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(
            make_grid(4, 5, 1.0, 1.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(make_grid(2, 4, 1.0, 1.0).is_err());
        assert!(make_grid(4, 4, 0.0, 1.0).is_err());
        assert!(make_grid(4, 4, 1.0, -1.0).is_err());
        assert!(make_grid(4, 4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn mode_slots_round_trip() {
        let g = make_grid(8, 6, 1.0, 1.0).unwrap();
        for s in 0..8 {
            assert_eq!(g.slot_x(g.mode_x(s)), Some(s));
        }
        assert_eq!(g.mode_x(4), -4);
        assert_eq!(g.slot_x(4), None);
        assert_eq!(g.slot_y(-3), Some(3));
    }

    #[test]
    fn constant_is_zero_mode() {
        let g = make_grid(8, 8, 3.0, 2.0).unwrap();
        let f = Field::from_fn(g, |_, _| c(1.0, 0.0)).unwrap();
        let s = to_spectrum(&f).unwrap();
        for (i, z) in s.coeffs().iter().enumerate() {
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((z - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_is_single_mode() {
        let g = make_grid(8, 8, 3.0, 2.0).unwrap();
        let xi1 = PI / 3.0;
        let f = Field::from_fn(g, |x, _| Complex64::from_polar(1.0, xi1 * x)).unwrap();
        let s = to_spectrum(&f).unwrap();
        let idx = g.mode_index(1, 0).unwrap();
        for (i, z) in s.coeffs().iter().enumerate() {
            let want = if i == idx { 1.0 } else { 0.0 };
            assert!((z - c(want, 0.0)).norm() < 1e-14, "{i}: {z}");
        }
    }

    #[test]
    fn synthesis_of_zero_mode_and_y_wave() {
        let g = make_grid(6, 8, 1.5, 2.5).unwrap();
        let s = Spectrum::single_mode(g, 0, 0, c(2.0, 0.0)).unwrap();
        let f = to_field(&s).unwrap();
        assert!(f.values().iter().all(|z| (z - c(2.0, 0.0)).norm() < 1e-14));

        let eta1 = PI / 2.5;
        let s = Spectrum::single_mode(g, 0, 1, c(1.0, 0.0)).unwrap();
        let f = to_field(&s).unwrap();
        for b in 0..g.ny() {
            for a in 0..g.nx() {
                let want = Complex64::from_polar(1.0, eta1 * g.y(b));
                assert!((f.at(a, b) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn nyquist_mode_synthesis() {
        let g = make_grid(4, 4, 1.0, 1.0).unwrap();
        let s = Spectrum::single_mode(g, -2, 0, c(1.0, 0.0)).unwrap();
        let f = to_field(&s).unwrap();
        for a in 0..4 {
            let want = Complex64::from_polar(1.0, -2.0 * PI * g.x(a));
            assert!((f.at(a, 0) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let g = make_grid(4, 4, 1.0, 1.0).unwrap();
        let mut v = vec![c(0.0, 0.0); 16];
        v[3] = c(f64::NAN, 0.0);
        assert!(matches!(Field::new(g, v.clone()), Err(Error::NonFinite(_))));
        assert!(Spectrum::new(g, v).is_err());
        assert!(Field::new(g, vec![c(0.0, 0.0); 15]).is_err());
    }

    #[test]
    fn conj_spectrum_matches_field_conj() {
        let g = make_grid(8, 6, 1.0, 2.0).unwrap();
        let f = Field::from_fn(g, |x, y| c((x * 1.3).sin() + y, (x - y * y).cos())).unwrap();
        let a = to_spectrum(&f.conj()).unwrap();
        let b = to_spectrum(&f).unwrap().conj();
        for (p, q) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((p - q).norm() < 1e-13);
        }
    }

    #[test]
    fn pad_then_truncate_is_identity() {
        let g = make_grid(8, 4, 1.0, 2.0).unwrap();
        let fine = g.refined(3).unwrap();
        let coeffs = (0..g.len()).map(|i| c(i as f64, -(i as f64))).collect();
        let s = Spectrum::new(g, coeffs).unwrap();
        let back = s.padded(&fine).unwrap().truncated(&g).unwrap();
        assert_eq!(back, s);
        let f_coarse = to_field(&s).unwrap();
        let f_fine = to_field(&s.padded(&fine).unwrap()).unwrap();
        // Every coarse sample is also a fine sample.
        for b in 0..g.ny() {
            for a in 0..g.nx() {
                assert!((f_coarse.at(a, b) - f_fine.at(3 * a, 3 * b)).norm() < 1e-10);
            }
        }
    }
}
