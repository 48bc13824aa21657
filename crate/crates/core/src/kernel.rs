//! The Gauss kernel `G(x,t) = (4 pi t)^(-N/2) exp(-|x|^2 / 4t)`, its spatial
//! derivatives, the shifted kernels `g_nu`, the heat semigroup on grid fields and
//! the norms used by the expansion machinery.

use log::warn;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::multi_index::MultiIndex;
use crate::real::Real;

/// Relative size of boundary values above which a field is reported as not
/// decaying inside the truncated domain.
pub const BOUNDARY_MASS_THRESHOLD: f64 = 1e-10;

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::domain("t", format!("kernel time must be > 0, got {t}")));
    }
    Ok(())
}

/// One-dimensional heat kernel.
#[inline]
fn gauss_1d<T: Real>(x: T, t: T) -> T {
    (T::lit(4.0) * T::PI() * t).sqrt().recip() * (-x * x / (T::lit(4.0) * t)).exp()
}

/// `G(x, t)` in `x.len()` dimensions.
pub fn gauss<T: Real>(x: &[T], t: T) -> Result<T> {
    check_time(t)?;
    Ok(x.iter().map(|&xi| gauss_1d(xi, t)).fold(T::one(), |a, b| a * b))
}

/// `d^n/dx^n` of the one-dimensional kernel.
///
/// With `s = x / (2 sqrt t)` this is `(-1)^n (2 sqrt t)^(-n) H_n(s) G(x,t)`, where the
/// physicists' Hermite polynomial `H_n` comes from the three-term recurrence
/// `H_{k+1} = 2 s H_k - 2 k H_{k-1}`.
pub fn hermite_factor<T: Real>(n: u32, x: T, t: T) -> T {
    let two_sqrt_t = T::lit(2.0) * t.sqrt();
    let s = x / two_sqrt_t;
    let two = T::lit(2.0);
    let (mut prev, mut curr) = (T::one(), two * s);
    let h_n = if n == 0 {
        T::one()
    } else {
        for k in 1..n {
            let next = two * s * curr - two * T::of_usize(k as usize) * prev;
            prev = curr;
            curr = next;
        }
        curr
    };
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    sign * h_n * two_sqrt_t.powi(-(n as i32)) * gauss_1d(x, t)
}

/// `d_x^nu G(x, t)` as a tensor product of one-dimensional Hermite factors.
pub fn gauss_deriv<T: Real>(nu: &MultiIndex, x: &[T], t: T) -> Result<T> {
    gauss_deriv_with(hermite_factor, nu, x, t)
}

/// [`gauss_deriv`] with the one-dimensional factor supplied by the caller.
pub fn gauss_deriv_with<T: Real>(factor: fn(u32, T, T) -> T, nu: &MultiIndex, x: &[T], t: T) -> Result<T> {
    check_time(t)?;
    if nu.dim() != x.len() {
        return Err(Error::Shape(format!(
            "multi-index of dim {} at a point of dim {}",
            nu.dim(),
            x.len()
        )));
    }
    Ok(nu
        .entries()
        .iter()
        .zip(x)
        .map(|(&n, &xi)| factor(n, xi, t))
        .fold(T::one(), |a, b| a * b))
}

/// `(-1)^|nu| / nu!`: the normalisation relating `g_nu` to `d^nu G`.
pub fn g_normalisation<T: Real>(nu: &MultiIndex) -> T {
    let sign = if nu.order().is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    };
    sign / T::lit(nu.factorial())
}

/// Shifted kernel `g_nu(x,t) = (-1)^|nu| / nu! * d^nu G(x, t + 1)`.
pub fn g_kernel<T: Real>(nu: &MultiIndex, x: &[T], t: T) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::domain("t", format!("must be >= 0, got {t}")));
    }
    Ok(g_normalisation::<T>(nu) * gauss_deriv(nu, x, t + T::one())?)
}

/// Samples `d^nu G(., t)` on a grid using per-axis factor tables.
pub fn sample_gauss_deriv<T: Real>(spec: GridSpec<T>, nu: &MultiIndex, t: T) -> Result<GridField<T>> {
    check_time(t)?;
    if nu.dim() != spec.dim {
        return Err(Error::Shape(format!(
            "multi-index of dim {} on a grid of dim {}",
            nu.dim(),
            spec.dim
        )));
    }
    let coords = spec.axis_coords();
    let tables: Vec<Vec<T>> = nu
        .entries()
        .iter()
        .map(|&n| coords.iter().map(|&x| hermite_factor(n, x, t)).collect())
        .collect();
    Ok(tensor_field(spec, &tables))
}

/// Samples `G(., t)` on a grid.
pub fn sample_gauss<T: Real>(spec: GridSpec<T>, t: T) -> Result<GridField<T>> {
    sample_gauss_deriv(spec, &MultiIndex::zero(spec.dim), t)
}

/// Samples `g_nu(., t)` on a grid.
pub fn sample_g_kernel<T: Real>(spec: GridSpec<T>, nu: &MultiIndex, t: T) -> Result<GridField<T>> {
    if !(t >= T::zero()) {
        return Err(Error::domain("t", format!("must be >= 0, got {t}")));
    }
    Ok(sample_gauss_deriv(spec, nu, t + T::one())?.scaled(g_normalisation(nu)))
}

fn tensor_field<T: Real>(spec: GridSpec<T>, tables: &[Vec<T>]) -> GridField<T> {
    let n = spec.points_per_axis;
    let values = match spec.dim {
        1 => tables[0].clone(),
        _ => {
            let mut v = Vec::with_capacity(spec.len());
            for i in 0..n {
                for j in 0..n {
                    v.push(tables[0][i] * tables[1][j]);
                }
            }
            v
        }
    };
    GridField { spec, values }
}

/// Whether `f` is negligible on the truncation boundary relative to its peak.
pub fn boundary_negligible<T: Real>(f: &GridField<T>, rel: T) -> bool {
    let peak = f.values.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    f.boundary_max_abs() <= rel * peak
}

/// Discrete convolution weights `h G(d h, t)` for `d = 0, 1, ...`, cut where they
/// fall below `1e-18` of the central weight.
fn convolution_weights<T: Real>(spec: &GridSpec<T>, t: T) -> Vec<T> {
    let h = spec.spacing();
    let n = spec.points_per_axis;
    let centre = h * gauss_1d(T::zero(), t);
    let cutoff = centre * T::lit(1e-18);
    let mut weights = Vec::new();
    for d in 0..n {
        let w = h * gauss_1d(T::of_usize(d) * h, t);
        if d > 0 && w < cutoff {
            break;
        }
        weights.push(w);
    }
    if t < h * h {
        // Under-resolved kernel: the midpoint sum no longer reproduces unit mass.
        let total = weights[0] + T::lit(2.0) * weights[1..].iter().copied().sum::<T>();
        for w in &mut weights {
            *w = *w / total;
        }
    }
    weights
}

fn convolve_line<T: Real>(input: &[T], weights: &[T], out: &mut [T]) {
    let n = input.len();
    let band = weights.len() - 1;
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(band);
        let hi = (i + band).min(n - 1);
        let mut acc = T::zero();
        for (j, &v) in input.iter().enumerate().take(hi + 1).skip(lo) {
            let d = i.abs_diff(j);
            acc = acc + weights[d] * v;
        }
        *o = acc;
    }
}

/// `e^(t Laplace) f` by midpoint quadrature of the convolution with `G(., t)`;
/// direct sums in 1-D, separable passes in 2-D.
pub fn heat_semigroup<T: Real>(f: &GridField<T>, t: T) -> Result<GridField<T>> {
    check_time(t)?;
    if !boundary_negligible(f, T::lit(BOUNDARY_MASS_THRESHOLD)) {
        warn!(
            "heat_semigroup: field is not negligible at the truncation boundary (max {:e})",
            f.boundary_max_abs().as_f64()
        );
    }
    let spec = f.spec;
    let weights = convolution_weights(&spec, t);
    let n = spec.points_per_axis;
    match spec.dim {
        1 => {
            let mut out = vec![T::zero(); n];
            convolve_line(&f.values, &weights, &mut out);
            Ok(GridField { spec, values: out })
        }
        2 => {
            let mut pass = vec![T::zero(); spec.len()];
            for (row_in, row_out) in f.values.chunks(n).zip(pass.chunks_mut(n)) {
                convolve_line(row_in, &weights, row_out);
            }
            let mut out = vec![T::zero(); spec.len()];
            let mut column = vec![T::zero(); n];
            let mut column_out = vec![T::zero(); n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = pass[i * n + j];
                }
                convolve_line(&column, &weights, &mut column_out);
                for i in 0..n {
                    out[i * n + j] = column_out[i];
                }
            }
            Ok(GridField { spec, values: out })
        }
        d => Err(Error::domain(
            "dim",
            format!("heat semigroup supports dim 1 or 2, got {d}"),
        )),
    }
}

/// Midpoint-rule `L^q` norm; `q = inf` is the grid maximum of `|f|`.
pub fn lq_norm<T: Real>(f: &GridField<T>, q: T) -> T {
    let abs = f.values.iter().map(|v| v.abs());
    if q.is_infinite() {
        return abs.fold(T::zero(), T::max);
    }
    let vol = f.spec.cell_volume();
    if q == T::one() {
        return abs.sum::<T>() * vol;
    }
    if q == T::lit(2.0) {
        return (f.values.iter().map(|&v| v * v).sum::<T>() * vol).sqrt();
    }
    (abs.map(|v| v.powf(q)).sum::<T>() * vol).powf(q.recip())
}

/// `|||f|||_K = int |f| (1 + |x|^K) dx` by the midpoint rule.
pub fn weighted_norm<T: Real>(f: &GridField<T>, k: T) -> T {
    let spec = f.spec;
    let mut point = vec![T::zero(); spec.dim];
    let mut acc = T::zero();
    for (idx, &v) in f.values.iter().enumerate() {
        spec.point(idx, &mut point);
        let r = point.iter().map(|&x| x * x).sum::<T>().sqrt();
        acc = acc + v.abs() * (T::one() + r.powf(k));
    }
    acc * spec.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn grid1(hw: f64, n: usize) -> GridSpec<f64> {
        GridSpec::new(1, hw, n).unwrap()
    }

    #[test]
    fn gauss_examples() {
        let t = 1.0 / (4.0 * std::f64::consts::PI);
        assert!((gauss(&[0.0], t).unwrap() - 1.0).abs() < 1e-15);
        let v = gauss(&[2.0], 1.0).unwrap();
        assert!((v - oracle::heat_kernel_reference(&[2.0], 1.0)).abs() < 1e-16);
        assert!((v - 0.103777).abs() < 1e-6);
        assert!(gauss(&[0.0], 0.0).is_err());
        let field = sample_gauss(grid1(40.0, 4096), 1.0).unwrap();
        assert!((field.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_deriv_examples() {
        let one = MultiIndex::new(vec![1]);
        assert_eq!(gauss_deriv(&one, &[0.0], 1.0).unwrap(), 0.0);
        let fd = oracle::richardson(
            |h| oracle::central_difference(&|x| oracle::heat_kernel_reference(&[x], 1.0), 1.0, 1, h),
            1e-2,
            3,
        );
        let v = gauss_deriv(&one, &[1.0], 1.0).unwrap();
        assert!((v - fd).abs() < 1e-12);
        assert!((v + 0.5 * gauss(&[1.0], 1.0).unwrap()).abs() < 1e-15);
        assert!((v + 0.109848).abs() < 1e-5);
        assert!(gauss_deriv(&one, &[1.0], -1.0).is_err());
    }

    #[test]
    fn second_derivative_matches_differences() {
        let two = MultiIndex::new(vec![2]);
        for &t in &[0.5f64, 1.0, 2.0] {
            for k in 0..13 {
                let x = -3.0 + 0.5 * k as f64;
                let fd = oracle::richardson(
                    |h| oracle::central_difference(&|y| oracle::heat_kernel_reference(&[y], t), x, 2, h),
                    0.05 * t.sqrt(),
                    3,
                );
                let v = gauss_deriv(&two, &[x], t).unwrap();
                let scale = fd.abs().max(1e-3 / t.powf(1.5));
                assert!((v - fd).abs() / scale < 1e-7, "x={x} t={t} v={v} fd={fd}");
            }
        }
    }

    #[test]
    fn g_kernel_examples() {
        let spec = grid1(40.0, 4096);
        let g0 = sample_g_kernel(spec, &MultiIndex::zero(1), 0.0).unwrap();
        let g = sample_gauss(spec, 1.0).unwrap();
        assert_eq!(g0.values, g.values);
        let v = g_kernel(&MultiIndex::new(vec![2]), &[0.0f64], 0.0).unwrap();
        assert!((v + 0.25 * gauss(&[0.0], 1.0).unwrap()).abs() < 1e-15);
        assert!((v + 0.070523).abs() < 1e-6);
        for t in [0.0, 1.0, 10.0] {
            let field = sample_g_kernel(spec, &MultiIndex::zero(1), t).unwrap();
            assert!((field.integral() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_maps_gaussians_to_gaussians() {
        let spec = grid1(40.0, 4096);
        let f = sample_gauss(spec, 1.0).unwrap();
        let out = heat_semigroup(&f, 1.0).unwrap();
        let expected = sample_gauss(spec, 2.0).unwrap();
        let err = out
            .sub(&expected)
            .unwrap()
            .values
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn semigroup_law_and_mass() {
        let spec = grid1(40.0, 2048);
        let bump = GridField::from_fn(spec, |x| {
            let r = x[0] - 0.3;
            if r.abs() < 2.0 {
                (1.0 - 1.0 / (1.0 - (r / 2.0).powi(2))).exp()
            } else {
                0.0
            }
        });
        let two_step = heat_semigroup(&heat_semigroup(&bump, 0.7).unwrap(), 1.3).unwrap();
        let one_step = heat_semigroup(&bump, 2.0).unwrap();
        let err = two_step
            .sub(&one_step)
            .unwrap()
            .values
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err < 1e-9, "err {err}");
        assert!((one_step.integral() - bump.integral()).abs() < 1e-10);
        for q in [1.0, 2.0, 3.0, f64::INFINITY] {
            assert!(lq_norm(&one_step, q) <= lq_norm(&bump, q) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn two_dimensional_semigroup() {
        let spec = GridSpec::new(2, 16.0f64, 128).unwrap();
        let f = sample_gauss(spec, 0.5).unwrap();
        let out = heat_semigroup(&f, 1.0).unwrap();
        let expected = sample_gauss(spec, 1.5).unwrap();
        let err = out
            .sub(&expected)
            .unwrap()
            .values
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err < 1e-10, "err {err}");
        assert!((out.integral() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn norms() {
        let spec = grid1(40.0, 4096);
        let g = sample_gauss(spec, 1.0).unwrap();
        assert!((lq_norm(&g, 1.0) - 1.0).abs() < 1e-12);
        let peak = (4.0 * std::f64::consts::PI).powf(-0.5);
        assert!((lq_norm(&g, f64::INFINITY) - peak).abs() < 1e-4);
        assert!((peak - 0.282095).abs() < 1e-6);
        for q in [1.0, 2.0, 2.5, f64::INFINITY] {
            let (a, b) = (lq_norm(&g.scaled(-3.0), q), 3.0 * lq_norm(&g, q));
            assert!((a - b).abs() <= 1e-14 * b);
        }
        assert!((weighted_norm(&g, 0.0) - 2.0 * lq_norm(&g, 1.0)).abs() < 1e-15);
        assert!((weighted_norm(&g, 2.0) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn weighted_norm_monotone_in_k_away_from_origin() {
        let spec = grid1(10.0, 200);
        let f = GridField::from_fn(spec, |x| if x[0].abs() >= 1.0 { (-x[0].abs()).exp() } else { 0.0 });
        let values: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 3.5]
            .iter()
            .map(|&k| weighted_norm(&f, k))
            .collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
    }
}
