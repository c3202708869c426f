use std::sync::Arc;

use rayon::prelude::*;

use super::field::FnSourceFallible;
use super::{HamiltonianField, IsotopyTrace};
use crate::error::{Error, Result};
use crate::geom::{lagrange_weights, CubicInterpolator, UniformGrid};

/// Weights of the derivative at `at` of the quadratic through `nodes`.
fn derivative_weights(nodes: &[f64], at: f64) -> Vec<f64> {
    match nodes.len() {
        2 => {
            let d = nodes[1] - nodes[0];
            vec![-1.0 / d, 1.0 / d]
        }
        3 => {
            let (a, b, c) = (nodes[0], nodes[1], nodes[2]);
            vec![
                ((at - b) + (at - c)) / ((a - b) * (a - c)),
                ((at - a) + (at - c)) / ((b - a) * (b - c)),
                ((at - a) + (at - b)) / ((c - a) * (c - b)),
            ]
        }
        _ => unreachable!("derivative stencils use two or three nodes"),
    }
}

fn stencil(len: usize, k: usize) -> std::ops::Range<usize> {
    if len == 2 {
        0..2
    } else if k == 0 {
        0..3
    } else if k == len - 1 {
        len - 3..len
    } else {
        k - 1..k + 2
    }
}

/// Velocity `V(t_k, x) = ∂_t φ^t((φ^{t_k})^{-1} x)` at every node of `grid`,
/// flattened node-major.
pub fn velocity_slice(trace: &IsotopyTrace, k: usize, grid: &UniformGrid) -> Result<Vec<f64>> {
    let times = trace.times();
    let range = stencil(times.len(), k);
    let weights = derivative_weights(&times[range.clone()], times[k]);
    let maps = &trace.maps()[range];
    let dim = grid.dim();
    let per_node: Vec<Result<Vec<f64>>> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let x = grid.node(flat);
            let y = trace.maps()[k].inverse_apply(&x)?;
            let mut v = vec![0.0; dim];
            for (m, w) in maps.iter().zip(&weights) {
                let z = m.apply(&y)?;
                for i in 0..dim {
                    v[i] += w * z[i];
                }
            }
            Ok(v)
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len() * dim);
    for v in per_node {
        out.extend(v?);
    }
    Ok(out)
}

/// Cumulative integral of `f` along one grid line, fourth order, with the
/// data extended by zero beyond both ends.
fn cumulative_line(f: &[f64], h: f64, out: &mut [f64]) {
    let m = f.len();
    let at = |i: isize| if i < 0 || i as usize >= m { 0.0 } else { f[i as usize] };
    out[0] = 0.0;
    for i in 0..m - 1 {
        let ii = i as isize;
        out[i + 1] = out[i] + h / 24.0 * (-at(ii - 1) + 13.0 * at(ii) + 13.0 * at(ii + 1) - at(ii + 2));
    }
}

/// Integral over one cell edge with the same fourth-order rule.
fn edge_integral(line: impl Fn(isize) -> f64, i: isize, h: f64) -> f64 {
    h / 24.0 * (-line(i - 1) + 13.0 * line(i) + 13.0 * line(i + 1) - line(i + 2))
}

/// A closed-form 1-form sampled on a grid, integrated to a potential.
#[derive(Debug, Clone)]
pub struct PotentialSlice {
    pub grid: UniformGrid,
    /// Potential at the nodes, zero on the lower face of axis 0.
    pub values: Vec<f64>,
    /// `slopes[a]` holds the `a`-th component of the 1-form at the nodes.
    pub slopes: Vec<Vec<f64>>,
    /// Largest loop integral of the 1-form around a grid plaquette.
    pub closedness_residual: f64,
}

impl PotentialSlice {
    /// Integrates the node-major 1-form `form` (components per node) along
    /// axis 0 from the lower face of the grid.
    pub fn from_one_form(grid: UniformGrid, form: &[f64]) -> Self {
        let dim = grid.dim();
        let slopes: Vec<Vec<f64>> = (0..dim)
            .map(|a| form.iter().skip(a).step_by(dim).copied().collect())
            .collect();
        let m = grid.nodes_per_axis();
        let stride = grid.stride(0);
        let h = grid.spacing(0);
        let mut values = vec![0.0; grid.len()];
        let mut line = vec![0.0; m];
        let mut acc = vec![0.0; m];
        for rest in 0..stride {
            for i in 0..m {
                line[i] = slopes[0][i * stride + rest];
            }
            cumulative_line(&line, h, &mut acc);
            for i in 0..m {
                values[i * stride + rest] = acc[i];
            }
        }
        let closedness_residual = max_loop_integral(&grid, &slopes);
        Self {
            grid,
            values,
            slopes,
            closedness_residual,
        }
    }
}

/// Largest absolute loop integral of a sampled 1-form around the plaquettes
/// of every coordinate plane.
pub fn max_loop_integral(grid: &UniformGrid, slopes: &[Vec<f64>]) -> f64 {
    let dim = grid.dim();
    let m = grid.nodes_per_axis();
    let mut worst = 0.0f64;
    let mut idx = vec![0usize; dim];
    for a in 0..dim {
        for b in a + 1..dim {
            let (sa, sb) = (grid.stride(a), grid.stride(b));
            let (ha, hb) = (grid.spacing(a), grid.spacing(b));
            for flat in 0..grid.len() {
                grid.multi_index(flat, &mut idx);
                if idx[a] + 1 >= m || idx[b] + 1 >= m {
                    continue;
                }
                let (ia, ib) = (idx[a] as isize, idx[b] as isize);
                let base_a = flat as isize - ia * sa as isize;
                let base_b = flat as isize - ib * sb as isize;
                let line_a = |offset: isize| {
                    move |i: isize| {
                        if i < 0 || i as usize >= m {
                            0.0
                        } else {
                            slopes[a][(base_a + offset + i * sa as isize) as usize]
                        }
                    }
                };
                let line_b = |offset: isize| {
                    move |i: isize| {
                        if i < 0 || i as usize >= m {
                            0.0
                        } else {
                            slopes[b][(base_b + offset + i * sb as isize) as usize]
                        }
                    }
                };
                let bottom = edge_integral(line_a(0), ia, ha);
                let top = edge_integral(line_a(sb as isize), ia, ha);
                let left = edge_integral(line_b(0), ib, hb);
                let right = edge_integral(line_b(sa as isize), ib, hb);
                worst = worst.max((bottom + right - top - left).abs());
            }
        }
    }
    worst
}

/// Converts a node-major velocity field into the differential of its
/// Hamiltonian, `dH = sign·ι_V ω = sign·(−V_p, V_q)`.
fn velocity_to_differential(velocity: &mut [f64], dim: usize, sign: f64) {
    let n = dim / 2;
    for v in velocity.chunks_mut(dim) {
        for i in 0..n {
            let (vq, vp) = (v[i], v[n + i]);
            v[i] = -sign * vp;
            v[n + i] = sign * vq;
        }
    }
}

/// Recovers the generator of `trace` at its first time sample only.
pub fn recover_initial_slice(trace: &IsotopyTrace, cells: usize) -> Result<PotentialSlice> {
    recover_slice(trace, 0, cells, 1.0)
}

/// [`recover_initial_slice`] under the convention `ι_{X_H} ω = sign·dH`.
pub fn recover_initial_slice_with_sign(trace: &IsotopyTrace, cells: usize, sign: f64) -> Result<PotentialSlice> {
    recover_slice(trace, 0, cells, sign)
}

fn recover_slice(trace: &IsotopyTrace, k: usize, cells: usize, sign: f64) -> Result<PotentialSlice> {
    if cells < 8 {
        return Err(Error::Resolution(format!("recovery grid needs at least 8 cells, got {cells}")));
    }
    let grid = UniformGrid::over_box(trace.support(), cells)?;
    let mut v = velocity_slice(trace, k, &grid)?;
    velocity_to_differential(&mut v, grid.dim(), sign);
    Ok(PotentialSlice::from_one_form(grid, &v))
}

/// Generator recovered from an isotopy, stored on a grid.
#[derive(Debug, Clone)]
pub struct RecoveredHamiltonian {
    pub field: HamiltonianField,
    pub slices: Arc<Vec<PotentialSlice>>,
    pub times: Vec<f64>,
    /// Largest plaquette residual over all time slices.
    pub closedness_residual: f64,
}

struct GridSource {
    slices: Arc<Vec<PotentialSlice>>,
    times: Vec<f64>,
    interp: CubicInterpolator,
}

impl GridSource {
    /// Slice indices and weights for time `t`: cubic Lagrange on uniform
    /// samples, lower order when there are fewer than four.
    fn time_stencil(&self, t: f64) -> Vec<(usize, f64)> {
        let len = self.times.len();
        let (t0, t1) = (self.times[0], self.times[len - 1]);
        let t = t.clamp(t0, t1);
        let s = (t - t0) / (t1 - t0) * (len - 1) as f64;
        if len >= 4 {
            let cell = (s.floor() as isize).clamp(0, len as isize - 2);
            let start = (cell - 1).clamp(0, len as isize - 4) as usize;
            let w = lagrange_weights(s - start as f64);
            (0..4).map(|j| (start + j, w[j])).collect()
        } else {
            let cell = (s.floor() as usize).min(len - 2);
            let u = s - cell as f64;
            vec![(cell, 1.0 - u), (cell + 1, u)]
        }
    }

    fn eval(&self, t: f64, x: &[f64], with_value: bool, grad: Option<&mut [f64]>) -> f64 {
        let dim = x.len();
        let mut acc = vec![0.0; dim + 1];
        let mut tmp = vec![0.0; dim + 1];
        for (k, w) in self.time_stencil(t) {
            let slice = &self.slices[k];
            let mut fields: Vec<&[f64]> = Vec::with_capacity(dim + 1);
            if with_value {
                fields.push(&slice.values);
            }
            if grad.is_some() {
                fields.extend(slice.slopes.iter().map(Vec::as_slice));
            }
            let out = &mut tmp[..fields.len()];
            self.interp.interpolate_many(x, &fields, out);
            for (a, o) in acc.iter_mut().zip(out.iter()) {
                *a += w * o;
            }
        }
        let offset = usize::from(with_value);
        if let Some(g) = grad {
            g.copy_from_slice(&acc[offset..offset + dim]);
        }
        if with_value {
            acc[0]
        } else {
            0.0
        }
    }
}

/// Recovers a generator of `trace` at every time sample. Fails if any slice's
/// closedness residual exceeds `closedness_tolerance`.
pub fn hamiltonian_from_isotopy(
    trace: &IsotopyTrace,
    cells: usize,
    closedness_tolerance: f64,
) -> Result<RecoveredHamiltonian> {
    hamiltonian_from_isotopy_with_sign(trace, cells, closedness_tolerance, 1.0)
}

/// [`hamiltonian_from_isotopy`] under the convention `ι_{X_H} ω = sign·dH`.
pub fn hamiltonian_from_isotopy_with_sign(
    trace: &IsotopyTrace,
    cells: usize,
    closedness_tolerance: f64,
    sign: f64,
) -> Result<RecoveredHamiltonian> {
    let slices: Vec<PotentialSlice> = (0..trace.times().len())
        .map(|k| recover_slice(trace, k, cells, sign))
        .collect::<Result<_>>()?;
    let residual = slices.iter().map(|s| s.closedness_residual).fold(0.0, f64::max);
    if residual > closedness_tolerance {
        return Err(Error::Closedness {
            residual,
            tolerance: closedness_tolerance,
        });
    }
    let slices = Arc::new(slices);
    let times = trace.times().to_vec();
    let n = trace.dim() / 2;
    let source = Arc::new(GridSource {
        slices: slices.clone(),
        times: times.clone(),
        interp: CubicInterpolator::new(slices[0].grid.clone()),
    });
    let (sv, sg) = (source.clone(), source);
    let src = FnSourceFallible {
        value: move |t: f64, x: &[f64]| Ok(sv.eval(t, x, true, None)),
        gradient: move |t: f64, x: &[f64], out: &mut [f64]| {
            sg.eval(t, x, false, Some(out));
            Ok(())
        },
    };
    let support = trace.support().clone();
    let field = HamiltonianField::from_source(Arc::new(src), n, support)?
        .with_time_interval(times[0], times[times.len() - 1])
        .with_label("recovered");
    Ok(RecoveredHamiltonian {
        field,
        slices,
        times,
        closedness_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{cartesian_to_polar, polar_to_cartesian, SupportBox};
    use crate::hamflow::SymplecticMapRep;

    #[test]
    fn derivative_weights_are_exact_on_quadratics() {
        let nodes = [0.0, 0.3, 0.5];
        let f = |t: f64| 2.0 - t + 3.0 * t * t;
        for at in nodes {
            let d: f64 = derivative_weights(&nodes, at).iter().zip(nodes).map(|(w, t)| w * f(t)).sum();
            assert!((d - (-1.0 + 6.0 * at)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_form_has_tiny_loops_and_correct_potential() {
        let grid = UniformGrid::new(vec![-1.2, -1.2], vec![1.2, 1.2], 48).unwrap();
        // H = (1 − |x|²)^6 on the disk
        let mut form = Vec::new();
        let mut exact = Vec::new();
        for flat in 0..grid.len() {
            let x = grid.node(flat);
            let s = 1.0 - x[0] * x[0] - x[1] * x[1];
            if s > 0.0 {
                form.extend([-12.0 * x[0] * s.powi(5), -12.0 * x[1] * s.powi(5)]);
                exact.push(s.powi(6));
            } else {
                form.extend([0.0, 0.0]);
                exact.push(0.0);
            }
        }
        let slice = PotentialSlice::from_one_form(grid, &form);
        let err = slice.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        assert!(slice.closedness_residual < 1e-5, "{}", slice.closedness_residual);
    }

    #[test]
    fn curl_is_detected() {
        let grid = UniformGrid::new(vec![-1.0, -1.0], vec![1.0, 1.0], 32).unwrap();
        let mut form = Vec::new();
        for flat in 0..grid.len() {
            let x = grid.node(flat);
            let b = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(3);
            form.extend([-x[1] * b, x[0] * b]);
        }
        let slice = PotentialSlice::from_one_form(grid, &form);
        assert!(slice.closedness_residual > 1e-4);
    }

    #[test]
    fn rotation_isotopy_recovers_radial_field() {
        // (r, θ + t ρ(r)) with ρ = (1−r²)³ is generated by h with h' = −r ρ.
        let rho = |r: f64| (1.0 - r * r).max(0.0).powi(3);
        let support = SupportBox::centered(2, 1.0);
        let trace = IsotopyTrace::sample(0.0, 0.5, 16, support.clone(), |t| {
            Ok(SymplecticMapRep::closed_form(
                2,
                Some(support.clone()),
                "rot",
                move |x| {
                    let (r, th) = cartesian_to_polar(x);
                    Ok(polar_to_cartesian(r, th + t * rho(r)).to_vec())
                },
                move |x| {
                    let (r, th) = cartesian_to_polar(x);
                    Ok(polar_to_cartesian(r, th - t * rho(r)).to_vec())
                },
            ))
        })
        .unwrap();
        let rec = hamiltonian_from_isotopy(&trace, 64, 1e-3).unwrap();
        // h(r) = (1 − r²)^4 / 8
        for i in 0..10 {
            let (r, th) = (0.09 * i as f64, 0.7 * i as f64);
            let x = polar_to_cartesian(r, th);
            let v = rec.field.value(0.3, &x).unwrap();
            assert!((v - (1.0 - r * r).powi(4) / 8.0).abs() < 1e-4, "r={r}: {v}");
        }
    }
}
