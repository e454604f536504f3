//! Robustness region of a matching in salience space: per-agent polytope
//! factors over the simplex, membership, vertex enumeration, exact relative
//! volume in low dimension, and Monte Carlo volume (rejection sampling or
//! hit-and-run with a nested-ball estimator).
//!
//! All geometry happens in projected coordinates `x = (s_1, ..., s_{m-1})`
//! with `s_m = 1 - sum(x)`; relative volume is the fraction of the simplex,
//! so a factor with no constraints has volume exactly 1.

use crate::convex::{lp_solve, ConstraintSense, GeneralLP, LpStatus};
use crate::market::{blockers, BId, Instance, Matching, SalienceProfile};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VERTEX_DIM_CAP: usize = 6;
const EXACT_DIM_CAP: usize = 4;
const BURN_IN: usize = 1000;
const THINNING: usize = 10;

/// One agent's factor: the salience vectors under which `b` raises no
/// blocking pair with its assigned partner.
#[derive(Clone, Debug)]
pub struct RegionFactor {
    pub b: BId,
    /// Halfspace normals `u(partner) - u(a)`; the region is `s . g >= 0`.
    pub halfspaces: Vec<Vec<f64>>,
    /// Vertices in simplex coordinates, filled on demand.
    pub vertices: Option<Vec<Vec<f64>>>,
}

/// The full region: a product of independent per-`b` factors.
#[derive(Clone, Debug)]
pub struct Region {
    pub factors: Vec<RegionFactor>,
    pub m: usize,
}

/// Monte Carlo volume estimate with a 95% confidence half-width.
#[derive(Clone, Copy, Debug)]
pub struct McVolume {
    pub estimate: f64,
    pub ci_half: f64,
    /// Set when some factor had no interior point (empty or flat region).
    pub degenerate: bool,
}

/// Builds the region of `mu`: one factor per `b`, halfspaces only for agents
/// who statically prefer `b` to their current partner.
pub fn region(inst: &Instance, mu: &Matching) -> Result<Region> {
    if mu.n() != inst.n() {
        return Err(Error::InvalidInput("matching size mismatch".into()));
    }
    let mut factors = Vec::with_capacity(inst.n());
    for b in inst.b_ids() {
        let partner = mu.partner_of_b(b);
        let up = inst.attributes(partner).values();
        let halfspaces = blockers(inst, mu, b)
            .into_iter()
            .map(|a| {
                up.iter()
                    .zip(inst.attributes(a).values())
                    .map(|(x, y)| x - y)
                    .collect()
            })
            .collect();
        factors.push(RegionFactor {
            b,
            halfspaces,
            vertices: None,
        });
    }
    Ok(Region {
        factors,
        m: inst.m(),
    })
}

/// Closed-region membership: every factor must hold its row of `s` with
/// non-strict inequalities (boundary points are inside).
pub fn contains(region: &Region, s: &SalienceProfile) -> Result<bool> {
    for f in &region.factors {
        let row = s.row(f.b).weights();
        if row.len() != region.m {
            return Err(Error::DimensionMismatch(format!(
                "salience dim {} vs region dim {}",
                row.len(),
                region.m
            )));
        }
        for g in &f.halfspaces {
            let dot: f64 = row.iter().zip(g).map(|(x, y)| x * y).sum();
            if dot < -1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Linear constraints `a . x >= rhs` in projected coordinates: the factor's
/// halfspaces followed by the simplex facets.
fn projected_constraints(halfspaces: &[Vec<f64>], m: usize) -> Vec<(Vec<f64>, f64)> {
    let d = m - 1;
    let mut rows = Vec::new();
    for g in halfspaces {
        let coeffs: Vec<f64> = (0..d).map(|i| g[i] - g[d]).collect();
        rows.push((coeffs, -g[d]));
    }
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        rows.push((e, 0.0));
    }
    rows.push((vec![-1.0; d], -1.0));
    rows
}

fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Vertices of a factor in simplex coordinates: every `(m-1)`-subset of the
/// constraints made tight together with the normalization, feasible solutions
/// kept, duplicates merged at `1e-9`.
pub fn vertices(factor: &RegionFactor, m: usize) -> Result<Vec<Vec<f64>>> {
    if m > VERTEX_DIM_CAP {
        return Err(Error::GuardExceeded {
            op: "vertices".into(),
            size: m,
            cap: VERTEX_DIM_CAP,
        });
    }
    let d = m - 1;
    let rows = projected_constraints(&factor.halfspaces, m);
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for subset in combinations(rows.len(), d) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        let Some(x) = solve_square(&a, &b) else {
            continue;
        };
        let feasible = rows
            .iter()
            .all(|(c, rhs)| c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() >= rhs - 1e-9);
        if !feasible {
            continue;
        }
        let dup = verts.iter().any(|v| {
            v.iter()
                .zip(&x)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
                <= 1e-9
        });
        if !dup {
            verts.push(x);
        }
    }
    Ok(verts
        .into_iter()
        .map(|x| {
            let last = 1.0 - x.iter().sum::<f64>();
            let mut s = x;
            s.push(last.max(0.0));
            s
        })
        .collect())
}

/// Relative `(d)`-volume of a convex polytope given by projected vertices,
/// normalized so the full projected simplex has volume 1.
fn projected_relative_volume(verts: &[Vec<f64>], rows: &[(Vec<f64>, f64)], d: usize) -> f64 {
    if verts.len() < d + 1 {
        return 0.0;
    }
    let factorial = (1..=d).product::<usize>() as f64;
    match d {
        1 => {
            let lo = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            (hi - lo).max(0.0)
        }
        2 => {
            let cx = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
            let cy = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
            let mut pts: Vec<&Vec<f64>> = verts.iter().collect();
            pts.sort_by(|p, q| {
                let ap = (p[1] - cy).atan2(p[0] - cx);
                let aq = (q[1] - cy).atan2(q[0] - cx);
                ap.partial_cmp(&aq).unwrap()
            });
            let mut area = 0.0;
            for i in 0..pts.len() {
                let p = pts[i];
                let q = pts[(i + 1) % pts.len()];
                area += p[0] * q[1] - q[0] * p[1];
            }
            (area.abs() / 2.0) * factorial
        }
        3 => {
            // fan of tetrahedra: global centroid apex over each triangulated
            // facet (vertices tight on a common constraint)
            let centroid: Vec<f64> = (0..3)
                .map(|i| verts.iter().map(|v| v[i]).sum::<f64>() / verts.len() as f64)
                .collect();
            let mut vol = 0.0;
            for (c, rhs) in rows {
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let on: Vec<&Vec<f64>> = verts
                    .iter()
                    .filter(|v| {
                        (c.iter().zip(v.iter()).map(|(p, q)| p * q).sum::<f64>() - rhs).abs()
                            <= 1e-7 * norm
                    })
                    .collect();
                if on.len() < 3 {
                    continue;
                }
                // orthonormal basis of the facet plane
                let f0: Vec<f64> = (0..3)
                    .map(|i| on.iter().map(|v| v[i]).sum::<f64>() / on.len() as f64)
                    .collect();
                let mut e1 = [0.0; 3];
                let mut found = false;
                for v in &on {
                    let diff = [v[0] - f0[0], v[1] - f0[1], v[2] - f0[2]];
                    let len = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if len > 1e-9 {
                        e1 = [diff[0] / len, diff[1] / len, diff[2] / len];
                        found = true;
                        break;
                    }
                }
                if !found {
                    continue;
                }
                let nrm = [c[0] / norm, c[1] / norm, c[2] / norm];
                let e2 = [
                    nrm[1] * e1[2] - nrm[2] * e1[1],
                    nrm[2] * e1[0] - nrm[0] * e1[2],
                    nrm[0] * e1[1] - nrm[1] * e1[0],
                ];
                let mut flat: Vec<(f64, f64, &Vec<f64>)> = on
                    .iter()
                    .map(|v| {
                        let diff = [v[0] - f0[0], v[1] - f0[1], v[2] - f0[2]];
                        let x: f64 = diff.iter().zip(&e1).map(|(p, q)| p * q).sum();
                        let y: f64 = diff.iter().zip(&e2).map(|(p, q)| p * q).sum();
                        (x, y, *v)
                    })
                    .collect();
                flat.sort_by(|p, q| p.1.atan2(p.0).partial_cmp(&q.1.atan2(q.0)).unwrap());
                for i in 1..flat.len() - 1 {
                    let (p0, p1, p2) = (flat[0].2, flat[i].2, flat[i + 1].2);
                    let u = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
                    let w = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
                    let t = [
                        p0[0] - centroid[0],
                        p0[1] - centroid[1],
                        p0[2] - centroid[2],
                    ];
                    let cross = [
                        u[1] * w[2] - u[2] * w[1],
                        u[2] * w[0] - u[0] * w[2],
                        u[0] * w[1] - u[1] * w[0],
                    ];
                    vol += (cross.iter().zip(&t).map(|(p, q)| p * q).sum::<f64>() / 6.0).abs();
                }
            }
            vol * factorial
        }
        _ => unreachable!("exact volume capped at m <= {EXACT_DIM_CAP}"),
    }
}

fn factor_volume_exact(factor: &RegionFactor, m: usize) -> Result<f64> {
    if factor.halfspaces.is_empty() {
        return Ok(1.0);
    }
    let verts = vertices(factor, m)?;
    let d = m - 1;
    let projected: Vec<Vec<f64>> = verts.iter().map(|v| v[..d].to_vec()).collect();
    let rows = projected_constraints(&factor.halfspaces, m);
    Ok(projected_relative_volume(&projected, &rows, d).clamp(0.0, 1.0))
}

/// Exact relative volume of the region: the product of per-factor relative
/// volumes. Requires `m <= 4`.
pub fn volume_exact(region: &Region) -> Result<f64> {
    if region.m > EXACT_DIM_CAP {
        return Err(Error::GuardExceeded {
            op: "volume_exact".into(),
            size: region.m,
            cap: EXACT_DIM_CAP,
        });
    }
    let mut product = 1.0;
    for f in &region.factors {
        product *= factor_volume_exact(f, region.m)?;
    }
    Ok(product)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sample_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m)
        .map(|_| -(rng.gen_range(f64::MIN_POSITIVE..1.0)).ln())
        .collect();
    let t: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= t);
    v
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * std::f64::consts::TAU / d as f64,
    }
}

/// Largest inscribed ball center (Chebyshev point) of the projected factor.
fn chebyshev_point(rows: &[(Vec<f64>, f64)], d: usize) -> Result<Option<(Vec<f64>, f64)>> {
    let mut objective = vec![0.0; d + 1];
    objective[d] = -1.0; // maximize the radius
    let lp_rows = rows
        .iter()
        .map(|(c, rhs)| {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut coeffs = c.clone();
            coeffs.push(-norm);
            (coeffs, ConstraintSense::Ge, *rhs)
        })
        .collect();
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); d];
    bounds.push((0.0, f64::INFINITY));
    let lp = GeneralLP {
        objective,
        rows: lp_rows,
        bounds,
    };
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal || sol.witness[d] <= 1e-9 {
        return Ok(None);
    }
    Ok(Some((sol.witness[..d].to_vec(), sol.witness[d])))
}

/// One hit-and-run step inside `{a.x >= rhs} ∩ B(center, radius)`.
fn hit_and_run_step(
    x: &mut [f64],
    rows: &[(Vec<f64>, f64)],
    center: &[f64],
    radius: f64,
    rng: &mut ChaCha8Rng,
) {
    let d = x.len();
    let mut dir: Vec<f64> = (0..d).map(|_| gauss(rng)).collect();
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len < 1e-12 {
        return;
    }
    dir.iter_mut().for_each(|v| *v /= len);
    // chord within the ball
    let rel: Vec<f64> = x.iter().zip(center).map(|(p, q)| p - q).collect();
    let b_lin: f64 = rel.iter().zip(&dir).map(|(p, q)| p * q).sum();
    let c_quad: f64 = rel.iter().map(|v| v * v).sum::<f64>() - radius * radius;
    let disc = b_lin * b_lin - c_quad;
    if disc <= 0.0 {
        return;
    }
    let mut t_lo = -b_lin - disc.sqrt();
    let mut t_hi = -b_lin + disc.sqrt();
    for (c, rhs) in rows {
        let slope: f64 = c.iter().zip(&dir).map(|(p, q)| p * q).sum();
        let level: f64 = c.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() - rhs;
        if slope.abs() < 1e-14 {
            continue;
        }
        let t = -level / slope;
        if slope > 0.0 {
            t_lo = t_lo.max(t);
        } else {
            t_hi = t_hi.min(t);
        }
    }
    if t_hi <= t_lo {
        return;
    }
    let t = rng.gen_range(t_lo..t_hi);
    for (xi, di) in x.iter_mut().zip(&dir) {
        *xi += t * di;
    }
}

/// Nested-ball estimate of one factor's relative volume: hit-and-run over a
/// shrinking chain of balls from one covering the simplex down to the
/// inscribed Chebyshev ball.
fn factor_volume_hit_and_run(
    rows: &[(Vec<f64>, f64)],
    d: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(f64, f64)>> {
    let Some((x0, r0)) = chebyshev_point(rows, d)? else {
        return Ok(None);
    };
    // outer radius: cover every simplex vertex (origin and unit vectors)
    let mut outer = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    for i in 0..d {
        let dist = x0
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let e = if i == j { 1.0 } else { 0.0 };
                (v - e) * (v - e)
            })
            .sum::<f64>()
            .sqrt();
        outer = outer.max(dist);
    }
    let phases = ((d as f64) * (outer / r0).log2()).ceil().max(1.0) as usize;
    let per_phase = (samples / phases).max(100);
    let mut log_vol = unit_ball_volume(d).ln() + (d as f64) * r0.ln();
    let mut var_log = 0.0;
    let mut x = x0.clone();
    for i in 1..=phases {
        let r_cur = r0 * (outer / r0).powf(i as f64 / phases as f64);
        let r_prev = r0 * (outer / r0).powf((i - 1) as f64 / phases as f64);
        for _ in 0..BURN_IN {
            hit_and_run_step(&mut x, rows, &x0, r_cur, rng);
        }
        let mut hits = 0usize;
        for _ in 0..per_phase {
            for _ in 0..THINNING {
                hit_and_run_step(&mut x, rows, &x0, r_cur, rng);
            }
            let dist: f64 = x
                .iter()
                .zip(&x0)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            if dist <= r_prev {
                hits += 1;
            }
        }
        let f = (hits as f64 / per_phase as f64).max(0.5 / per_phase as f64);
        log_vol -= f.ln();
        var_log += (1.0 - f) / (f * per_phase as f64);
    }
    let simplex_vol = 1.0 / (1..=d).product::<usize>() as f64;
    let est = (log_vol.exp() / simplex_vol).clamp(0.0, 1.0);
    let se = est * var_log.sqrt();
    Ok(Some((est, se)))
}

/// Monte Carlo relative volume of the region: rejection sampling for factors
/// with at most two halfspaces, hit-and-run otherwise; factor estimates are
/// multiplied with the confidence interval propagated by the delta method.
pub fn volume_mc(region: &Region, samples: usize, seed: u64) -> Result<McVolume> {
    if samples < 1000 {
        return Err(Error::InvalidInput(format!(
            "samples must be >= 1000, got {samples}"
        )));
    }
    let m = region.m;
    let d = m - 1;
    let mut estimate = 1.0;
    let mut rel_var = 0.0; // sum of squared relative standard errors
    let mut degenerate = false;
    for (idx, f) in region.factors.iter().enumerate() {
        if f.halfspaces.is_empty() {
            continue; // exactly 1, no sampling needed
        }
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (est, se) = if f.halfspaces.len() <= 2 {
            let mut hits = 0usize;
            for _ in 0..samples {
                let s = sample_simplex(&mut rng, m);
                let inside = f
                    .halfspaces
                    .iter()
                    .all(|g| g.iter().zip(&s).map(|(p, q)| p * q).sum::<f64>() >= 0.0);
                if inside {
                    hits += 1;
                }
            }
            let p = hits as f64 / samples as f64;
            (p, (p * (1.0 - p) / samples as f64).sqrt())
        } else {
            let rows = projected_constraints(&f.halfspaces, m);
            match factor_volume_hit_and_run(&rows, d, samples, &mut rng)? {
                Some(pair) => pair,
                None => {
                    degenerate = true;
                    (0.0, 0.0)
                }
            }
        };
        if est <= 0.0 {
            return Ok(McVolume {
                estimate: 0.0,
                ci_half: 0.0,
                degenerate: true,
            });
        }
        estimate *= est;
        rel_var += (se / est) * (se / est);
    }
    Ok(McVolume {
        estimate,
        ci_half: 1.96 * estimate * rel_var.sqrt(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{fixtures, SalienceVector};

    #[test]
    fn region_structure_examples() {
        let two = fixtures::two_sm();
        let mu_a = fixtures::matching(&[0, 1]);
        let r = region(&two, &mu_a).unwrap();
        assert!(r.factors.iter().all(|f| f.halfspaces.is_empty()));

        let mu_b = fixtures::matching(&[1, 0]);
        let r = region(&two, &mu_b).unwrap();
        assert_eq!(r.factors[0].halfspaces, vec![vec![-1.0, 1.0]]); // s2 >= s1
        assert_eq!(r.factors[1].halfspaces, vec![vec![1.0, -1.0]]); // s1 >= s2

        let app = fixtures::appendix_a();
        let r = region(&app, &fixtures::matching(&[0, 1])).unwrap();
        assert_eq!(r.factors[0].halfspaces.len(), 1);
        assert!((r.factors[0].halfspaces[0][0] - 0.4).abs() < 1e-12);
        assert!(r.factors[1].halfspaces.is_empty());
    }

    #[test]
    fn contains_matches_stability() {
        let app = fixtures::appendix_a();
        let mu = fixtures::matching(&[0, 1]);
        let r = region(&app, &mu).unwrap();
        assert!(contains(&r, app.salience()).unwrap());

        let mut s = app.salience().clone();
        s = s.with_row(BId(0), SalienceVector::new(vec![0.45, 0.55]).unwrap());
        assert!(!contains(&r, &s).unwrap());

        // boundary point: closed region keeps it inside
        let s = app
            .salience()
            .clone()
            .with_row(BId(0), SalienceVector::new(vec![0.5, 0.5]).unwrap());
        assert!(contains(&r, &s).unwrap());
    }

    #[test]
    fn vertices_two_sm() {
        let two = fixtures::two_sm();
        let r = region(&two, &fixtures::matching(&[1, 0])).unwrap();
        let mut v = vertices(&r.factors[0], 2).unwrap();
        v.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(v.len(), 2);
        assert!((v[0][0]).abs() < 1e-9 && (v[0][1] - 1.0).abs() < 1e-9);
        assert!((v[1][0] - 0.5).abs() < 1e-9 && (v[1][1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn vertices_full_simplex_m3() {
        let f = RegionFactor {
            b: BId(0),
            halfspaces: vec![],
            vertices: None,
        };
        let v = vertices(&f, 3).unwrap();
        assert_eq!(v.len(), 3);
        for unit in 0..3 {
            assert!(v
                .iter()
                .any(|p| (p[unit] - 1.0).abs() < 1e-9 && p.iter().sum::<f64>() < 1.0 + 1e-9));
        }
    }

    #[test]
    fn vertices_empty_factor() {
        let f = RegionFactor {
            b: BId(0),
            halfspaces: vec![vec![1.0, 1.0]], // s1 + s2 >= 0 always holds...
            vertices: None,
        };
        assert!(!vertices(&f, 2).unwrap().is_empty());
        let f = RegionFactor {
            b: BId(0),
            halfspaces: vec![vec![-1.0, -1.0]], // -s1 - s2 >= 0 impossible
            vertices: None,
        };
        assert!(vertices(&f, 2).unwrap().is_empty());
    }

    #[test]
    fn exact_volumes_fixed_markets() {
        let app = fixtures::appendix_a();
        let r = region(&app, &fixtures::matching(&[0, 1])).unwrap();
        assert!((volume_exact(&r).unwrap() - 0.5).abs() < 1e-9);

        let two = fixtures::two_sm();
        let r = region(&two, &fixtures::matching(&[1, 0])).unwrap();
        assert!((volume_exact(&r).unwrap() - 0.25).abs() < 1e-9);
        let r = region(&two, &fixtures::matching(&[0, 1])).unwrap();
        assert!((volume_exact(&r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_volume_m3_halfplane() {
        // s1 >= s2 cuts the 2-simplex in half
        let r = Region {
            factors: vec![RegionFactor {
                b: BId(0),
                halfspaces: vec![vec![1.0, -1.0, 0.0]],
                vertices: None,
            }],
            m: 3,
        };
        assert!((volume_exact(&r).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exact_volume_m4_halfspace() {
        let r = Region {
            factors: vec![RegionFactor {
                b: BId(0),
                halfspaces: vec![vec![1.0, -1.0, 0.0, 0.0]],
                vertices: None,
            }],
            m: 4,
        };
        assert!((volume_exact(&r).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mc_appendix_a() {
        let app = fixtures::appendix_a();
        let r = region(&app, &fixtures::matching(&[0, 1])).unwrap();
        let mc = volume_mc(&r, 100_000, 42).unwrap();
        assert!(!mc.degenerate);
        assert!((mc.estimate - 0.5).abs() <= 0.01, "{mc:?}");
    }

    #[test]
    fn mc_no_constraints_short_circuits() {
        let two = fixtures::two_sm();
        let r = region(&two, &fixtures::matching(&[0, 1])).unwrap();
        let mc = volume_mc(&r, 1000, 7).unwrap();
        assert_eq!(mc.estimate, 1.0);
        assert_eq!(mc.ci_half, 0.0);
    }

    #[test]
    fn mc_hit_and_run_matches_exact_m3() {
        // three halfspaces force the hit-and-run path
        let r = Region {
            factors: vec![RegionFactor {
                b: BId(0),
                halfspaces: vec![
                    vec![1.0, -1.0, 0.0],
                    vec![1.0, 0.0, -1.0],
                    vec![1.0, -0.5, -0.5],
                ],
                vertices: None,
            }],
            m: 3,
        };
        let exact = volume_exact(&r).unwrap();
        let mc = volume_mc(&r, 200_000, 42).unwrap();
        assert!(!mc.degenerate);
        assert!(
            (mc.estimate - exact).abs() <= 0.02 * exact.max(0.02),
            "mc {mc:?} vs exact {exact}"
        );
    }

    #[test]
    fn mc_empty_factor_degenerate() {
        let r = Region {
            factors: vec![RegionFactor {
                b: BId(0),
                halfspaces: vec![vec![-1.0, -1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
                vertices: None,
            }],
            m: 2,
        };
        let mc = volume_mc(&r, 1000, 3).unwrap();
        assert_eq!(mc.estimate, 0.0);
        assert!(mc.degenerate);
    }

    #[test]
    fn halfspace_monotonicity() {
        let base = Region {
            factors: vec![RegionFactor {
                b: BId(0),
                halfspaces: vec![vec![1.0, -1.0, 0.0]],
                vertices: None,
            }],
            m: 3,
        };
        let cut = Region {
            factors: vec![RegionFactor {
                b: BId(0),
                halfspaces: vec![vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]],
                vertices: None,
            }],
            m: 3,
        };
        assert!(volume_exact(&cut).unwrap() <= volume_exact(&base).unwrap() + 1e-12);
    }

    #[test]
    fn dimension_guards() {
        let f = RegionFactor {
            b: BId(0),
            halfspaces: vec![vec![1.0; 7]],
            vertices: None,
        };
        assert!(matches!(
            vertices(&f, 7),
            Err(Error::GuardExceeded { .. })
        ));
        let r = Region {
            factors: vec![RegionFactor {
                b: BId(0),
                halfspaces: vec![vec![1.0; 5]],
                vertices: None,
            }],
            m: 5,
        };
        assert!(matches!(volume_exact(&r), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn factorized_membership_random_profiles() {
        let two = fixtures::two_sm();
        let r = region(&two, &fixtures::matching(&[1, 0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let rows: Vec<SalienceVector> = (0..2)
                .map(|_| SalienceVector::new(sample_simplex(&mut rng, 2)).unwrap())
                .collect();
            let mut s = two.salience().clone();
            s = s.with_row(BId(0), rows[0].clone());
            s = s.with_row(BId(1), rows[1].clone());
            let joint = contains(&r, &s).unwrap();
            let per_factor = r.factors.iter().all(|f| {
                f.halfspaces.iter().all(|g| {
                    g.iter()
                        .zip(s.row(f.b).weights())
                        .map(|(p, q)| p * q)
                        .sum::<f64>()
                        >= -1e-12
                })
            });
            assert_eq!(joint, per_factor);
            // off the boundary membership agrees with stability
            let mut min_dot = f64::INFINITY;
            for f in &r.factors {
                for g in &f.halfspaces {
                    let dot: f64 = g
                        .iter()
                        .zip(s.row(f.b).weights())
                        .map(|(p, q)| p * q)
                        .sum();
                    min_dot = min_dot.min(dot.abs());
                }
            }
            if min_dot > 1e-9 {
                let stable =
                    crate::market::is_stable(&two, &s, &fixtures::matching(&[1, 0])).unwrap();
                assert_eq!(joint, stable);
            }
        }
    }
}
