//! Convex hulls in the plane and in space.
//!
//! Both the vertex-to-facet conversion (V-polytopes) and the halfspace
//! intersection (H-polytopes, by polar duality) go through these two routines.

use crate::consts::HULL_TOL;
use crate::error::{Error, Result};
use crate::linalg::{cross3, dot};
use std::collections::HashMap;

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices of the hull vertices in counter-clockwise order, starting from
/// the lexicographically smallest point. Points on hull edges are dropped.
pub fn hull_2d(points: &[[f64; 2]]) -> Vec<usize> {
    let n = points.len();
    if n < 3 {
        return (0..n).collect();
    }
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    let tol = HULL_TOL * scale * scale;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        points[i][0]
            .total_cmp(&points[j][0])
            .then(points[i][1].total_cmp(&points[j][1]))
    });
    let mut lower: Vec<usize> = Vec::with_capacity(n);
    for &i in &idx {
        while lower.len() >= 2
            && cross2(points[lower[lower.len() - 2]], points[lower[lower.len() - 1]], points[i]) <= tol
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::with_capacity(n);
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && cross2(points[upper[upper.len() - 2]], points[upper[upper.len() - 1]], points[i]) <= tol
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Triangulated hull in space with outward orientation, plus coplanar
/// triangles merged into polygonal facets.
#[derive(Debug, Clone)]
pub struct Hull3 {
    /// Outward-oriented triangles (counter-clockwise seen from outside).
    pub triangles: Vec<[usize; 3]>,
    /// Facets: unit outward normal, offset, and vertex indices in
    /// counter-clockwise order around the normal.
    pub facets: Vec<HullFacet>,
}

#[derive(Debug, Clone)]
pub struct HullFacet {
    pub normal: [f64; 3],
    pub offset: f64,
    pub vertices: Vec<usize>,
}

fn plane_of(p: &[[f64; 3]], t: [usize; 3]) -> ([f64; 3], f64) {
    let a = p[t[0]];
    let ab = [p[t[1]][0] - a[0], p[t[1]][1] - a[1], p[t[1]][2] - a[2]];
    let ac = [p[t[2]][0] - a[0], p[t[2]][1] - a[1], p[t[2]][2] - a[2]];
    let n = cross3(&ab, &ac);
    let len = dot(&n, &n).sqrt();
    let n = [n[0] / len, n[1] / len, n[2] / len];
    (n, dot(&n, &a))
}

/// Incremental convex hull of a 3D point set.
pub fn hull_3d(points: &[[f64; 3]]) -> Result<Hull3> {
    let n = points.len();
    if n < 4 {
        return Err(Error::degenerate("fewer than four points in 3D hull"));
    }
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    let eps = HULL_TOL * scale * 100.0;
    let d2 = |a: [f64; 3], b: [f64; 3]| {
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
    };
    // Initial simplex from extreme points.
    let i0 = (0..n)
        .min_by(|&i, &j| points[i][0].total_cmp(&points[j][0]))
        .unwrap();
    let i1 = (0..n)
        .max_by(|&i, &j| d2(points[i], points[i0]).total_cmp(&d2(points[j], points[i0])))
        .unwrap();
    let line_dist = |k: usize| {
        let a = points[i0];
        let ab = [points[i1][0] - a[0], points[i1][1] - a[1], points[i1][2] - a[2]];
        let ak = [points[k][0] - a[0], points[k][1] - a[1], points[k][2] - a[2]];
        let c = cross3(&ab, &ak);
        dot(&c, &c)
    };
    let i2 = (0..n)
        .max_by(|&i, &j| line_dist(i).total_cmp(&line_dist(j)))
        .unwrap();
    if line_dist(i2).sqrt() <= eps * scale {
        return Err(Error::degenerate("collinear point set in 3D hull"));
    }
    let (pn, po) = plane_of(points, [i0, i1, i2]);
    let i3 = (0..n)
        .max_by(|&i, &j| {
            (dot(&pn, &points[i]) - po)
                .abs()
                .total_cmp(&(dot(&pn, &points[j]) - po).abs())
        })
        .unwrap();
    if (dot(&pn, &points[i3]) - po).abs() <= eps {
        return Err(Error::degenerate("coplanar point set in 3D hull"));
    }
    let mut faces: Vec<[usize; 3]> = if dot(&pn, &points[i3]) - po > 0.0 {
        vec![[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    } else {
        vec![[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    };
    let mut planes: Vec<([f64; 3], f64)> = faces.iter().map(|&t| plane_of(points, t)).collect();
    let seed = [i0, i1, i2, i3];
    for k in 0..n {
        if seed.contains(&k) {
            continue;
        }
        let p = points[k];
        let visible: Vec<bool> = planes.iter().map(|(m, d)| dot(m, &p) - d > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for e in 0..3 {
                edge_owner.insert((f[e], f[(e + 1) % 3]), fi);
            }
        }
        let mut horizon = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if !visible[fi] {
                continue;
            }
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                match edge_owner.get(&(b, a)) {
                    Some(&g) if !visible[g] => horizon.push((a, b)),
                    _ => {}
                }
            }
        }
        let mut new_faces = Vec::with_capacity(faces.len());
        let mut new_planes = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if !visible[fi] {
                new_faces.push(*f);
                new_planes.push(planes[fi]);
            }
        }
        for (a, b) in horizon {
            let t = [a, b, k];
            new_faces.push(t);
            new_planes.push(plane_of(points, t));
        }
        faces = new_faces;
        planes = new_planes;
    }
    let facets = merge_coplanar(points, &faces, &planes);
    Ok(Hull3 { triangles: faces, facets })
}

fn merge_coplanar(points: &[[f64; 3]], faces: &[[usize; 3]], planes: &[([f64; 3], f64)]) -> Vec<HullFacet> {
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new(); // (representative face, members)
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    for (fi, (m, d)) in planes.iter().enumerate() {
        let found = groups.iter_mut().find(|(r, _)| {
            let (rm, rd) = planes[*r];
            dot(&rm, m) > 1.0 - 1e-10 && (rd - d).abs() <= 1e-9 * scale
        });
        match found {
            Some((_, members)) => members.push(fi),
            None => groups.push((fi, vec![fi])),
        }
    }
    groups
        .into_iter()
        .map(|(rep, members)| {
            let (normal, _) = planes[rep];
            let mut verts: Vec<usize> = members.iter().flat_map(|&f| faces[f]).collect();
            verts.sort_unstable();
            verts.dedup();
            let offset = verts.iter().map(|&v| dot(&normal, &points[v])).sum::<f64>() / verts.len() as f64;
            let ordered = order_around(points, &verts, normal);
            HullFacet { normal, offset, vertices: ordered }
        })
        .collect()
}

/// Order coplanar points counter-clockwise around `normal`.
pub fn order_around(points: &[[f64; 3]], idx: &[usize], normal: [f64; 3]) -> Vec<usize> {
    let k = idx.len() as f64;
    let c = idx.iter().fold([0.0; 3], |acc, &i| {
        [acc[0] + points[i][0] / k, acc[1] + points[i][1] / k, acc[2] + points[i][2] / k]
    });
    // In-plane basis.
    let helper = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross3(&normal, &helper);
    let l = dot(&e1, &e1).sqrt();
    let e1 = [e1[0] / l, e1[1] / l, e1[2] / l];
    let e2 = cross3(&normal, &e1);
    let mut with_angle: Vec<(f64, usize)> = idx
        .iter()
        .map(|&i| {
            let r = [points[i][0] - c[0], points[i][1] - c[1], points[i][2] - c[2]];
            (dot(&r, &e2).atan2(dot(&r, &e1)), i)
        })
        .collect();
    with_angle.sort_by(|a, b| a.0.total_cmp(&b.0));
    with_angle.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_interior_and_edge_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        let h = hull_2d(&pts);
        assert_eq!(h, vec![0, 1, 2, 3]);
    }

    #[test]
    fn cube_hull_has_six_square_facets() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push([
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            ]);
        }
        pts.push([0.0, 0.0, 0.0]);
        pts.push([0.3, -0.2, 0.9]);
        let h = hull_3d(&pts).unwrap();
        assert_eq!(h.facets.len(), 6);
        for f in &h.facets {
            assert_eq!(f.vertices.len(), 4);
            assert!((f.offset - 1.0).abs() < 1e-12);
        }
        // Euler: V - E + F = 2 on the triangulation.
        assert_eq!(h.triangles.len(), 12);
    }

    #[test]
    fn octahedron_orientation_is_outward() {
        let pts = [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let h = hull_3d(&pts).unwrap();
        assert_eq!(h.facets.len(), 8);
        for f in &h.facets {
            assert!(f.offset > 0.0);
            let expect = 1.0 / 3f64.sqrt();
            assert!((f.offset - expect).abs() < 1e-12);
        }
    }
}
