use crate::Vec3;

/// Closest point of triangle `(a, b, c)` to `p`, returned as barycentric
/// weights. Classifies `p` against the vertex, edge and face Voronoi
/// regions, so obtuse triangles are handled exactly.
pub fn closest_point_barycentric(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let sum = va + vb + vc;
    if !(sum > 0.0) {
        return degenerate_fallback(p, a, b, c);
    }
    let v = vb / sum;
    let w = vc / sum;
    [1.0 - v - w, v, w]
}

/// Zero-area triangle: nearest point over the three edges.
fn degenerate_fallback(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let seg = |x: &Vec3, y: &Vec3| {
        let d = y - x;
        let len2 = d.norm_squared();
        let t = if len2 > 0.0 { ((p - x).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (t, (x + d * t - p).norm_squared())
    };
    let (t0, e0) = seg(a, b);
    let (t1, e1) = seg(b, c);
    let (t2, e2) = seg(c, a);
    if e0 <= e1 && e0 <= e2 {
        [1.0 - t0, t0, 0.0]
    } else if e1 <= e2 {
        [0.0, 1.0 - t1, t1]
    } else {
        [t2, 0.0, 1.0 - t2]
    }
}

pub(crate) fn combine(w: &[f64; 3], a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    a * w[0] + b * w[1] + c * w[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_edge_and_vertex_regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::y());
        let w = closest_point_barycentric(&Vec3::new(0.2, 0.3, 1.0), &a, &b, &c);
        assert!((combine(&w, &a, &b, &c) - Vec3::new(0.2, 0.3, 0.0)).norm() < 1e-15);
        assert!(w.iter().all(|&x| x > 0.0 && x < 1.0));
        assert_eq!(closest_point_barycentric(&Vec3::new(-1.0, -1.0, 0.5), &a, &b, &c), [1.0, 0.0, 0.0]);
        let w = closest_point_barycentric(&Vec3::new(0.5, -2.0, 0.0), &a, &b, &c);
        assert!((combine(&w, &a, &b, &c) - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        let w = closest_point_barycentric(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((combine(&w, &a, &b, &c) - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn obtuse_triangle() {
        let (a, b, c) = (Vec3::zeros(), Vec3::new(4.0, 0.0, 0.0), Vec3::new(2.0, 0.2, 0.0));
        let p = Vec3::new(2.0, 1.0, 0.3);
        let w = closest_point_barycentric(&p, &a, &b, &c);
        assert!((combine(&w, &a, &b, &c) - c).norm() < 1e-12);
    }
}
