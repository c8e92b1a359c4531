use nalgebra::Vector2;

pub type P2 = Vector2<f64>;

fn cross(o: &P2, a: &P2, b: &P2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull (Andrew's monotone chain). Collinear
/// boundary points are dropped. Returns fewer than 3 points for
/// degenerate input.
pub fn convex_hull(points: &[P2]) -> Vec<P2> {
    let mut pts: Vec<P2> = points.iter().copied().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 1e-14 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 1e-14 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// True when the points span a proper polygon (3 or more non-collinear).
pub fn is_proper(hull: &[P2]) -> bool {
    hull.len() >= 3 && area(hull) > 1e-12
}

pub fn area(poly: &[P2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Point-in-convex-polygon for a CCW polygon, boundary inclusive within `tol`.
pub fn contains(poly: &[P2], p: &P2, tol: f64) -> bool {
    if poly.len() < 3 {
        return false;
    }
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let e = b - a;
        let len = e.norm();
        if len < 1e-15 {
            continue;
        }
        // signed distance to the left of edge a->b
        if (e.x * (p.y - a.y) - e.y * (p.x - a.x)) / len < -tol {
            return false;
        }
    }
    true
}

/// Sutherland-Hodgman clip of `subject` against a CCW convex `clip` polygon.
pub fn clip(subject: &[P2], clip: &[P2]) -> Vec<P2> {
    let mut output: Vec<P2> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let inside = |p: &P2| cross(&a, &b, p) >= -1e-12;
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = inside(&cur);
            let prev_in = inside(&prev);
            if cur_in {
                if !prev_in {
                    output.push(intersect(&prev, &cur, &a, &b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(intersect(&prev, &cur, &a, &b));
            }
        }
    }
    output
}

fn intersect(p: &P2, q: &P2, a: &P2, b: &P2) -> P2 {
    let r = q - p;
    let s = b - a;
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-18 {
        return *q;
    }
    let t = ((a.x - p.x) * s.y - (a.y - p.y) * s.x) / denom;
    p + r * t
}

/// Axis-aligned rectangle as a CCW polygon.
pub fn rect(min: P2, max: P2) -> Vec<P2> {
    vec![
        P2::new(min.x, min.y),
        P2::new(max.x, min.y),
        P2::new(max.x, max.y),
        P2::new(min.x, max.y),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn square_hull_drops_interior_and_collinear() {
        let pts = vec![
            P2::new(0.0, 0.0),
            P2::new(1.0, 0.0),
            P2::new(0.5, 0.0),
            P2::new(1.0, 1.0),
            P2::new(0.0, 1.0),
            P2::new(0.5, 0.5),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!((area(&h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_input_is_degenerate() {
        let pts: Vec<P2> = (0..5).map(|i| P2::new(i as f64, 2.0 * i as f64)).collect();
        assert!(!is_proper(&convex_hull(&pts)));
    }

    #[test]
    fn clip_overlapping_squares() {
        let a = rect(P2::new(0.0, 0.0), P2::new(2.0, 2.0));
        let b = rect(P2::new(1.0, 1.0), P2::new(3.0, 3.0));
        assert!((area(&clip(&a, &b)) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn hull_contains_all_inputs(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..60)) {
            let pts: Vec<P2> = pts.into_iter().map(|(x, y)| P2::new(x, y)).collect();
            let h = convex_hull(&pts);
            if is_proper(&h) {
                for p in &pts {
                    prop_assert!(contains(&h, p, 1e-9));
                }
            }
        }
    }
}
