//! Simple planar polygons and the quadratic coefficients of their inner
//! neighborhood volume.

use super::GeometryError;

/// A point in the plane, in abstract length units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

/// A simple polygon with counterclockwise orientation.
///
/// Construction validates: at least three vertices, consecutive vertices
/// distinct, positive signed area, and no self-intersection.
#[derive(Debug, Clone)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        for p in &vertices {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(GeometryError::NonFiniteVertex);
            }
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if a.sub(b).norm() == 0.0 {
                return Err(GeometryError::DegenerateEdge(i));
            }
        }
        let signed = signed_area(&vertices);
        if signed <= 0.0 {
            return Err(GeometryError::NotCounterclockwise(signed));
        }
        // Collinear triples are caught by the turn-angle computation if they
        // occur at a vertex (degenerate straight spike has zero cross AND
        // opposite direction); a zero-area polygon is caught above. A vertex
        // where the boundary turns back on itself is rejected here.
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            let u = cur.sub(prev);
            let w = next.sub(cur);
            if u.cross(w) == 0.0 && u.dot(w) < 0.0 {
                return Err(GeometryError::SpikeVertex(i));
            }
        }
        if let Some((i, j)) = find_self_intersection(&vertices) {
            return Err(GeometryError::SelfIntersection(i, j));
        }
        Ok(Polygon { vertices })
    }

    /// Build from a vertex loop of either orientation, reversing clockwise
    /// input. Used for similitude images, where reflections flip orientation.
    pub fn from_loop(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Polygon::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                b.sub(a).norm()
            })
            .sum()
    }

    /// Shoelace area; positive by the orientation invariant.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Even-odd point-in-polygon test on the closed region.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x = a.x + t * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Minimum Euclidean distance from `p` to the polygon boundary,
    /// brute-force over all edge segments.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            best = best.min(point_segment_distance(p, a, b));
        }
        best
    }

    /// Interior angle at vertex `i`, in (0, 2π). Angles above π are reflex;
    /// reflex detection comes from the sign of the cross product of the
    /// incoming and outgoing edge vectors.
    pub fn interior_angle(&self, i: usize) -> f64 {
        let n = self.vertices.len();
        let prev = self.vertices[(i + n - 1) % n];
        let cur = self.vertices[i];
        let next = self.vertices[(i + 1) % n];
        let u = cur.sub(prev);
        let w = next.sub(cur);
        let turn = u.cross(w).atan2(u.dot(w));
        std::f64::consts::PI - turn
    }
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let ap = p.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return ap.norm();
    }
    let t = (ap.dot(ab) / len2).clamp(0.0, 1.0);
    let proj = Point::new(a.x + t * ab.x, a.y + t * ab.y);
    p.sub(proj).norm()
}

/// Pairwise segment check. Adjacent edges may share their common endpoint;
/// any other contact makes the polygon non-simple.
fn find_self_intersection(vertices: &[Point]) -> Option<(usize, usize)> {
    let n = vertices.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
            let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
            if adjacent {
                continue;
            }
            if segments_touch(a1, a2, b1, b2) {
                return Some((i, j));
            }
        }
    }
    None
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    orient(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

fn segments_touch(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(b1, b2, a1)
        || on_segment(b1, b2, a2)
        || on_segment(a1, a2, b1)
        || on_segment(a1, a2, b2)
}

/// Corner defect of an interior angle: the coefficient a vertex contributes
/// to the quadratic term of the inner neighborhood area.
///
/// Convex corners (α < π) contribute (1+cos α)/sin α, evaluated stably as
/// cot(α/2); reflex corners contribute (π−α)/2, which is negative. Both
/// branches vanish at α = π.
pub fn corner_defect(alpha: f64) -> Result<f64, GeometryError> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 2.0 * std::f64::consts::PI {
        return Err(GeometryError::AngleOutOfRange(alpha));
    }
    if alpha < std::f64::consts::PI {
        Ok((0.5 * alpha).tan().recip())
    } else {
        Ok(0.5 * (std::f64::consts::PI - alpha))
    }
}

/// Quadratic coefficients (κ₁, κ₀) of the small-ε inner neighborhood area
/// V_P(ε) = κ₁·ε + κ₀·ε²: κ₁ is the perimeter and κ₀ is minus the sum of
/// corner defects.
pub fn steiner_coefficients(polygon: &Polygon) -> Result<(f64, f64), GeometryError> {
    let n = polygon.len();
    let mut perimeter = 0.0;
    let mut defect_sum = 0.0;
    for i in 0..n {
        let (a, b) = polygon.edge(i);
        let len = b.sub(a).norm();
        if len == 0.0 {
            return Err(GeometryError::DegenerateEdge(i));
        }
        perimeter += len;
        defect_sum += corner_defect(polygon.interior_angle(i))?;
    }
    Ok((perimeter, -defect_sum))
}

/// Positive shoelace area.
pub fn polygon_area(polygon: &Polygon) -> f64 {
    polygon.area()
}
