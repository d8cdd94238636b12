//! 2D points and polygon predicates.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Point2<T: Real = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance_squared(self, other: Self) -> T {
        (self - other).norm_squared()
    }

    #[inline]
    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    /// Rotates about the origin by `angle` radians (counter-clockwise for a
    /// y-up frame, clockwise on screen where y points down).
    #[inline]
    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic `(y, x)` ordering used for every deterministic sort and
    /// tie-break in the crate.
    #[inline]
    pub fn cmp_yx(&self, other: &Self) -> std::cmp::Ordering {
        self.y
            .partial_cmp(&other.y)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.x.partial_cmp(&other.x).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn cast<U: Real>(self) -> Point2<U> {
        Point2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> AddAssign for Point2<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

/// Arithmetic mean of a point list; `None` when empty.
pub fn centroid<T: Real>(points: &[Point2<T>]) -> Option<Point2<T>> {
    if points.is_empty() {
        return None;
    }
    let mut acc = Point2::zero();
    for &p in points {
        acc += p;
    }
    Some(acc.scale(T::one() / T::from_count(points.len())))
}

/// Shortest distance from `p` to the segment `a`–`b`.
pub fn distance_to_segment<T: Real>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == T::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
    p.distance(a + ab.scale(t))
}

/// Even-odd containment test against a closed polygon (last vertex connects
/// back to the first). Points exactly on an edge are not reliably classified;
/// use [`on_polygon_boundary`] when the boundary matters.
pub fn polygon_contains<T: Real>(poly: &[Point2<T>], p: Point2<T>) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Whether `p` lies on any edge of the closed polygon, within `eps`.
pub fn on_polygon_boundary<T: Real>(poly: &[Point2<T>], p: Point2<T>, eps: T) -> bool {
    let n = poly.len();
    if n == 0 {
        return false;
    }
    (0..n).any(|i| distance_to_segment(p, poly[i], poly[(i + 1) % n]) <= eps)
}

/// Minimum distance from `p` to the boundary of a closed polygon.
pub fn distance_to_polygon<T: Real>(poly: &[Point2<T>], p: Point2<T>) -> T {
    let n = poly.len();
    let mut best = T::infinity();
    for i in 0..n {
        best = best.min(distance_to_segment(p, poly[i], poly[(i + 1) % n]));
    }
    best
}

/// Shoelace area (positive for either winding).
pub fn polygon_area<T: Real>(poly: &[Point2<T>]) -> T {
    let n = poly.len();
    if n < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    (acc / T::lit(2.0)).abs()
}
