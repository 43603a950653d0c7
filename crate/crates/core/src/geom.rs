//! Minimal 2D geometry shared by both environments.

use crate::scalar::{real, Real};
use std::ops::{Add, Mul, Neg, Sub};

/// A 2D point or displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 {
            x: T::zero(),
            y: T::zero(),
        }
    }

    pub fn norm(self) -> T {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn dist(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn scale(self, k: T) -> Self {
        Vec2 {
            x: self.x * k,
            y: self.y * k,
        }
    }

    /// Unit vector in the same direction; zero stays zero.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n == T::zero() {
            self
        } else {
            self.scale(T::one() / n)
        }
    }

    pub fn clamp_to(self, rect: &Rect<T>) -> Self {
        Vec2 {
            x: clamp(self.x, rect.min.x, rect.max.x),
            y: clamp(self.y, rect.min.y, rect.max.y),
        }
    }

    /// Nearest integer grid cell.
    pub fn to_cell(self) -> Cell {
        Cell {
            x: self.x.round().to_i64().expect("coordinate out of i64 range"),
            y: self.y.round().to_i64().expect("coordinate out of i64 range"),
        }
    }

    /// True when both coordinates sit on integers (within `tol`).
    pub fn is_integral(self, tol: T) -> bool {
        (self.x - self.x.round()).abs() <= tol && (self.y - self.y.round()).abs() <= tol
    }
}

fn clamp<T: Real>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

/// Integer grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub fn new(x: i64, y: i64) -> Self {
        Cell { x, y }
    }

    pub fn to_vec2<T: Real>(self) -> Vec2<T> {
        Vec2::new(real(self.x as f64), real(self.y as f64))
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Cell {
            x: self.x + dx,
            y: self.y + dy,
        }
    }
}

/// Axis-aligned workspace rectangle (inclusive bounds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub min: Vec2<T>,
    pub max: Vec2<T>,
}

impl<T: Real> Rect<T> {
    pub fn new(min: Vec2<T>, max: Vec2<T>) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }

    pub fn is_proper(&self) -> bool {
        self.min.x <= self.max.x && self.min.y <= self.max.y
    }

    pub fn contains_cell(&self, c: Cell) -> bool {
        self.contains(c.to_vec2())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_and_dist() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(3.0, 4.0);
        assert_eq!(b.norm(), 5.0);
        assert_eq!(a.dist(b), 5.0);
    }

    #[test]
    fn clamp_into_rect() {
        let r = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 5.0));
        let p = Vec2::new(-1.0, 7.0).clamp_to(&r);
        assert_eq!(p, Vec2::new(0.0, 5.0));
    }

    #[test]
    fn cell_round_trip() {
        let c = Cell::new(3, -2);
        let v: Vec2<f64> = c.to_vec2();
        assert_eq!(v.to_cell(), c);
        assert!(v.is_integral(1e-9));
    }
}
