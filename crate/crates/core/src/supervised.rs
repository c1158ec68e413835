//! Supervised quality metrics computed from a predicted and a ground-truth box.
//!
//! Boxes use the `(left, top, width, height)` convention with continuous
//! geometry: area is `w · h` and overlaps are interval intersections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite fields and zero or negative extents.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox(format!(
                "non-finite field in ({x}, {y}, {w}, {h})"
            )));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "width and height must be positive, got w={w}, h={h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    fn intersection_area(&self, other: &Self) -> f64 {
        let iw = (self.right().min(other.right()) - self.x.max(other.x)).max(0.0);
        let ih = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0.0);
        iw * ih
    }

    /// Area of the smallest axis-aligned rectangle enclosing both boxes.
    fn hull_area(&self, other: &Self) -> f64 {
        let hw = self.right().max(other.right()) - self.x.min(other.x);
        let hh = self.bottom().max(other.bottom()) - self.y.min(other.y);
        hw * hh
    }
}

struct Overlap {
    intersection: f64,
    union: f64,
    hull: f64,
}

fn overlap(a: &BoundingBox, b: &BoundingBox) -> Overlap {
    let intersection = a.intersection_area(b);
    Overlap {
        intersection,
        union: a.area() + b.area() - intersection,
        hull: a.hull_area(b),
    }
}

/// Intersection over union, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let o = overlap(a, b);
    o.intersection / o.union
}

/// Generalized IoU: IoU minus the fraction of the enclosing hull not covered
/// by the union. Lies in `(−1, 1]`.
pub fn giou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let o = overlap(a, b);
    o.intersection / o.union - (o.hull - o.union) / o.hull
}

/// GIoU rescaled to `[0, 1]`.
pub fn ngiou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    (giou(a, b) + 1.0) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    /// Unit-cell counting over an integer grid; exact for integer boxes.
    fn raster(a: &BoundingBox, b: &BoundingBox) -> (f64, f64) {
        let covers = |r: &BoundingBox, cx: i64, cy: i64| {
            (cx as f64) >= r.x()
                && ((cx + 1) as f64) <= r.right()
                && (cy as f64) >= r.y()
                && ((cy + 1) as f64) <= r.bottom()
        };
        let x0 = a.x().min(b.x()) as i64;
        let y0 = a.y().min(b.y()) as i64;
        let x1 = a.right().max(b.right()) as i64;
        let y1 = a.bottom().max(b.bottom()) as i64;
        let (mut inter, mut uni, mut hull) = (0u64, 0u64, 0u64);
        for cy in y0..y1 {
            for cx in x0..x1 {
                hull += 1;
                let (ia, ib) = (covers(a, cx, cy), covers(b, cx, cy));
                if ia && ib {
                    inter += 1;
                }
                if ia || ib {
                    uni += 1;
                }
            }
        }
        let iou = inter as f64 / uni as f64;
        (iou, iou - (hull - uni) as f64 / hull as f64)
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -2.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, f64::INFINITY, 1.0, 1.0).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx(10.0, 10.0, 2.0, 2.0)), 0.0);
        let b = bx(1.0, 1.0, 2.0, 2.0);
        assert_eq!(raster(&a, &b).0, 1.0 / 7.0);
        assert!((iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn giou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(giou(&a, &a), 1.0);
        let b = bx(1.0, 1.0, 2.0, 2.0);
        let (_, oracle) = raster(&a, &b);
        assert!((oracle - (1.0 / 7.0 - 2.0 / 9.0)).abs() < 1e-15);
        assert!((giou(&a, &b) - (1.0 / 7.0 - 2.0 / 9.0)).abs() < 1e-12);
        assert!((giou(&a, &b) + 0.079365).abs() < 1e-6);

        let far_a = bx(0.0, 0.0, 1.0, 1.0);
        let far_b = bx(100.0, 0.0, 1.0, 1.0);
        let (_, oracle) = raster(&far_a, &far_b);
        assert!((oracle + 99.0 / 101.0).abs() < 1e-15);
        assert!((giou(&far_a, &far_b) + 99.0 / 101.0).abs() < 1e-12);
        assert!((giou(&far_a, &far_b) + 0.980198).abs() < 1e-6);
    }

    #[test]
    fn giou_tends_to_minus_one_with_separation() {
        let a = bx(0.0, 0.0, 1.0, 1.0);
        let near = giou(&a, &bx(10.0, 0.0, 1.0, 1.0));
        let far = giou(&a, &bx(1e6, 0.0, 1.0, 1.0));
        assert!(far < near);
        assert!(far > -1.0 && far < -0.999_99);
    }

    #[test]
    fn ngiou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(ngiou(&a, &a), 1.0);
        let v = ngiou(&a, &bx(1.0, 1.0, 2.0, 2.0));
        assert!((v - (1.0 / 7.0 - 2.0 / 9.0 + 1.0) / 2.0).abs() < 1e-12);
        assert!((v - 0.460317).abs() < 1e-6);
        let far = ngiou(&bx(0.0, 0.0, 1.0, 1.0), &bx(1e3, 1e3, 1.0, 1.0));
        assert!(far > 0.0 && far < 1e-5);
    }

    #[test]
    fn hull_equal_union_gives_equality() {
        // Side-by-side boxes tile their hull exactly.
        let a = bx(0.0, 0.0, 2.0, 3.0);
        let b = bx(2.0, 0.0, 4.0, 3.0);
        assert_eq!(giou(&a, &b), iou(&a, &b));
        let nested = bx(1.0, 1.0, 1.0, 1.0);
        let outer = bx(0.0, 0.0, 4.0, 4.0);
        assert!((giou(&nested, &outer) - 1.0 / 16.0).abs() < 1e-15);
    }

    fn int_box() -> impl Strategy<Value = BoundingBox> {
        (0i32..63, 0i32..63)
            .prop_flat_map(|(x, y)| (Just(x), Just(y), 1i32..=(64 - x), 1i32..=(64 - y)))
            .prop_map(|(x, y, w, h)| bx(x as f64, y as f64, w as f64, h as f64))
    }

    fn real_box() -> impl Strategy<Value = BoundingBox> {
        (
            -500.0f64..500.0,
            -500.0f64..500.0,
            0.1f64..300.0,
            0.1f64..300.0,
        )
            .prop_map(|(x, y, w, h)| bx(x, y, w, h))
    }

    fn framed_box() -> impl Strategy<Value = BoundingBox> {
        (
            -100.0f64..100.0,
            -100.0f64..100.0,
            1.0f64..100.0,
            1.0f64..100.0,
        )
            .prop_map(|(x, y, w, h)| bx(x, y, w, h))
    }

    proptest! {
        #[test]
        fn matches_raster_oracle(a in int_box(), b in int_box()) {
            let (oi, og) = raster(&a, &b);
            prop_assert_eq!(iou(&a, &b), oi);
            prop_assert_eq!(giou(&a, &b), og);
        }

        #[test]
        fn ranges_and_symmetry(a in real_box(), b in real_box()) {
            let (i, g, n) = (iou(&a, &b), giou(&a, &b), ngiou(&a, &b));
            prop_assert!((0.0..=1.0).contains(&i));
            prop_assert!(g > -1.0 && g <= 1.0);
            prop_assert!(n > 0.0 && n <= 1.0);
            prop_assert!(g <= i);
            prop_assert_eq!(i, iou(&b, &a));
            prop_assert_eq!(g, giou(&b, &a));
            prop_assert_eq!(n, ngiou(&b, &a));
        }

        #[test]
        fn translation_invariant(a in framed_box(), b in framed_box(),
                                 dx in -100.0f64..100.0, dy in -100.0f64..100.0) {
            let sa = bx(a.x() + dx, a.y() + dy, a.w(), a.h());
            let sb = bx(b.x() + dx, b.y() + dy, b.w(), b.h());
            prop_assert!((iou(&a, &b) - iou(&sa, &sb)).abs() < 1e-12);
            prop_assert!((giou(&a, &b) - giou(&sa, &sb)).abs() < 1e-12);
            prop_assert!((ngiou(&a, &b) - ngiou(&sa, &sb)).abs() < 1e-12);
        }

        #[test]
        fn scale_invariant(a in real_box(), b in real_box(), s in 0.01f64..100.0) {
            let sa = bx(a.x() * s, a.y() * s, a.w() * s, a.h() * s);
            let sb = bx(b.x() * s, b.y() * s, b.w() * s, b.h() * s);
            prop_assert!((iou(&a, &b) - iou(&sa, &sb)).abs() < 1e-9);
            prop_assert!((giou(&a, &b) - giou(&sa, &sb)).abs() < 1e-9);
        }
    }
}
