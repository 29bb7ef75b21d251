use super::{Point2, SurfaceSpec};
use crate::error::{Error, Result};

/// Hard ceiling on the image ring index; rings grow as 8k images.
pub const MAX_IMAGE_ORDER: u32 = 16;

/// Mirror image of a boundary-reflected source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: Point2,
    /// Ring index `max(|m|, |n|)`; zero for the source itself.
    pub order: u32,
    /// Edge bounces along the unfolded path, `|m| + |n|`.
    pub bounces: u32,
    /// Mirror cell indices `(m, n)`.
    pub cell: (i32, i32),
}

/// Coordinate of `v` mirrored into cell `m` of a 1-D domain of length `len`.
///
/// Even cells translate, odd cells reflect:
/// `m = 1` gives `2 len - v`, `m = -1` gives `-v`.
pub fn mirror_coord(v: f64, m: i32, len: f64) -> f64 {
    if m % 2 == 0 {
        m as f64 * len + v
    } else {
        (m + 1) as f64 * len - v
    }
}

/// All mirror images of `p` up to ring `order`, ordered by ring then cell.
pub fn image_sources(p: Point2, order: u32, surface: &SurfaceSpec) -> Result<Vec<ImageSource>> {
    if !surface.contains(p) {
        return Err(Error::Domain(format!(
            "point ({}, {}) is outside the {} x {} m surface",
            p.x, p.y, surface.width_m, surface.height_m
        )));
    }
    if order > MAX_IMAGE_ORDER {
        return Err(Error::Domain(format!(
            "image order {order} exceeds the limit of {MAX_IMAGE_ORDER}"
        )));
    }
    let (w, h) = (surface.width_m, surface.height_m);
    let k = order as i32;
    let mut out = Vec::with_capacity(((2 * k + 1) * (2 * k + 1)) as usize);
    for ring in 0..=k {
        for m in -ring..=ring {
            for n in -ring..=ring {
                if m.abs().max(n.abs()) != ring {
                    continue;
                }
                out.push(ImageSource {
                    position: Point2::new(mirror_coord(p.x, m, w), mirror_coord(p.y, n, h)),
                    order: ring as u32,
                    bounces: (m.abs() + n.abs()) as u32,
                    cell: (m, n),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::MaterialLibrary;

    fn surface(w: f64, h: f64) -> SurfaceSpec {
        SurfaceSpec {
            width_m: w,
            height_m: h,
            material: MaterialLibrary::builtin().get("cloth").unwrap().clone(),
        }
    }

    #[test]
    fn order_zero_is_identity() {
        let s = surface(2.0, 1.0);
        let p = Point2::new(0.3, 0.4);
        let imgs = image_sources(p, 0, &s).unwrap();
        assert_eq!(imgs.len(), 1);
        assert_eq!(imgs[0].position, p);
        assert_eq!(imgs[0].order, 0);
    }

    #[test]
    fn first_ring_of_centered_point() {
        let s = surface(2.0, 1.0);
        let p = Point2::new(1.0, 0.5);
        let imgs = image_sources(p, 1, &s).unwrap();
        assert_eq!(imgs.len(), 9);
        let ring: Vec<_> = imgs.iter().filter(|i| i.order == 1).collect();
        assert_eq!(ring.len(), 8);
        for i in &ring {
            // centered source: images sit on a lattice spaced by (W, H)
            let (m, n) = i.cell;
            assert!((i.position.x - (1.0 + 2.0 * m as f64)).abs() < 1e-12);
            assert!((i.position.y - (0.5 + 1.0 * n as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_sizes() {
        let s = surface(1.0, 1.0);
        let imgs = image_sources(Point2::new(0.2, 0.7), 3, &s).unwrap();
        for k in 1..=3u32 {
            let count = imgs.iter().filter(|i| i.order == k).count() as i64;
            let k = k as i64;
            assert_eq!(count, (2 * k + 1).pow(2) - (2 * (k - 1) + 1).pow(2));
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        let s = surface(1.0, 1.0);
        assert!(image_sources(Point2::new(1.5, 0.5), 1, &s).is_err());
        assert!(image_sources(Point2::new(0.5, 0.5), MAX_IMAGE_ORDER + 1, &s).is_err());
    }

    #[test]
    fn mirror_is_an_involution() {
        for &v in &[0.0, 0.13, 0.5, 1.0] {
            // reflect across x = L, then back
            let once = mirror_coord(v, 1, 1.0);
            assert!((mirror_coord(once, 1, 1.0) - v).abs() < 1e-15);
            let left = mirror_coord(v, -1, 1.0);
            assert!((mirror_coord(left, -1, 1.0) - v).abs() < 1e-15);
        }
    }
}
