use crate::err::{Error, Result};
use crate::geom::PolygonBoundary;
use crate::raster::{Mask, Raster};
use crate::Scalar;

/// Per-plane texture in the boundary's frame: RGB raster, which pixels hold
/// real observations, and which view each observed pixel came from.
#[derive(Clone, Debug)]
pub struct TextureMap {
    pub raster: Raster,
    pub observed: Mask,
    pub provenance: Vec<Option<u32>>,
    pub boundary: PolygonBoundary<Scalar>,
}

impl TextureMap {
    pub fn new(
        raster: Raster,
        observed: Mask,
        provenance: Vec<Option<u32>>,
        boundary: PolygonBoundary<Scalar>,
    ) -> Result<Self> {
        if observed.w != raster.w || observed.h != raster.h {
            return Err(Error::Geometry(format!(
                "observed mask {}x{} does not match raster {}x{}",
                observed.w, observed.h, raster.w, raster.h
            )));
        }
        if provenance.len() != raster.w * raster.h {
            return Err(Error::Geometry(format!(
                "provenance length {} does not match {} pixels",
                provenance.len(),
                raster.w * raster.h
            )));
        }
        for y in 0..raster.h {
            for x in 0..raster.w {
                let p = raster.get(x, y);
                if p.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Numeric(format!(
                        "non-finite texel at ({x},{y})"
                    )));
                }
                if observed.get(x, y) != provenance[y * raster.w + x].is_some() {
                    return Err(Error::Geometry(format!(
                        "provenance defined iff observed violated at ({x},{y})"
                    )));
                }
            }
        }
        Ok(TextureMap {
            raster,
            observed,
            provenance,
            boundary,
        })
    }

    /// Fully unobserved map of the given size.
    pub fn blank(w: usize, h: usize, boundary: PolygonBoundary<Scalar>) -> Self {
        TextureMap {
            raster: Raster::new(w, h),
            observed: Mask::new(w, h, false),
            provenance: vec![None; w * h],
            boundary,
        }
    }

    pub fn prov_at(&self, x: usize, y: usize) -> Option<u32> {
        self.provenance[y * self.raster.w + x]
    }

    pub fn set_prov(&mut self, x: usize, y: usize, v: Option<u32>) {
        self.provenance[y * self.raster.w + x] = v;
    }
}
