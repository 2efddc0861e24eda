mod illum;
mod poisson;
mod seam;
mod step;
mod texture;

pub use illum::illumination_adjust;
pub use poisson::poisson_blend;
pub use seam::{graphcut_seam, SeamResult, SEAM_EPS};
pub use step::{composite_step, CompositeReport};
pub use texture::TextureMap;
