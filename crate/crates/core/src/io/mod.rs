mod config;
mod formats;
mod outputs;

pub use config::ProjectConfig;
pub use formats::{load_cameras, load_mesh, load_segments, write_cameras, write_mesh};
pub use outputs::{
    texture_name, write_outputs, EnergyBreakdown, OutputManifest, PlaneOutput, PlaneRecord,
    MANIFEST_NAME, MODEL_MTL, MODEL_OBJ,
};
