//! Amodal object pool and spatial-aware mixing.
//!
//! Pool objects are taken from strictly thresholded amodal predictions and
//! pasted back at their original coordinates into other images, with the
//! pixels they shared with neighbours zeroed out.

mod mix;
mod pool;

pub use mix::{spatial_aware_mix, MixedSample, PasteOutcome, PasteRecord, PASTE_SEQ_BASE};
pub use pool::{
    admit_object, build_object_pool, image_pool_candidates, Admission, ObjectPool, PoolObject,
    DEFAULT_POOL_CAPACITY,
};
