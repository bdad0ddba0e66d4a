//! Floating-point element types the library is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::OnceLock;

use num_traits::{Float, FloatConst, FromPrimitive};

use crate::linalg::Backend;

/// A real-number element type: implemented for `f64` and `f32`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this precision.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Width in bytes of the little-endian binary encoding.
    const BYTES: usize;
    /// Magic prefix of the binary array format for this precision.
    const MAGIC: [u8; 4];

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    #[doc(hidden)]
    fn backend_slot() -> &'static OnceLock<Box<dyn Backend<Self>>>;
}

impl Real for f64 {
    const BYTES: usize = 8;
    const MAGIC: [u8; 4] = *b"NAD8";

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("exact width"))
    }

    fn backend_slot() -> &'static OnceLock<Box<dyn Backend<Self>>> {
        static SLOT: OnceLock<Box<dyn Backend<f64>>> = OnceLock::new();
        &SLOT
    }
}

impl Real for f32 {
    const BYTES: usize = 4;
    const MAGIC: [u8; 4] = *b"NAD4";

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("exact width"))
    }

    fn backend_slot() -> &'static OnceLock<Box<dyn Backend<Self>>> {
        static SLOT: OnceLock<Box<dyn Backend<f32>>> = OnceLock::new();
        &SLOT
    }
}
