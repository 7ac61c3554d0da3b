//! Scan frames and the OCCF v1 wire format.
//!
//! OCCF v1 is little-endian throughout:
//!
//! ```text
//! magic   4 bytes  "OCCF"
//! version u16      1
//! flags   u16      bit 0: points are already in world space
//! time    f64      seconds
//! origin  3 x f64  sensor position, meters
//! quat    4 x f64  orientation (w, x, y, z), unit up to 1e-6
//! count   u32      number of points
//! points  count x 3 x f32
//! ```
//!
//! Points are stored exactly as given (f32); decoding widens them to
//! f64 losslessly, so write -> read -> write reproduces the input bytes
//! bit for bit.

use std::io::{Read, Write};

use nalgebra::{Point3, Quaternion, UnitQuaternion};

use crate::error::FrameError;

pub const OCCF_MAGIC: [u8; 4] = *b"OCCF";
pub const OCCF_VERSION: u16 = 1;
const FLAG_WORLD_POINTS: u16 = 1;

/// One sensor scan: pose plus point list. The unit of integration and
/// replay.
#[derive(Clone, PartialEq, Debug)]
pub struct ScanFrame {
    /// Seconds; monotone non-decreasing across a dataset.
    pub timestamp: f64,
    /// Sensor position in world space, meters.
    pub origin: Point3<f64>,
    /// Orientation (w, x, y, z), kept exactly as decoded.
    pub orientation: Quaternion<f64>,
    /// True when `points` are already world-space coordinates.
    pub world_points: bool,
    pub points: Vec<Point3<f64>>,
}

impl ScanFrame {
    /// Frame with world-space points and identity orientation.
    pub fn from_world_points(
        timestamp: f64,
        origin: Point3<f64>,
        points: Vec<Point3<f64>>,
    ) -> Self {
        Self {
            timestamp,
            origin,
            orientation: Quaternion::new(1.0, 0.0, 0.0, 0.0),
            world_points: true,
            points,
        }
    }

    /// Points in world space: either verbatim, or rotated by the pose
    /// and offset by the origin for sensor-space frames. Non-finite
    /// points pass through and are dropped (and counted) during
    /// integration.
    pub fn world_points(&self) -> Vec<Point3<f64>> {
        if self.world_points {
            self.points.clone()
        } else {
            let rot = UnitQuaternion::from_quaternion(self.orientation);
            self.points
                .iter()
                .map(|p| self.origin + rot.transform_point(p).coords)
                .collect()
        }
    }

    /// Serializes the frame as OCCF v1.
    pub fn write_occf<W: Write>(&self, w: &mut W) -> Result<(), FrameError> {
        w.write_all(&OCCF_MAGIC)?;
        w.write_all(&OCCF_VERSION.to_le_bytes())?;
        let flags = if self.world_points { FLAG_WORLD_POINTS } else { 0 };
        w.write_all(&flags.to_le_bytes())?;
        w.write_all(&self.timestamp.to_le_bytes())?;
        for v in [self.origin.x, self.origin.y, self.origin.z] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [
            self.orientation.w,
            self.orientation.i,
            self.orientation.j,
            self.orientation.k,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.points.len() as u32).to_le_bytes())?;
        for p in &self.points {
            for v in [p.x as f32, p.y as f32, p.z as f32] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_occf_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(76 + self.points.len() * 12);
        self.write_occf(&mut buf).expect("vec write");
        buf
    }

    /// Decodes an OCCF v1 frame, validating magic, version, pose
    /// finiteness and quaternion norm. Point coordinates are not
    /// validated here; integration drops non-finite points.
    pub fn read_occf(bytes: &[u8]) -> Result<Self, FrameError> {
        let mut r = Cursor::new(bytes);
        let magic: [u8; 4] = r.take()?;
        if magic != OCCF_MAGIC {
            return Err(FrameError::BadMagic { found: magic });
        }
        let version = u16::from_le_bytes(r.take()?);
        if version != OCCF_VERSION {
            return Err(FrameError::BadVersion(version));
        }
        let flags = u16::from_le_bytes(r.take()?);
        let timestamp = f64::from_le_bytes(r.take()?);
        let origin = Point3::new(
            f64::from_le_bytes(r.take()?),
            f64::from_le_bytes(r.take()?),
            f64::from_le_bytes(r.take()?),
        );
        let orientation = Quaternion::new(
            f64::from_le_bytes(r.take()?),
            f64::from_le_bytes(r.take()?),
            f64::from_le_bytes(r.take()?),
            f64::from_le_bytes(r.take()?),
        );
        if !timestamp.is_finite()
            || !origin.iter().all(|v| v.is_finite())
            || !orientation.coords.iter().all(|v| v.is_finite())
        {
            return Err(FrameError::NonFinitePose);
        }
        let norm = orientation.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(FrameError::BadQuaternion { norm });
        }
        let count = u32::from_le_bytes(r.take()?) as usize;
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let x = f32::from_le_bytes(r.take()?);
            let y = f32::from_le_bytes(r.take()?);
            let z = f32::from_le_bytes(r.take()?);
            points.push(Point3::new(x as f64, y as f64, z as f64));
        }
        Ok(Self {
            timestamp,
            origin,
            orientation,
            world_points: flags & FLAG_WORLD_POINTS != 0,
            points,
        })
    }

    pub fn read_occf_from<R: Read>(r: &mut R) -> Result<Self, FrameError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::read_occf(&bytes)
    }
}

/// Byte cursor that reports the exact offset of a truncation.
struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, offset: 0 }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N], FrameError> {
        let end = self.offset + N;
        if end > self.bytes.len() {
            return Err(FrameError::Truncated {
                offset: self.offset,
                needed: N,
                available: self.bytes.len() - self.offset,
            });
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.offset..end]);
        self.offset = end;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_frame() -> ScanFrame {
        ScanFrame {
            timestamp: 12.5,
            origin: Point3::new(1.0, -2.0, 0.25),
            orientation: Quaternion::new(1.0, 0.0, 0.0, 0.0),
            world_points: true,
            points: vec![Point3::new(0.5, 0.5, 0.5), Point3::new(-1.25, 3.0, 0.125)],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let frame = golden_frame();
        let bytes = frame.to_occf_bytes();
        let decoded = ScanFrame::read_occf(&bytes).unwrap();
        assert_eq!(decoded, frame);
        assert_eq!(decoded.to_occf_bytes(), bytes);
    }

    #[test]
    fn truncated_frame_names_the_offset() {
        let bytes = golden_frame().to_occf_bytes();
        let cut = &bytes[..bytes.len() - 5];
        match ScanFrame::read_occf(cut) {
            Err(FrameError::Truncated { offset, .. }) => {
                assert!(offset >= 76, "offset {offset} should be in the point data");
            }
            other => panic!("expected truncation, got {other:?}"),
        }
        // Header truncation reports an early offset.
        match ScanFrame::read_occf(&bytes[..10]) {
            Err(FrameError::Truncated { offset, .. }) => assert!(offset <= 10),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = golden_frame().to_occf_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            ScanFrame::read_occf(&bytes),
            Err(FrameError::BadMagic { .. })
        ));
        let mut bytes = golden_frame().to_occf_bytes();
        bytes[4] = 9;
        assert!(matches!(
            ScanFrame::read_occf(&bytes),
            Err(FrameError::BadVersion(9))
        ));
    }

    #[test]
    fn non_unit_quaternion_is_rejected() {
        let mut frame = golden_frame();
        frame.orientation = Quaternion::new(1.0, 0.5, 0.0, 0.0);
        let bytes = frame.to_occf_bytes();
        assert!(matches!(
            ScanFrame::read_occf(&bytes),
            Err(FrameError::BadQuaternion { .. })
        ));
    }

    #[test]
    fn nan_pose_is_rejected_but_nan_point_decodes() {
        let mut frame = golden_frame();
        frame.origin.x = f64::NAN;
        assert!(matches!(
            ScanFrame::read_occf(&frame.to_occf_bytes()),
            Err(FrameError::NonFinitePose)
        ));

        let mut frame = golden_frame();
        frame.points[0] = Point3::new(f32::NAN as f64, 0.0, 0.0);
        let decoded = ScanFrame::read_occf(&frame.to_occf_bytes()).unwrap();
        assert!(decoded.points[0].x.is_nan());
        assert_eq!(decoded.points.len(), 2);
    }

    #[test]
    fn sensor_space_points_rotate_into_world() {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let frame = ScanFrame {
            timestamp: 0.0,
            origin: Point3::new(10.0, 0.0, 0.0),
            // 90 degrees about +z: (1, 0, 0) -> (0, 1, 0)
            orientation: Quaternion::new(half, 0.0, 0.0, half),
            world_points: false,
            points: vec![Point3::new(1.0, 0.0, 0.0)],
        };
        let world = frame.world_points();
        assert!((world[0].x - 10.0).abs() < 1e-12);
        assert!((world[0].y - 1.0).abs() < 1e-12);
        assert!(world[0].z.abs() < 1e-12);
        // Round trip keeps the stored sensor-space points, not the
        // transformed ones.
        let decoded = ScanFrame::read_occf(&frame.to_occf_bytes()).unwrap();
        assert_eq!(decoded.points[0], Point3::new(1.0, 0.0, 0.0));
    }
}
