//! Binary scene checkpoint: "LODGS" magic, version, K primitives with their
//! filter bases as little-endian f32 records, nu_ref, then a CRC-32 over
//! everything before it. Record size is (14 + 7l) floats.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::lod::LodBasis;
use crate::primitive::GaussianPrimitive;
use crate::scene::Scene;

pub const SCENE_MAGIC: &[u8; 5] = b"LODGS";
pub const SCENE_VERSION: u32 = 1;

pub fn scene_record_floats(basis_size: usize) -> usize {
    14 + 7 * basis_size
}

fn push_f32(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&(v as f32).to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::InvalidScene { reason: "file truncated".into() });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f64> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()) as f64)
    }

    fn f32_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f32()).collect()
    }

    fn vector3(&mut self) -> Result<Vector3<f64>> {
        Ok(Vector3::new(self.f32()?, self.f32()?, self.f32()?))
    }
}

pub fn scene_to_bytes(scene: &Scene) -> Vec<u8> {
    let l = scene.basis_size();
    let mut out = Vec::with_capacity(17 + scene.len() * scene_record_floats(l) * 4 + 8);
    out.extend_from_slice(SCENE_MAGIC);
    out.extend_from_slice(&SCENE_VERSION.to_le_bytes());
    out.extend_from_slice(&(scene.len() as u32).to_le_bytes());
    out.extend_from_slice(&(l as u32).to_le_bytes());
    for (prim, basis) in scene.primitives.iter().zip(&scene.bases) {
        for c in 0..3 {
            push_f32(&mut out, prim.position[c]);
        }
        for c in 0..4 {
            push_f32(&mut out, prim.rotation[c]);
        }
        for c in 0..3 {
            push_f32(&mut out, prim.log_scales[c]);
        }
        push_f32(&mut out, prim.opacity_logit);
        for c in 0..3 {
            push_f32(&mut out, prim.color[c]);
        }
        for v in &basis.centers {
            push_f32(&mut out, *v);
        }
        for v in &basis.log_widths {
            push_f32(&mut out, *v);
        }
        for v in &basis.weights_scale {
            push_f32(&mut out, *v);
        }
        for v in &basis.weights_opacity {
            push_f32(&mut out, *v);
        }
        for w in &basis.weights_color {
            for c in 0..3 {
                push_f32(&mut out, w[c]);
            }
        }
    }
    push_f32(&mut out, scene.nu_ref);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn scene_from_bytes(bytes: &[u8]) -> Result<Scene> {
    let bad = |reason: &str| Error::InvalidScene { reason: reason.to_string() };
    if bytes.len() < 4 {
        return Err(bad("file truncated"));
    }
    let (payload, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(payload) != stored {
        return Err(bad("checksum mismatch"));
    }

    let mut r = Reader { bytes: payload, pos: 0 };
    if r.take(5)? != SCENE_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.u32()?;
    if version != SCENE_VERSION {
        return Err(Error::InvalidScene { reason: format!("unsupported version {version}") });
    }
    let k = r.u32()? as usize;
    let l = r.u32()? as usize;
    let expected = 17 + k * scene_record_floats(l) * 4 + 4;
    if payload.len() != expected {
        return Err(Error::InvalidScene {
            reason: format!("size {} does not match header ({expected} expected)", payload.len()),
        });
    }

    let mut primitives = Vec::with_capacity(k);
    let mut bases = Vec::with_capacity(k);
    for _ in 0..k {
        primitives.push(GaussianPrimitive {
            position: r.vector3()?,
            rotation: [r.f32()?, r.f32()?, r.f32()?, r.f32()?],
            log_scales: r.vector3()?,
            opacity_logit: r.f32()?,
            color: r.vector3()?,
        });
        bases.push(LodBasis {
            centers: r.f32_vec(l)?,
            log_widths: r.f32_vec(l)?,
            weights_scale: r.f32_vec(l)?,
            weights_opacity: r.f32_vec(l)?,
            weights_color: (0..l).map(|_| r.vector3()).collect::<Result<_>>()?,
        });
    }
    let nu_ref = r.f32()?;
    Scene::new(primitives, bases, nu_ref)
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<()> {
    fs::write(path, scene_to_bytes(scene))?;
    Ok(())
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    scene_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_toy_scene, ToyKind};

    #[test]
    fn crc_implementation_matches_the_standard_check_value() {
        assert_eq!(crc32fast::hash(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn round_trip_is_stable_at_f32_precision() {
        let scene = build_toy_scene(ToyKind::Random, 9, 5);
        let bytes = scene_to_bytes(&scene);
        let loaded = scene_from_bytes(&bytes).unwrap();
        // Once quantized, further trips change nothing.
        let bytes2 = scene_to_bytes(&loaded);
        assert_eq!(bytes, bytes2);
        assert_eq!(scene_from_bytes(&bytes2).unwrap(), loaded);
        assert_eq!(loaded.len(), scene.len());
        assert_eq!(loaded.basis_size(), scene.basis_size());
        for (a, b) in scene.primitives.iter().zip(&loaded.primitives) {
            for c in 0..3 {
                assert_eq!(b.position[c], a.position[c] as f32 as f64);
            }
            assert_eq!(b.opacity_logit, a.opacity_logit as f32 as f64);
        }
        assert_eq!(loaded.nu_ref, scene.nu_ref as f32 as f64);
    }

    #[test]
    fn file_size_matches_the_record_formula() {
        let scene = build_toy_scene(ToyKind::Ring, 7, 2);
        let l = scene.basis_size();
        let bytes = scene_to_bytes(&scene);
        assert_eq!(bytes.len(), 17 + 7 * (14 + 7 * l) * 4 + 8);
    }

    #[test]
    fn corruption_is_detected() {
        let scene = build_toy_scene(ToyKind::Ring, 5, 3);
        let good = scene_to_bytes(&scene);

        let mut flipped = good.clone();
        flipped[40] ^= 0x10;
        assert!(matches!(scene_from_bytes(&flipped), Err(Error::InvalidScene { .. })));

        let truncated = &good[..good.len() - 9];
        assert!(scene_from_bytes(truncated).is_err());

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(scene_from_bytes(&bad_magic).is_err());
    }

    #[test]
    fn wrong_version_is_rejected_with_a_clear_reason() {
        let scene = build_toy_scene(ToyKind::Ring, 4, 4);
        let mut bytes = scene_to_bytes(&scene);
        bytes[5] = 2;
        let crc = crc32fast::hash(&bytes[..bytes.len() - 4]);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        match scene_from_bytes(&bytes) {
            Err(Error::InvalidScene { reason }) => assert!(reason.contains("version")),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn save_and_load_through_the_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.lodgs");
        let scene = build_toy_scene(ToyKind::CheckerPlane, 3, 6);
        save_scene(&path, &scene).unwrap();
        let loaded = load_scene(&path).unwrap();
        assert_eq!(loaded.len(), 9);
        assert_eq!(scene_to_bytes(&loaded), scene_to_bytes(&scene));
    }
}
