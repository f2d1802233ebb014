//! Byte-exact format checks against checked-in reference files. Run with
//! `VCODEC_BLESS=1` to rewrite them after an intentional format change.

mod common;

use common::{golden_dir, golden_stream, golden_tensor};
use vcodec::codec::Bitstream;
use vcodec::pipelines::CompressedTensor;
use vcodec::rate::codec_plane;
use vcodec::Tensor;

fn check(name: &str, fresh: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("VCODEC_BLESS").is_some() {
        std::fs::write(&path, fresh).unwrap();
    }
    let stored = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(stored.len(), fresh.len(), "{name} length");
    assert!(stored == fresh, "{name} differs from the checked-in bytes");
}

#[test]
fn tensor_file_is_stable() {
    check("reference.vctn", &golden_tensor().to_bytes());
}

#[test]
fn bitstream_is_stable() {
    check("reference.vcbs", &golden_stream(&golden_tensor()).to_bytes());
}

#[test]
fn stored_files_decode() {
    let t = Tensor::load(golden_dir().join("reference.vctn")).unwrap();
    assert_eq!(t, golden_tensor());
    let bytes = std::fs::read(golden_dir().join("reference.vcbs")).unwrap();
    let stream = Bitstream::from_bytes(&bytes).unwrap();
    let decoded = stream.decode_plane().unwrap();
    let reference = golden_stream(&t).decode_plane().unwrap();
    assert_eq!(decoded, reference);
    assert_eq!(decoded.params, codec_plane(&t).unwrap().params);
    let back = CompressedTensor::new(stream).decompress().unwrap();
    assert_eq!(back.dims(), t.dims());
}
