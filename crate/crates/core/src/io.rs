//! Tensor files: a JSON document `{"shape": [...], "data": [...]}` with the
//! data in row-major order. Floats are written in shortest round-trip form,
//! so a write/read cycle reproduces every entry bit for bit.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub fn tensor_to_string(t: &DenseTensor) -> String {
    serde_json::to_string(t).expect("tensors always serialize")
}

pub fn tensor_from_str(s: &str) -> Result<DenseTensor> {
    serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    tensor_from_str(&fs::read_to_string(path)?)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    fs::write(path, tensor_to_string(t) + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_vec, stream};

    #[test]
    fn round_trip_is_bit_exact() {
        let t = DenseTensor::new(vec![2, 3], gaussian_vec(&mut stream(1, 0), 6)).unwrap();
        let back = tensor_from_str(&tensor_to_string(&t)).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(matches!(tensor_from_str("{\"shape\":[2],\"data\":[1]}"), Err(Error::Format(_))));
        assert!(tensor_from_str("not json").is_err());
        assert!(tensor_from_str("{\"shape\":[],\"data\":[]}").is_err());
    }
}
