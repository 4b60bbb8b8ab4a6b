//! Tensor arguments: a JSON tensor file, or `gallery:NAME[?t=VALUE&key=KEY]`
//! for the built-in cases.

use tnn_core::subdiff::{gallery, GalleryCase};
use tnn_core::{io, DenseTensor, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryRef {
    pub name: String,
    pub t: Option<f64>,
    pub key: Option<String>,
}

impl GalleryRef {
    pub fn parse(uri: &str) -> Result<Self> {
        let rest = uri
            .strip_prefix("gallery:")
            .ok_or_else(|| Error::Parameter(format!("`{uri}` is not a gallery reference")))?;
        let (name, query) = rest.split_once('?').unwrap_or((rest, ""));
        let mut out = GalleryRef { name: name.to_string(), t: None, key: None };
        for pair in query.split('&').filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("query item `{pair}` lacks `=`")))?;
            match k {
                "t" => {
                    out.t = Some(v.parse().map_err(|_| Error::Parameter(format!("bad parameter t = `{v}`")))?);
                }
                "key" => out.key = Some(v.to_string()),
                other => return Err(Error::Parameter(format!("unknown query key `{other}`"))),
            }
        }
        Ok(out)
    }

    pub fn case(&self) -> Result<GalleryCase> {
        gallery(&self.name, self.t)
    }
}

/// The tensor a bare gallery reference stands for: the perturbation `X` when
/// the case has one, otherwise `T`.
fn default_key(case: &GalleryCase) -> &'static str {
    if case.tensors.contains_key("X") { "X" } else { "T" }
}

pub fn load_tensor(arg: &str) -> Result<DenseTensor> {
    if arg.starts_with("gallery:") {
        let r = GalleryRef::parse(arg)?;
        let case = r.case()?;
        let key = r.key.as_deref().unwrap_or(default_key(&case));
        return case.tensor(key).cloned();
    }
    io::read_tensor(arg).map_err(|e| match e {
        Error::Io(io) => Error::Parameter(format!("cannot read {arg}: {io}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_query() {
        let r = GalleryRef::parse("gallery:yuan3?t=0.5&key=Z+X").unwrap();
        assert_eq!(r, GalleryRef { name: "yuan3".into(), t: Some(0.5), key: Some("Z+X".into()) });
        assert_eq!(GalleryRef::parse("gallery:limitation").unwrap().t, None);
        assert!(GalleryRef::parse("gallery:yuan3?t=x").is_err());
        assert!(GalleryRef::parse("gallery:yuan3?s=1").is_err());
        assert!(GalleryRef::parse("yuan3").is_err());
    }

    #[test]
    fn bare_reference_picks_the_perturbation() {
        let x = load_tensor("gallery:yuan3?t=1").unwrap();
        assert_eq!(x.get(&[0, 1, 1]).unwrap(), 1.0);
        assert_eq!(x.get(&[0, 0, 0]).unwrap(), 0.0);
        let t = load_tensor("gallery:limitation?key=T").unwrap();
        assert_eq!(t.get(&[0, 0, 0]).unwrap(), 1.0);
        assert!(load_tensor("gallery:nope").is_err());
    }
}
