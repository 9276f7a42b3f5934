//! Loading inputs and parsing compound flag values.

use anyhow::Context;
use serde::Serializer;

use selfaffine::carpets::{carpet_to_ifs, CarpetSpec};
use selfaffine::Ifs;

use crate::InputArgs;

pub struct Loaded {
    pub ifs: Ifs,
    pub carpet: Option<CarpetSpec>,
    pub source: String,
}

fn read(path: &str) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))
}

pub fn load(input: &InputArgs) -> anyhow::Result<Loaded> {
    match (&input.ifs, &input.carpet) {
        (Some(path), _) => {
            let ifs = Ifs::from_json(&read(path)?).with_context(|| path.clone())?;
            Ok(Loaded {
                ifs,
                carpet: None,
                source: path.clone(),
            })
        }
        (None, Some(path)) => {
            let carpet = load_carpet(path)?;
            Ok(Loaded {
                ifs: carpet_to_ifs(&carpet),
                carpet: Some(carpet),
                source: path.clone(),
            })
        }
        (None, None) => anyhow::bail!("one of --ifs or --carpet is required"),
    }
}

pub fn load_carpet(path: &str) -> anyhow::Result<CarpetSpec> {
    CarpetSpec::from_json(&read(path)?).with_context(|| path.to_string())
}

/// `j0..j1` with `j0 < j1`, both at most 52.
pub fn parse_scales(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected j0..j1, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("`{t}`: {e}"));
    let (j0, j1) = (parse(a)?, parse(b)?);
    if j1 < j0 + 2 || j1 > 52 {
        return Err(format!("need j0 + 2 <= j1 <= 52 for a 3-point fit, got {j0}..{j1}"));
    }
    Ok((j0, j1))
}

pub fn parse_rect(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(parts).map_err(|p| format!("expected x0,y0,x1,y1, got {} values", p.len()))
}

pub fn serialize_scales<S: Serializer>(v: &(u32, u32), s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}..{}", v.0, v.1))
}

pub fn serialize_rect<S: Serializer>(v: &[f64; 4], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{},{},{},{}", v[0], v[1], v[2], v[3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales() {
        assert_eq!(parse_scales("3..8"), Ok((3, 8)));
        assert!(parse_scales("3..4").is_err());
        assert!(parse_scales("3-8").is_err());
        assert!(parse_scales("3..60").is_err());
    }

    #[test]
    fn rect() {
        assert_eq!(parse_rect("0,0,1,0.5"), Ok([0.0, 0.0, 1.0, 0.5]));
        assert!(parse_rect("0,0,1").is_err());
        assert!(parse_rect("0,0,1,x").is_err());
    }
}
