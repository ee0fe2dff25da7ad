//! Line-oriented `key=value` text files for public parameters and the trace key.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::group::{hash::HASH_ALGORITHM, Curve, Point};
use crate::ringsig::{PublicParams, TraceKey};

pub const PARAMS_FORMAT: &str = "ringbid-params-1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("line {0}: expected key=value")]
    Syntax(usize),
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("missing key {0}")]
    MissingKey(&'static str),
    #[error("bad value for {key}: {reason}")]
    Value { key: &'static str, reason: String },
}

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, CodecError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(CodecError::Syntax(i + 1))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CodecError::DuplicateKey(k));
        }
    }
    Ok(map)
}

fn get<'a>(map: &'a BTreeMap<String, String>, key: &'static str) -> Result<&'a str, CodecError> {
    map.get(key)
        .map(String::as_str)
        .ok_or(CodecError::MissingKey(key))
}

fn bad(key: &'static str, reason: impl ToString) -> CodecError {
    CodecError::Value {
        key,
        reason: reason.to_string(),
    }
}

fn hex_int(map: &BTreeMap<String, String>, key: &'static str) -> Result<BigUint, CodecError> {
    let bytes = hex::decode(get(map, key)?).map_err(|e| bad(key, e))?;
    Ok(BigUint::from_bytes_be(&bytes))
}

fn hex_point(curve: &Curve, key: &'static str, value: &str) -> Result<Point, CodecError> {
    let bytes = hex::decode(value).map_err(|e| bad(key, e))?;
    curve.decode_point(&bytes).map_err(|e| bad(key, e))
}

pub fn params_to_text(pp: &PublicParams) -> String {
    let c = pp.curve();
    let pt = |p: &Point| hex::encode(c.encode_point(p));
    let u: Vec<String> = pp.u().iter().map(pt).collect();
    format!(
        "format={PARAMS_FORMAT}\nhash={}\nk={}\nell={}\nn={}\ng={}\nh={}\nA={}\nB0={}\nA_hat={}\nu_prime={}\nu={}\n",
        pp.hash().algorithm(),
        pp.k(),
        hex::encode(c.ell().to_bytes_be()),
        hex::encode(c.order().to_bytes_be()),
        pt(c.g()),
        pt(c.h()),
        pt(pp.a()),
        pt(pp.b0()),
        pt(pp.a_hat()),
        pt(pp.u_prime()),
        u.join(","),
    )
}

/// Parses and fully validates published parameters.
pub fn params_from_text(text: &str) -> Result<PublicParams, CodecError> {
    let map = parse_key_values(text)?;
    if get(&map, "format")? != PARAMS_FORMAT {
        return Err(bad("format", "unsupported format"));
    }
    if get(&map, "hash")? != HASH_ALGORITHM {
        return Err(bad("hash", "unsupported hash"));
    }
    let k: usize = get(&map, "k")?.parse().map_err(|e| bad("k", e))?;
    let ell = hex_int(&map, "ell")?;
    let n = hex_int(&map, "n")?;

    // g and h can only be decoded once the field is known
    Curve::check_field(&ell, &n).map_err(|e| bad("ell", e))?;
    let bare = Curve::unchecked(ell.clone(), n.clone(), Point::Identity, Point::Identity);
    let g = hex_point(&bare, "g", get(&map, "g")?)?;
    let h = hex_point(&bare, "h", get(&map, "h")?)?;
    let curve = Curve::new(ell, n, g, h).map_err(|e| bad("g", e))?;

    let point = |key: &'static str| -> Result<Point, CodecError> {
        hex_point(&curve, key, get(&map, key)?)
    };
    let u_text = get(&map, "u")?;
    let u = if u_text.is_empty() {
        Vec::new()
    } else {
        u_text
            .split(',')
            .map(|s| hex_point(&curve, "u", s.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if u.len() != k {
        return Err(bad("u", format!("expected {k} points, found {}", u.len())));
    }
    PublicParams::from_parts(
        curve.clone(),
        point("A")?,
        point("B0")?,
        point("A_hat")?,
        point("u_prime")?,
        u,
    )
    .map_err(|e| bad("A", e))
}

pub fn tracekey_to_text(tk: &TraceKey) -> String {
    format!("q={}\n", hex::encode(tk.q().to_bytes_be()))
}

pub fn tracekey_from_text(text: &str, curve: &Curve) -> Result<TraceKey, CodecError> {
    let map = parse_key_values(text)?;
    TraceKey::new(hex_int(&map, "q")?, curve).map_err(|e| bad("q", e))
}
