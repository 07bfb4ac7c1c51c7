//! Instances shipped with the crate.

use crate::error::Error;
use crate::io::parse_instance_str;
use crate::model::Instance;

pub const NAMES: [&str; 3] = ["micro1", "pzp6", "zkab6"];

pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "micro1" => Some(include_str!("../fixtures/micro1.json")),
        "pzp6" => Some(include_str!("../fixtures/pzp6.json")),
        "zkab6" => Some(include_str!("../fixtures/zkab6.json")),
        _ => None,
    }
}

pub fn load(name: &str) -> Result<Instance, Error> {
    let text = source(name).ok_or_else(|| {
        Error::Input(format!("no embedded instance named {name} (available: {})", NAMES.join(", ")))
    })?;
    parse_instance_str(text)
}

pub fn micro1() -> Instance {
    load("micro1").expect("embedded micro1 parses")
}
