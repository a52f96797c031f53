//! Extraction and shape checking of structured backend output.

use serde_json::Value;
use thiserror::Error;

use super::SchemaId;

#[derive(Debug, Clone, Copy)]
pub enum Shape {
    String,
    Integer,
    Boolean,
    Nullable(&'static Shape),
    Array(&'static Shape),
    Object(&'static [Field]),
}

#[derive(Debug, Clone, Copy)]
pub struct Field {
    pub name: &'static str,
    pub shape: Shape,
    pub required: bool,
}

const fn req(name: &'static str, shape: Shape) -> Field {
    Field {
        name,
        shape,
        required: true,
    }
}

const fn opt(name: &'static str, shape: Shape) -> Field {
    Field {
        name,
        shape,
        required: false,
    }
}

const SKELETON_NODE: Shape = Shape::Object(&[
    req("idx", Shape::Integer),
    req("label", Shape::Nullable(&Shape::String)),
    req("storyline", Shape::String),
    opt("goal", Shape::String),
]);
const SKELETON_EDGE: Shape = Shape::Object(&[
    req("from", Shape::Integer),
    req("to", Shape::Integer),
    req("criteria", Shape::String),
]);
const SKELETON: Shape = Shape::Object(&[
    req("root", Shape::Integer),
    req("nodes", Shape::Array(&SKELETON_NODE)),
    req("edges", Shape::Array(&SKELETON_EDGE)),
]);
const CRITERIA: Shape = Shape::Object(&[req("criteria", Shape::String)]);
const PLAYER: Shape = Shape::Object(&[req(
    "playerData",
    Shape::Object(&[
        req("name", Shape::String),
        req("health", Shape::Integer),
        req("attack", Shape::Integer),
        req("desc", Shape::String),
        req("sprite", Shape::String),
    ]),
)]);
const REVISED: Shape = Shape::Object(&[req("storyline", Shape::String)]);
const NPC: Shape = Shape::Object(&[
    req("name", Shape::String),
    req("desc", Shape::String),
    req("dialogue", Shape::Array(&Shape::String)),
    req("atk", Shape::Integer),
    req("ranged", Shape::Boolean),
    req("hp", Shape::Integer),
    req("friend", Shape::Boolean),
    opt("door", Shape::Nullable(&Shape::Integer)),
]);
const ITEM: Shape = Shape::Object(&[
    req("name", Shape::String),
    req("desc", Shape::String),
    req("pickable", Shape::Boolean),
    req("atk", Shape::Integer),
    req("hp", Shape::Integer),
]);
const DOOR: Shape = Shape::Object(&[req("idx", Shape::Integer), req("sprite", Shape::String)]);
const ENTITIES: Shape = Shape::Object(&[
    req("NPCs", Shape::Array(&NPC)),
    req("items", Shape::Array(&ITEM)),
    req("doors", Shape::Array(&DOOR)),
]);

pub fn shape_of(schema: SchemaId) -> &'static Shape {
    match schema {
        SchemaId::StorySkeleton => &SKELETON,
        SchemaId::Criteria => &CRITERIA,
        SchemaId::PlayerData => &PLAYER,
        SchemaId::RevisedStoryline => &REVISED,
        SchemaId::LevelEntities => &ENTITIES,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OutputError {
    #[error("no structured document found in {schema} output")]
    Parse { schema: SchemaId },
    #[error("{schema} output violates its schema at {}", paths.join(", "))]
    Schema {
        schema: SchemaId,
        paths: Vec<String>,
    },
}

fn join(base: &str, key: &str) -> String {
    if base.is_empty() {
        key.to_string()
    } else {
        format!("{base}.{key}")
    }
}

fn check(v: &Value, shape: &Shape, at: &str, out: &mut Vec<String>) {
    let ok = match (shape, v) {
        (Shape::Nullable(_), Value::Null) => true,
        (Shape::Nullable(inner), _) => return check(v, inner, at, out),
        (Shape::String, Value::String(_)) => true,
        (Shape::Integer, Value::Number(n)) => n.is_i64() || n.is_u64(),
        (Shape::Boolean, Value::Bool(_)) => true,
        (Shape::Array(inner), Value::Array(xs)) => {
            for (i, x) in xs.iter().enumerate() {
                check(x, inner, &format!("{at}[{i}]"), out);
            }
            true
        }
        (Shape::Object(fields), Value::Object(map)) => {
            for f in *fields {
                match map.get(f.name) {
                    Some(x) => check(x, &f.shape, &join(at, f.name), out),
                    None if f.required => out.push(join(at, f.name)),
                    None => {}
                }
            }
            true
        }
        _ => false,
    };
    if !ok {
        out.push(if at.is_empty() {
            "$".to_string()
        } else {
            at.to_string()
        });
    }
}

/// Every path in `v` that does not conform to `shape`; empty when valid.
pub fn schema_violations(v: &Value, shape: &Shape) -> Vec<String> {
    let mut out = Vec::new();
    check(v, shape, "", &mut out);
    out
}

/// The first well-formed JSON object or array embedded in `text`.
///
/// Code fences and surrounding prose are skipped.
pub fn extract_json(text: &str) -> Option<Value> {
    text.char_indices()
        .filter(|(_, c)| *c == '{' || *c == '[')
        .find_map(|(i, _)| {
            let mut it = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
            it.next().and_then(Result::ok)
        })
}

/// Extracts the document and checks it against the shape for `schema`.
pub fn parse_structured_output(text: &str, schema: SchemaId) -> Result<Value, OutputError> {
    let v = extract_json(text).ok_or(OutputError::Parse { schema })?;
    let paths = schema_violations(&v, shape_of(schema));
    if paths.is_empty() {
        Ok(v)
    } else {
        Err(OutputError::Schema { schema, paths })
    }
}
