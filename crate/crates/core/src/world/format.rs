//! Versioned plain-text world format.
//!
//! ```text
//! objmem-world 1
//! size <width> <height>
//! cell_size <meters>
//! seed <u64>
//! start <x> <y> <heading>
//! grid
//! <one row per line, '.' free, '#' obstacle, row 0 first>
//! objects <count>
//! <true_id> <x> <y> <z> <footprint_radius> <category> <modifier,modifier,...>
//! categories <token>...
//! modifiers <token>...
//! context <token>...
//! confusable <token>...        (zero or more lines)
//! end
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::{AgentPose, Cell, GridMap, GridWorld, Heading, Point3, TrueObjectId, WorldObject};
use crate::oracle::{AttributeSet, Vocabulary};

pub const WORLD_FORMAT_HEADER: &str = "objmem-world 1";

#[derive(Debug, Error, PartialEq)]
pub enum WorldFormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of world file")]
    UnexpectedEof,
    #[error("invalid world: {0}")]
    Invalid(String),
}

fn heading_name(h: Heading) -> &'static str {
    match h {
        Heading::East => "east",
        Heading::North => "north",
        Heading::West => "west",
        Heading::South => "south",
    }
}

pub fn write_world(world: &GridWorld) -> String {
    let map = &world.map;
    let mut out = String::new();
    let _ = writeln!(out, "{WORLD_FORMAT_HEADER}");
    let _ = writeln!(out, "size {} {}", map.width(), map.height());
    let _ = writeln!(out, "cell_size {}", map.cell_size());
    let _ = writeln!(out, "seed {}", world.seed);
    let _ = writeln!(
        out,
        "start {} {} {}",
        world.start.cell.x,
        world.start.cell.y,
        heading_name(world.start.heading)
    );
    out.push_str("grid\n");
    for y in 0..map.height() as i32 {
        for x in 0..map.width() as i32 {
            out.push(if map.is_free(Cell::new(x, y)) { '.' } else { '#' });
        }
        out.push('\n');
    }
    let _ = writeln!(out, "objects {}", world.objects.len());
    for o in &world.objects {
        let mods = if o.attributes.modifiers.is_empty() {
            "-".to_string()
        } else {
            o.attributes.modifiers.join(",")
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            o.true_id, o.center.x, o.center.y, o.center.z, o.footprint_radius, o.attributes.category, mods
        );
    }
    let v = &world.vocabulary;
    let _ = writeln!(out, "categories {}", v.categories().join(" "));
    let _ = writeln!(out, "modifiers {}", v.modifiers().join(" "));
    let _ = writeln!(out, "context {}", v.context().join(" "));
    for g in v.confusable_groups() {
        let _ = writeln!(out, "confusable {}", g.join(" "));
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), WorldFormatError> {
        let (i, l) = self.inner.next().ok_or(WorldFormatError::UnexpectedEof)?;
        Ok((i + 1, l.trim_end()))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), WorldFormatError> {
        let (n, l) = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(syntax(n, format!("expected `{key}`")));
        }
        Ok((n, parts.collect()))
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> WorldFormatError {
    WorldFormatError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, WorldFormatError> {
    s.parse().map_err(|_| syntax(line, format!("invalid number {s:?}")))
}

fn arity(line: usize, parts: &[&str], n: usize) -> Result<(), WorldFormatError> {
    if parts.len() != n {
        return Err(syntax(line, format!("expected {n} fields, found {}", parts.len())));
    }
    Ok(())
}

pub fn parse_world(text: &str) -> Result<GridWorld, WorldFormatError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (n, header) = lines.next()?;
    if header != WORLD_FORMAT_HEADER {
        return Err(syntax(n, format!("expected header `{WORLD_FORMAT_HEADER}`")));
    }
    let (n, p) = lines.keyed("size")?;
    arity(n, &p, 2)?;
    let (w, h): (u32, u32) = (num(n, p[0])?, num(n, p[1])?);
    if w == 0 || h == 0 {
        return Err(syntax(n, "grid must be non-empty"));
    }
    let (n, p) = lines.keyed("cell_size")?;
    arity(n, &p, 1)?;
    let cell_size: f64 = num(n, p[0])?;
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(syntax(n, "cell_size must be positive"));
    }
    let (n, p) = lines.keyed("seed")?;
    arity(n, &p, 1)?;
    let seed: u64 = num(n, p[0])?;
    let (n, p) = lines.keyed("start")?;
    arity(n, &p, 3)?;
    let heading = match p[2] {
        "east" => Heading::East,
        "north" => Heading::North,
        "west" => Heading::West,
        "south" => Heading::South,
        other => return Err(syntax(n, format!("unknown heading {other:?}"))),
    };
    let start = AgentPose::new(Cell::new(num(n, p[0])?, num(n, p[1])?), heading);

    let (n, p) = lines.keyed("grid")?;
    arity(n, &p, 0)?;
    let mut map = GridMap::new(w, h, cell_size);
    for y in 0..h as i32 {
        let (n, row) = lines.next()?;
        if row.chars().count() != w as usize {
            return Err(syntax(n, format!("grid row must have {w} cells")));
        }
        for (x, ch) in row.chars().enumerate() {
            match ch {
                '.' => {}
                '#' => map.set_obstacle(Cell::new(x as i32, y), true),
                other => return Err(syntax(n, format!("invalid grid character {other:?}"))),
            }
        }
    }

    let (n, p) = lines.keyed("objects")?;
    arity(n, &p, 1)?;
    let count: usize = num(n, p[0])?;
    let mut raw_objects = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = lines.next()?;
        let p: Vec<&str> = l.split_whitespace().collect();
        arity(n, &p, 7)?;
        let modifiers = if p[6] == "-" {
            Vec::new()
        } else {
            p[6].split(',').map(str::to_string).collect()
        };
        raw_objects.push(WorldObject {
            true_id: TrueObjectId(num(n, p[0])?),
            center: Point3::new(num(n, p[1])?, num(n, p[2])?, num(n, p[3])?),
            footprint_radius: num(n, p[4])?,
            attributes: AttributeSet::new(p[5], modifiers),
        });
    }

    let owned = |v: Vec<&str>| v.into_iter().map(str::to_string).collect::<Vec<_>>();
    let (_, categories) = lines.keyed("categories")?;
    let (_, modifiers) = lines.keyed("modifiers")?;
    let (_, context) = lines.keyed("context")?;
    let mut confusable = Vec::new();
    loop {
        let (n, l) = lines.next()?;
        let mut parts = l.split_whitespace();
        match parts.next() {
            Some("confusable") => confusable.push(owned(parts.collect())),
            Some("end") if parts.next().is_none() => break,
            _ => return Err(syntax(n, "expected `confusable` or `end`")),
        }
    }
    if let Ok((n, l)) = lines.next() {
        if !l.is_empty() {
            return Err(syntax(n, "content after `end`"));
        }
    }

    let vocabulary = Vocabulary::new(owned(categories), owned(modifiers), owned(context), confusable)
        .map_err(|e| WorldFormatError::Invalid(e.to_string()))?;
    let world = GridWorld {
        map,
        objects: raw_objects,
        vocabulary,
        start,
        seed,
    };
    world
        .validate()
        .map_err(|e| WorldFormatError::Invalid(e.to_string()))?;
    Ok(world)
}
