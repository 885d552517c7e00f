//! JSON scenario documents: grid, room rectangles, objects, start and target.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Environment, Pose, Terrain};
use crate::grid::{Cell, Grid};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

impl ScenarioError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    pub label: String,
    /// Inclusive cell rectangles `[x0, y0, x1, y1]`. Later rooms override
    /// earlier ones where they overlap.
    pub rects: Vec<[i32; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub label: String,
    /// Cell column.
    pub x: i32,
    /// Cell row.
    pub y: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    /// Meters.
    pub x: f64,
    pub y: f64,
    /// Radians.
    #[serde(default)]
    pub theta: f64,
}

/// On-disk scenario layout. `grid` rows use `#` for obstacles and `.` for
/// free space; row 0 is the top row and maps to `y = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub cell_size: f64,
    pub grid: Vec<String>,
    pub rooms: Vec<RoomSpec>,
    pub objects: Vec<ObjectSpec>,
    pub start: StartSpec,
    pub target: String,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub env: Environment,
    pub start: Pose,
    pub target: String,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_doc(&doc)
    }

    pub fn from_doc(doc: &ScenarioDoc) -> Result<Self, ScenarioError> {
        if !(doc.cell_size > 0.0 && doc.cell_size.is_finite()) {
            return Err(ScenarioError::field("cell_size", "must be a positive number"));
        }
        let height = doc.grid.len();
        if height < 3 {
            return Err(ScenarioError::field("grid", "needs at least 3 rows"));
        }
        let width = doc.grid[0].chars().count();
        if width < 3 {
            return Err(ScenarioError::field("grid[0]", "needs at least 3 columns"));
        }

        let mut occupied = Grid::filled(width, height, true);
        for (y, row) in doc.grid.iter().enumerate() {
            let n = row.chars().count();
            if n != width {
                return Err(ScenarioError::field(
                    format!("grid[{y}]"),
                    format!("expected {width} columns, found {n}"),
                ));
            }
            for (x, ch) in row.chars().enumerate() {
                let c = Cell::new(x as i32, y as i32);
                let on_edge = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                match ch {
                    '#' => {}
                    '.' if on_edge => {
                        return Err(ScenarioError::field(
                            format!("grid[{y}][{x}]"),
                            "boundary cells must be '#'",
                        ))
                    }
                    '.' => occupied[c] = false,
                    other => {
                        return Err(ScenarioError::field(
                            format!("grid[{y}][{x}]"),
                            format!("unexpected character {other:?}"),
                        ))
                    }
                }
            }
        }

        let mut room_labels: Vec<String> = Vec::new();
        let mut room_of: Grid<Option<u16>> = Grid::filled(width, height, None);
        for (i, room) in doc.rooms.iter().enumerate() {
            if room.label.is_empty() {
                return Err(ScenarioError::field(format!("rooms[{i}].label"), "empty label"));
            }
            let idx = intern(&mut room_labels, &room.label);
            for (j, &[x0, y0, x1, y1]) in room.rects.iter().enumerate() {
                let field = format!("rooms[{i}].rects[{j}]");
                if x0 > x1 || y0 > y1 {
                    return Err(ScenarioError::field(field, "expected x0 <= x1 and y0 <= y1"));
                }
                if !occupied.contains(Cell::new(x0, y0)) || !occupied.contains(Cell::new(x1, y1)) {
                    return Err(ScenarioError::field(field, "rectangle leaves the grid"));
                }
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        room_of[Cell::new(x, y)] = Some(idx);
                    }
                }
            }
        }

        let mut object_labels: Vec<String> = Vec::new();
        let mut object_of: BTreeMap<Cell, (u16, usize)> = BTreeMap::new();
        for (i, o) in doc.objects.iter().enumerate() {
            let c = Cell::new(o.x, o.y);
            let field = format!("objects[{i}]");
            if o.label.is_empty() {
                return Err(ScenarioError::field(format!("{field}.label"), "empty label"));
            }
            if !occupied.contains(c) {
                return Err(ScenarioError::field(field, format!("cell {c} is outside the grid")));
            }
            if occupied[c] {
                return Err(ScenarioError::field(field, format!("cell {c} is an obstacle")));
            }
            if let Some((_, prev)) = object_of.get(&c) {
                return Err(ScenarioError::field(
                    field,
                    format!("cell {c} already holds objects[{prev}]"),
                ));
            }
            let idx = intern(&mut object_labels, &o.label);
            object_of.insert(c, (idx, i));
        }

        let mut cells = Grid::filled(width, height, Terrain::Obstacle);
        for c in occupied.cells().collect::<Vec<_>>() {
            if occupied[c] {
                continue;
            }
            let room = room_of[c].ok_or_else(|| {
                ScenarioError::field("rooms", format!("free cell {c} has no room label"))
            })?;
            cells[c] = Terrain::Free {
                room,
                object: object_of.get(&c).map(|(o, _)| *o),
            };
        }

        let env = Environment::new(doc.cell_size, cells, room_labels, object_labels)
            .map_err(|e| ScenarioError::field("grid", e.to_string()))?;

        let start = Pose::new(doc.start.x, doc.start.y, doc.start.theta);
        if !doc.start.theta.is_finite() || !env.pose_is_valid(&start) {
            return Err(ScenarioError::field(
                "start",
                format!("({}, {}) is not inside a free cell", doc.start.x, doc.start.y),
            ));
        }
        if env.target_cells(&doc.target).is_empty() {
            return Err(ScenarioError::field(
                "target",
                format!("{:?} does not match any object", doc.target),
            ));
        }

        Ok(Self {
            env,
            start,
            target: doc.target.clone(),
        })
    }

    /// Serializes back to a document. Rooms are written as one-row runs.
    pub fn to_doc(&self) -> ScenarioDoc {
        let env = &self.env;
        let t = env.terrain();
        let grid = (0..t.height())
            .map(|y| {
                (0..t.width())
                    .map(|x| match t[Cell::new(x as i32, y as i32)] {
                        Terrain::Obstacle => '#',
                        Terrain::Free { .. } => '.',
                    })
                    .collect()
            })
            .collect();

        let mut rects: Vec<Vec<[i32; 4]>> = vec![Vec::new(); env.room_labels().len()];
        for y in 0..t.height() as i32 {
            let mut x = 0;
            while x < t.width() as i32 {
                if let Terrain::Free { room, .. } = t[Cell::new(x, y)] {
                    let x0 = x;
                    while x + 1 < t.width() as i32
                        && matches!(t[Cell::new(x + 1, y)], Terrain::Free { room: r, .. } if r == room)
                    {
                        x += 1;
                    }
                    rects[room as usize].push([x0, y, x, y]);
                }
                x += 1;
            }
        }
        let rooms = env
            .room_labels()
            .iter()
            .zip(rects)
            .map(|(label, rects)| RoomSpec {
                label: label.clone(),
                rects,
            })
            .collect();

        let objects = t
            .iter()
            .filter_map(|(c, terrain)| match terrain {
                Terrain::Free {
                    object: Some(o), ..
                } => Some(ObjectSpec {
                    label: env.object_labels()[*o as usize].clone(),
                    x: c.x,
                    y: c.y,
                }),
                _ => None,
            })
            .collect();

        ScenarioDoc {
            cell_size: env.cell_size(),
            grid,
            rooms,
            objects,
            start: StartSpec {
                x: self.start.x,
                y: self.start.y,
                theta: self.start.theta,
            },
            target: self.target.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scenario serializes")
    }
}

fn intern(labels: &mut Vec<String>, label: &str) -> u16 {
    if let Some(i) = labels.iter().position(|l| l == label) {
        return i as u16;
    }
    labels.push(label.to_string());
    (labels.len() - 1) as u16
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> ScenarioDoc {
        ScenarioDoc {
            cell_size: 0.25,
            grid: vec![
                "######".into(),
                "#....#".into(),
                "#....#".into(),
                "######".into(),
            ],
            rooms: vec![
                RoomSpec {
                    label: "hall".into(),
                    rects: vec![[1, 1, 4, 2]],
                },
                RoomSpec {
                    label: "study".into(),
                    rects: vec![[3, 1, 4, 2]],
                },
            ],
            objects: vec![ObjectSpec {
                label: "laptop".into(),
                x: 4,
                y: 2,
            }],
            start: StartSpec {
                x: 0.375,
                y: 0.375,
                theta: 0.0,
            },
            target: "laptop".into(),
        }
    }

    #[test]
    fn loads_and_round_trips() {
        let s = Scenario::from_doc(&doc()).unwrap();
        assert_eq!(s.env.room_at(Cell::new(1, 1)), Some("hall"));
        assert_eq!(s.env.room_at(Cell::new(4, 1)), Some("study"));
        assert_eq!(s.env.target_cells("laptop"), &[Cell::new(4, 2)]);
        let again = Scenario::from_json_str(&s.to_json_pretty()).unwrap();
        assert_eq!(again.to_doc(), s.to_doc());
    }

    fn field_of(err: ScenarioError) -> String {
        match err {
            ScenarioError::Field { field, .. } => field,
            other => panic!("expected field error, got {other}"),
        }
    }

    #[test]
    fn rejects_ragged_row() {
        let mut d = doc();
        d.grid[2] = "#...#".into();
        assert_eq!(field_of(Scenario::from_doc(&d).unwrap_err()), "grid[2]");
    }

    #[test]
    fn rejects_open_boundary() {
        let mut d = doc();
        d.grid[1] = ".....#".into();
        assert_eq!(field_of(Scenario::from_doc(&d).unwrap_err()), "grid[1][0]");
    }

    #[test]
    fn rejects_unlabelled_free_cell() {
        let mut d = doc();
        d.rooms[0].rects = vec![[1, 1, 1, 2]];
        assert_eq!(field_of(Scenario::from_doc(&d).unwrap_err()), "rooms");
    }

    #[test]
    fn rejects_object_on_obstacle() {
        let mut d = doc();
        d.objects[0].x = 5;
        assert_eq!(field_of(Scenario::from_doc(&d).unwrap_err()), "objects[0]");
    }

    #[test]
    fn rejects_missing_target() {
        let mut d = doc();
        d.target = "toilet".into();
        assert_eq!(field_of(Scenario::from_doc(&d).unwrap_err()), "target");
    }

    #[test]
    fn rejects_start_in_wall() {
        let mut d = doc();
        d.start.x = 0.1;
        assert_eq!(field_of(Scenario::from_doc(&d).unwrap_err()), "start");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = Scenario::from_json_str("{\n  \"cell_size\": 0.25,\n  \"grid\": 5\n}").unwrap_err();
        match err {
            ScenarioError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }
}
