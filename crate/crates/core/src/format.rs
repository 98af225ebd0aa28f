//! JSON game files.
//!
//! ```json
//! {"type": "dense", "action_counts": [2, 2], "utilities": [[3, 1, 4, 2], [3, 4, 1, 2]]}
//! {"type": "polymatrix", "action_counts": [2, 3],
//!  "edges": [{"from": 0, "to": 1, "table": [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]}]}
//! ```
//!
//! Dense utilities are flat row-major tables with player 0 slowest. Edge
//! tables are indexed `[x_from][x_to]`. Syntax and table-shape problems are
//! reported with the line and column from the parser; cross-field problems
//! name the offending JSON path.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AnyGame, DenseGame, Game, PolymatrixGame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Dense,
    Polymatrix,
}

// A flat struct rather than a tagged enum: tagged enums buffer their
// content and the parser loses line information.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    #[serde(rename = "type")]
    kind: Kind,
    action_counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utilities: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<EdgeEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    from: usize,
    to: usize,
    table: Table,
}

/// Non-empty rectangular matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub(crate) struct Table {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) flat: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Table {
    type Error = String;
    fn try_from(v: Vec<Vec<f64>>) -> std::result::Result<Self, String> {
        let rows = v.len();
        let cols = v.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err("edge table must be a non-empty matrix".into());
        }
        if let Some(r) = v.iter().position(|r| r.len() != cols) {
            return Err(format!(
                "edge table row {r} has {} entries, row 0 has {cols}",
                v[r].len()
            ));
        }
        Ok(Table {
            rows,
            cols,
            flat: v.into_iter().flatten().collect(),
        })
    }
}

impl From<Table> for Vec<Vec<f64>> {
    fn from(t: Table) -> Self {
        t.flat.chunks(t.cols).map(<[f64]>::to_vec).collect()
    }
}

/// serde_json messages already end with the line and column.
pub(crate) fn json_error(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))
}

/// Parses a game from JSON text.
pub fn parse_game(text: &str) -> Result<AnyGame> {
    let file: GameFile = serde_json::from_str(text).map_err(json_error)?;
    let action_counts = file.action_counts;
    match (file.kind, file.utilities, file.edges) {
        (Kind::Dense, Some(utilities), None) => DenseGame::new(action_counts, utilities)
            .map(AnyGame::Dense)
            .map_err(|e| Error::Format(format!("utilities: {e}"))),
        (Kind::Dense, _, _) => Err(Error::Format(
            "a dense game needs \"utilities\" and no \"edges\"".into(),
        )),
        (Kind::Polymatrix, None, edges) => {
            let mut game =
                PolymatrixGame::new(action_counts.clone()).map_err(|e| Error::Format(format!("action_counts: {e}")))?;
            for (k, edge) in edges.unwrap_or_default().into_iter().enumerate() {
                let at = |msg: String| Error::Format(format!("edges[{k}] (from {} to {}): {msg}", edge.from, edge.to));
                let (mf, mt) = match (action_counts.get(edge.from), action_counts.get(edge.to)) {
                    (Some(&a), Some(&b)) => (a, b),
                    _ => return Err(at(format!("player index outside 0..{}", action_counts.len()))),
                };
                if (edge.table.rows, edge.table.cols) != (mf, mt) {
                    return Err(at(format!(
                        "table is {}x{}, expected {mf}x{mt}",
                        edge.table.rows, edge.table.cols
                    )));
                }
                game.add_edge(edge.from, edge.to, edge.table.flat)
                    .map_err(|e| at(e.to_string()))?;
            }
            Ok(AnyGame::Polymatrix(game))
        }
        (Kind::Polymatrix, Some(_), _) => Err(Error::Format(
            "a polymatrix game takes \"edges\", not \"utilities\"".into(),
        )),
    }
}

pub fn load_game(path: impl AsRef<Path>) -> Result<AnyGame> {
    let path = path.as_ref();
    let text = read_file(path)?;
    parse_game(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Serializes a game to the JSON game-file format.
pub fn game_to_json(game: &AnyGame) -> String {
    let file = match game {
        AnyGame::Dense(g) => GameFile {
            kind: Kind::Dense,
            action_counts: g.action_counts().to_vec(),
            utilities: Some((0..g.player_count()).map(|i| g.utilities(i).to_vec()).collect()),
            edges: None,
        },
        AnyGame::Polymatrix(g) => GameFile {
            kind: Kind::Polymatrix,
            action_counts: g.action_counts().to_vec(),
            utilities: None,
            edges: Some(
                (0..g.player_count())
                    .flat_map(|i| {
                        g.edges(i).iter().map(move |e| EdgeEntry {
                            from: i,
                            to: e.to,
                            table: Table {
                                rows: g.action_counts()[i],
                                cols: g.action_counts()[e.to],
                                flat: e.table.clone(),
                            },
                        })
                    })
                    .collect(),
            ),
        },
    };
    serde_json::to_string(&file).expect("game serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn parse_dense() {
        let g = parse_game(r#"{"type":"dense","action_counts":[2,2],"utilities":[[3,1,4,2],[3,4,1,2]]}"#).unwrap();
        assert_eq!(g, AnyGame::Dense(builtin::prisoners_dilemma()));
    }

    #[test]
    fn parse_polymatrix() {
        let g = parse_game(
            r#"{"type":"polymatrix","action_counts":[2,3],
                "edges":[{"from":0,"to":1,"table":[[0.1,0.2,0.3],[0.4,0.5,0.6]]}]}"#,
        )
        .unwrap();
        let AnyGame::Polymatrix(p) = &g else { panic!() };
        assert_eq!(p.edges(0)[0].table, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert!(p.edges(1).is_empty());
    }

    #[test]
    fn round_trip() {
        let mut p = PolymatrixGame::new(vec![2, 3, 1]).unwrap();
        p.add_edge(0, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        p.add_edge(2, 0, vec![1.0, 2.0]).unwrap();
        let g = AnyGame::Polymatrix(p);
        assert_eq!(parse_game(&game_to_json(&g)).unwrap(), g);
        let d = AnyGame::Dense(builtin::hard_5x5());
        assert_eq!(parse_game(&game_to_json(&d)).unwrap(), d);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_game("{\n\"type\": \"dense\",\n\"action_counts\": [2,2],\n\"utilities\": [[1,2,3,4] [1]]\n}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn ragged_table_reports_line() {
        let err = parse_game(
            "{\"type\":\"polymatrix\",\"action_counts\":[2,2],\n\"edges\":[\n{\"from\":0,\"to\":1,\"table\":[[1,2],[3]]}\n]}",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("line 3") && err.contains("row 1"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_path() {
        let err = parse_game(
            r#"{"type":"polymatrix","action_counts":[2,2],"edges":[{"from":0,"to":1,"table":[[1,2,3],[4,5,6]]}]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("edges[0]") && err.contains("expected 2x2"), "{err}");

        let err = parse_game(
            r#"{"type":"polymatrix","action_counts":[2,2],"edges":[{"from":1,"to":1,"table":[[1,2],[3,4]]}]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("neighbor itself"), "{err}");

        let err = parse_game(r#"{"type":"dense","action_counts":[2,2],"utilities":[[1,2,3],[1,2,3,4]]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("player 0"), "{err}");

        assert!(parse_game(r#"{"type":"extensive"}"#).is_err());
        assert!(parse_game(r#"{"type":"dense","action_counts":[2]}"#).is_err());
        assert!(parse_game(r#"{"type":"polymatrix","action_counts":[2],"utilities":[[1,2]]}"#).is_err());
        let empty = parse_game(r#"{"type":"polymatrix","action_counts":[2,2]}"#).unwrap();
        assert_eq!(empty.player_count(), 2);
    }
}
