use super::FieldStack;
use crate::gridmap::{Cell, SemanticRegion};

#[derive(Debug, Clone, PartialEq)]
pub struct AscentOutcome {
    pub reached: bool,
    /// Visited cells, starting with the start cell.
    pub path: Vec<Cell>,
}

/// Discrete ascent on the score potential `log u`, from the coarsest level
/// down to the finest.
///
/// At each level the walker repeatedly moves to the 8-neighbor with the
/// largest strictly higher `log u` (diagonals only when both adjacent orthogonal
/// cells are free), and descends a level when none exists. Floored cells form
/// flat plateaus, so a start the heat never reached stays put.
pub fn annealed_ascent(stack: &FieldStack, start: Cell, goals: &[SemanticRegion]) -> AscentOutcome {
    let in_goal = |c: Cell| goals.iter().any(|g| g.contains(c));
    let mut path = vec![start];
    let mut cur = start;
    let field = stack.level(1);
    let map = field.map().clone();
    if !map.is_free_cell(start) {
        return AscentOutcome { reached: false, path };
    }
    for t in (1..=stack.len()).rev() {
        let field = stack.level(t);
        loop {
            if in_goal(cur) {
                return AscentOutcome { reached: true, path };
            }
            let here = field.log_at(cur);
            let mut best: Option<(f64, Cell)> = None;
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let Some(next) = offset(cur, dc, dr) else { continue };
                    if !map.is_free_cell(next) {
                        continue;
                    }
                    if dr != 0 && dc != 0 {
                        let side_a = offset(cur, dc, 0).is_some_and(|c| map.is_free_cell(c));
                        let side_b = offset(cur, 0, dr).is_some_and(|c| map.is_free_cell(c));
                        if !(side_a && side_b) {
                            continue;
                        }
                    }
                    let v = field.log_at(next);
                    if v > here && best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, next));
                    }
                }
            }
            match best {
                Some((_, next)) => {
                    cur = next;
                    path.push(cur);
                }
                None => break,
            }
        }
    }
    AscentOutcome {
        reached: in_goal(cur),
        path,
    }
}

fn offset(c: Cell, dc: isize, dr: isize) -> Option<Cell> {
    let col = c.col.checked_add_signed(dc)?;
    let row = c.row.checked_add_signed(dr)?;
    Some(Cell::new(col, row))
}
