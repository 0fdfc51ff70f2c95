//! Reading a frame: where the player, enemies, items and wind-up glyphs are.
//! Coordinates are viewport cells, never map cells.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use varp_arena::{Archetype, Direction, Frame, ItemKind, Legend, TelegraphInfo, Vec2};

/// Legend of the bundled arena configuration.
pub fn bundled_legend() -> &'static Legend {
    static L: OnceLock<Legend> = OnceLock::new();
    L.get_or_init(Legend::bundled)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEnemy {
    pub archetype: Archetype,
    pub cell: Vec2,
    pub hp_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTelegraph {
    pub info: TelegraphInfo,
    pub cell: Vec2,
    /// Strike count printed after the symbol.
    pub hit_count: usize,
    /// Index into `Scene::enemies` of the enemy winding up.
    pub owner: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub player: Option<Vec2>,
    pub enemies: Vec<SceneEnemy>,
    pub telegraphs: Vec<SceneTelegraph>,
    /// Unclaimed items: gatherables and closed chests.
    pub items: Vec<(Vec2, ItemKind)>,
    pub width: i32,
    pub height: i32,
    grid: Vec<Vec<char>>,
}

impl Scene {
    pub fn scan(frame: &Frame, legend: &Legend) -> Scene {
        let grid: Vec<Vec<char>> = frame.viewport.iter().map(|r| r.chars().collect()).collect();
        let mut scene = Scene {
            width: frame.width() as i32,
            height: frame.height() as i32,
            ..Scene::default()
        };
        for (y, row) in grid.iter().enumerate() {
            for (x, &ch) in row.iter().enumerate() {
                let cell = Vec2::new(x as i32, y as i32);
                if ch == '@' {
                    scene.player = Some(cell);
                } else if ch == '*' {
                    scene.items.push((cell, ItemKind::Gatherable));
                } else if ch == '$' {
                    scene.items.push((cell, ItemKind::Chest));
                } else if let Some(a) = legend.enemies.get(&ch) {
                    let hp = frame.hud.enemy_bars.get(scene.enemies.len()).map(|b| b.fraction);
                    scene.enemies.push(SceneEnemy { archetype: *a, cell, hp_fraction: hp });
                } else if let Some(info) = legend.telegraphs.get(&ch) {
                    let digit = row.get(x + 1).and_then(|d| d.to_digit(10));
                    if let Some(d) = digit {
                        scene.telegraphs.push(SceneTelegraph {
                            info: info.clone(),
                            cell,
                            hit_count: d as usize,
                            owner: None,
                        });
                    }
                }
            }
        }
        for t in &mut scene.telegraphs {
            t.owner = scene
                .enemies
                .iter()
                .enumerate()
                .filter(|(_, e)| e.archetype == t.info.archetype)
                .min_by_key(|(i, e)| (e.cell.manhattan(t.cell).min(e.cell.manhattan(Vec2::new(t.cell.x + 1, t.cell.y))), *i))
                .map(|(i, _)| i);
        }
        scene.grid = grid;
        scene
    }

    pub fn char_at(&self, c: Vec2) -> char {
        if c.x < 0 || c.y < 0 {
            return ' ';
        }
        self.grid
            .get(c.y as usize)
            .and_then(|r| r.get(c.x as usize))
            .copied()
            .unwrap_or(' ')
    }

    /// Whether the cell looks walkable. Invisible walls are, by design, not seen.
    pub fn looks_open(&self, c: Vec2) -> bool {
        matches!(self.char_at(c), '.' | '*' | '_')
    }

    pub fn nearest_enemy(&self) -> Option<&SceneEnemy> {
        let p = self.player?;
        self.enemies.iter().min_by_key(|e| e.cell.manhattan(p))
    }

    pub fn telegraph_of(&self, enemy_index: usize) -> Option<&SceneTelegraph> {
        self.telegraphs.iter().find(|t| t.owner == Some(enemy_index))
    }

    pub fn nearest_item(&self) -> Option<(Vec2, ItemKind)> {
        let p = self.player?;
        self.items.iter().copied().min_by_key(|(c, _)| c.manhattan(p))
    }

    /// First step toward `target` that does not walk into something visible,
    /// trying the dominant axis first.
    pub fn step_toward(&self, target: Vec2) -> Option<Direction> {
        let p = self.player?;
        let primary = p.direction_to(target)?;
        let dx = target.x - p.x;
        let dy = target.y - p.y;
        let secondary = match primary {
            Direction::E | Direction::W if dy > 0 => Some(Direction::S),
            Direction::E | Direction::W if dy < 0 => Some(Direction::N),
            Direction::N | Direction::S if dx > 0 => Some(Direction::E),
            Direction::N | Direction::S if dx < 0 => Some(Direction::W),
            _ => None,
        };
        std::iter::once(primary)
            .chain(secondary)
            .find(|d| self.looks_open(p.step(*d)))
            .or(Some(primary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use varp_arena::world::ActivePattern;
    use varp_arena::{new_world, render_frame};

    #[test]
    fn scan_finds_everything() {
        let mut w = new_world(10, 2).unwrap();
        let p = w.player.position;
        w.enemies[0].position = Vec2::new(p.x + 1, p.y);
        w.enemies[0].active_pattern = Some(ActivePattern { index: 1, phase_tick: 0 });
        let scene = Scene::scan(&render_frame(&w), &Legend::bundled());
        assert!(scene.player.is_some());
        assert_eq!(scene.enemies.len(), 1);
        assert_eq!(scene.enemies[0].hp_fraction, Some(1.0));
        assert_eq!(scene.telegraphs.len(), 1);
        assert_eq!(scene.telegraphs[0].info.label, "triple_chop");
        assert_eq!(scene.telegraphs[0].hit_count, 3);
        assert_eq!(scene.telegraphs[0].owner, Some(0));
    }
}
