//! Frames: the only thing an agent ever sees.
//!
//! The viewport is a flip-screen camera: the map is cut into screens of
//! `viewport_width x viewport_height` cells and the frame shows the screen
//! holding the player. Invisible walls render as floor and the RNG never
//! reaches the frame.
//!
//! Telegraph glyphs are two characters, the pattern symbol followed by its hit
//! count (`⩓3` for a three-hit chop), drawn beside the enemy for the whole
//! wind-up. Placement tries above, below, left, then right of the enemy and
//! skips any spot that would cover the player.

use std::collections::BTreeMap;
use std::io::Cursor;

use image::{ImageFormat, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::config::{ArenaConfig, ItemKind};
use crate::error::ArenaError;
use crate::geometry::Vec2;
use crate::pattern::Archetype;
use crate::task::TaskStatus;
use crate::world::WorldState;

pub const FRAME_TEXT_VERSION: u32 = 1;
pub const TASK_COMPLETE_NOTICE: &str = "TASK COMPLETE";
/// Raster cell edge in pixels.
pub const CELL_PX: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyBar {
    pub name: String,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hud {
    pub hp_fraction: f64,
    pub heal_charges: u8,
    pub heavy_charge: u8,
    pub spell_ready: bool,
    /// Health bars of enemies on screen, in viewport reading order.
    pub enemy_bars: Vec<EnemyBar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tick: u64,
    /// Rows of the viewport, each exactly `width` characters.
    pub viewport: Vec<String>,
    pub hud: Hud,
    pub notices: Vec<String>,
}

pub fn render_frame(world: &WorldState) -> Frame {
    let cfg = world.config();
    let (vw, vh) = (cfg.tuning.viewport_width as i32, cfg.tuning.viewport_height as i32);
    let p = world.player.position;
    let origin = Vec2::new(p.x.div_euclid(vw) * vw, p.y.div_euclid(vh) * vh);
    let mut grid = vec![vec![' '; vw as usize]; vh as usize];
    let local = |c: Vec2| -> Option<(usize, usize)> {
        let (lx, ly) = (c.x - origin.x, c.y - origin.y);
        (lx >= 0 && ly >= 0 && lx < vw && ly < vh).then_some((lx as usize, ly as usize))
    };

    for y in origin.y..(origin.y + vh).min(world.height) {
        for x in origin.x..(origin.x + vw).min(world.width) {
            let c = Vec2::new(x, y);
            let ch = world.obstacles.get(&c).copied().unwrap_or('.');
            grid[(y - origin.y) as usize][(x - origin.x) as usize] = ch;
        }
    }
    for item in &world.items {
        if let Some((x, y)) = local(item.position) {
            grid[y][x] = match (item.kind, item.taken) {
                (ItemKind::Gatherable, false) => '*',
                (ItemKind::Gatherable, true) => '.',
                (ItemKind::Chest, false) => '$',
                (ItemKind::Chest, true) => '_',
            };
        }
    }
    let mut bars = Vec::new();
    let mut on_screen = Vec::new();
    for (idx, e) in world.enemies.iter().enumerate() {
        if !e.alive() {
            continue;
        }
        if let Some((x, y)) = local(e.position) {
            let glyph = cfg.archetype(e.archetype).map_or('?', |d| d.glyph);
            grid[y][x] = glyph;
            on_screen.push((y, x, idx));
        }
    }
    on_screen.sort_unstable();
    for &(_, _, idx) in &on_screen {
        let e = &world.enemies[idx];
        bars.push(EnemyBar { name: e.archetype.name().to_string(), fraction: f64::from(e.hp) / f64::from(e.max_hp) });
    }
    let player_cell = local(p);
    if let Some((x, y)) = player_cell {
        grid[y][x] = '@';
    }
    for &(ey, ex, idx) in &on_screen {
        let Some(def) = world.telegraph(idx) else { continue };
        let digit = char::from_digit(def.pattern.hit_count() as u32, 10).unwrap_or('9');
        let (ex, ey) = (ex as i32, ey as i32);
        let spots = [(ex, ey - 1), (ex, ey + 1), (ex - 2, ey), (ex + 1, ey)];
        for (sx, sy) in spots {
            let cells = [(sx, sy), (sx + 1, sy)];
            let fits = cells.iter().all(|&(cx, cy)| {
                cx >= 0
                    && cy >= 0
                    && cx < vw
                    && cy < vh
                    && Some((cx as usize, cy as usize)) != player_cell
                    && !(cx == ex && cy == ey)
            });
            if fits {
                grid[sy as usize][sx as usize] = def.symbol;
                grid[sy as usize][sx as usize + 1] = digit;
                break;
            }
        }
    }

    let mut notices = world.notices.clone();
    if world.status() == TaskStatus::Success {
        notices.push(TASK_COMPLETE_NOTICE.to_string());
    }
    Frame {
        tick: world.tick,
        viewport: grid.into_iter().map(|row| row.into_iter().collect()).collect(),
        hud: Hud {
            hp_fraction: f64::from(world.player.hp) / f64::from(world.player.max_hp),
            heal_charges: world.player.heal_charges,
            heavy_charge: world.player.heavy_charge,
            spell_ready: world.tick >= world.player.immobilize_ready_at,
            enemy_bars: bars,
        },
        notices,
    }
}

impl Frame {
    pub fn width(&self) -> usize {
        self.viewport.first().map_or(0, |r| r.chars().count())
    }

    pub fn height(&self) -> usize {
        self.viewport.len()
    }

    pub fn cell(&self, x: usize, y: usize) -> Option<char> {
        self.viewport.get(y)?.chars().nth(x)
    }

    pub fn has_notice(&self, text: &str) -> bool {
        self.notices.iter().any(|n| n == text)
    }

    /// Line-oriented text form. Viewport rows are prefixed with `|` so leading
    /// spaces survive; floats use the shortest round-tripping decimal.
    pub fn to_text(&self) -> String {
        let mut out = format!("#frame v{FRAME_TEXT_VERSION}\ntick {}\n", self.tick);
        let h = &self.hud;
        out.push_str(&format!(
            "hud hp={} heal={} heavy={} spell={}\n",
            h.hp_fraction,
            h.heal_charges,
            h.heavy_charge,
            if h.spell_ready { "ready" } else { "cooldown" }
        ));
        for bar in &h.enemy_bars {
            out.push_str(&format!("bar {} {}\n", bar.name, bar.fraction));
        }
        for n in &self.notices {
            out.push_str(&format!("notice {n}\n"));
        }
        out.push_str(&format!("view {}x{}\n", self.width(), self.height()));
        for row in &self.viewport {
            out.push('|');
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Frame, ArenaError> {
        let bad = |m: &str| ArenaError::FrameText(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        if header != format!("#frame v{FRAME_TEXT_VERSION}") {
            return Err(bad(&format!("unsupported header `{header}`")));
        }
        let tick = lines
            .next()
            .and_then(|l| l.strip_prefix("tick "))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("missing tick line"))?;
        let hud_line = lines
            .next()
            .and_then(|l| l.strip_prefix("hud "))
            .ok_or_else(|| bad("missing hud line"))?;
        let mut fields = BTreeMap::new();
        for kv in hud_line.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("hud field without `=`"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("hud missing {k}")));
        let mut hud = Hud {
            hp_fraction: get("hp")?.parse().map_err(|_| bad("hud hp"))?,
            heal_charges: get("heal")?.parse().map_err(|_| bad("hud heal"))?,
            heavy_charge: get("heavy")?.parse().map_err(|_| bad("hud heavy"))?,
            spell_ready: match get("spell")? {
                "ready" => true,
                "cooldown" => false,
                _ => return Err(bad("hud spell")),
            },
            enemy_bars: Vec::new(),
        };
        let mut notices = Vec::new();
        let (w, h) = loop {
            let line = lines.next().ok_or_else(|| bad("missing view line"))?;
            if let Some(rest) = line.strip_prefix("bar ") {
                let (name, frac) = rest.rsplit_once(' ').ok_or_else(|| bad("bar line"))?;
                hud.enemy_bars.push(EnemyBar {
                    name: name.to_string(),
                    fraction: frac.parse().map_err(|_| bad("bar fraction"))?,
                });
            } else if let Some(n) = line.strip_prefix("notice ") {
                notices.push(n.to_string());
            } else if let Some(dims) = line.strip_prefix("view ") {
                let (w, h) = dims.split_once('x').ok_or_else(|| bad("view dims"))?;
                let w: usize = w.parse().map_err(|_| bad("view width"))?;
                let h: usize = h.parse().map_err(|_| bad("view height"))?;
                break (w, h);
            } else {
                return Err(bad(&format!("unexpected line `{line}`")));
            }
        };
        let mut viewport = Vec::with_capacity(h);
        for _ in 0..h {
            let row = lines
                .next()
                .and_then(|l| l.strip_prefix('|'))
                .ok_or_else(|| bad("short viewport"))?;
            if row.chars().count() != w {
                return Err(bad("viewport row width mismatch"));
            }
            viewport.push(row.to_string());
        }
        if lines.next().is_some() {
            return Err(bad("trailing data after viewport"));
        }
        Ok(Frame { tick, viewport, hud, notices })
    }

    /// PNG raster: one `CELL_PX` square per cell plus a HUD strip of two cell
    /// rows at the bottom. Byte-stable for a given frame.
    pub fn to_png(&self) -> Result<Vec<u8>, ArenaError> {
        let (w, h) = (self.width() as u32, self.height() as u32);
        let width = w.max(1) * CELL_PX;
        let height = (h + 2) * CELL_PX;
        let mut img = RgbImage::from_pixel(width, height, Rgb([0, 0, 0]));
        for (y, row) in self.viewport.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                let color = cell_color(ch);
                for py in 0..CELL_PX {
                    for px in 0..CELL_PX {
                        let border = px == 0 || py == 0;
                        let c = if border && ch != ' ' { dim(color) } else { color };
                        img.put_pixel(x as u32 * CELL_PX + px, y as u32 * CELL_PX + py, c);
                    }
                }
            }
        }
        let bar_y = h * CELL_PX;
        let hp_px = (self.hud.hp_fraction.clamp(0.0, 1.0) * f64::from(width)).round() as u32;
        for py in 0..CELL_PX {
            for px in 0..width {
                let c = if px < hp_px { Rgb([200, 40, 40]) } else { Rgb([40, 20, 20]) };
                img.put_pixel(px, bar_y + py, c);
            }
        }
        let pips = [
            (u32::from(self.hud.heal_charges), Rgb([60, 200, 90])),
            (u32::from(self.hud.heavy_charge), Rgb([230, 180, 40])),
            (u32::from(self.hud.spell_ready), Rgb([90, 140, 240])),
        ];
        let mut px = 0;
        for (n, color) in pips {
            for _ in 0..n {
                for dy in 1..CELL_PX - 1 {
                    for dx in 1..CELL_PX - 1 {
                        if px + dx < width {
                            img.put_pixel(px + dx, bar_y + CELL_PX + dy, color);
                        }
                    }
                }
                px += CELL_PX;
            }
            px += CELL_PX;
        }
        let mut buf = Cursor::new(Vec::new());
        img.write_to(&mut buf, ImageFormat::Png).map_err(|e| ArenaError::Raster(e.to_string()))?;
        Ok(buf.into_inner())
    }
}

fn dim(c: Rgb<u8>) -> Rgb<u8> {
    Rgb([c[0] / 2, c[1] / 2, c[2] / 2])
}

fn cell_color(ch: char) -> Rgb<u8> {
    match ch {
        ' ' => Rgb([0, 0, 0]),
        '.' => Rgb([70, 60, 50]),
        '#' => Rgb([120, 120, 120]),
        'T' => Rgb([30, 110, 40]),
        '~' => Rgb([40, 80, 170]),
        '@' => Rgb([250, 250, 250]),
        '*' => Rgb([240, 220, 60]),
        '$' => Rgb([170, 110, 40]),
        '_' => Rgb([100, 70, 30]),
        c if c.is_ascii_digit() => Rgb([255, 120, 0]),
        c if c.is_ascii_alphabetic() => Rgb([210, 50, 200]),
        // telegraph symbols and anything else
        c => {
            let v = c as u32;
            Rgb([255, (v % 97) as u8 + 60, (v % 31) as u8])
        }
    }
}

/// What a telegraph symbol announces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelegraphInfo {
    pub archetype: Archetype,
    pub label: String,
    pub cue: String,
    pub description: String,
    pub hit_count: usize,
}

/// Visual vocabulary of the game: which glyph is which enemy and which
/// telegraph symbol is which pattern. Known to players from the game itself,
/// so agents may use it without peeking at world state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Legend {
    pub enemies: BTreeMap<char, Archetype>,
    pub telegraphs: BTreeMap<char, TelegraphInfo>,
}

impl Legend {
    pub fn from_config(cfg: &ArenaConfig) -> Self {
        let mut enemies = BTreeMap::new();
        let mut telegraphs = BTreeMap::new();
        for def in &cfg.archetypes {
            enemies.insert(def.glyph, def.archetype);
            for p in &def.patterns {
                telegraphs.insert(
                    p.symbol,
                    TelegraphInfo {
                        archetype: def.archetype,
                        label: p.pattern.label.clone(),
                        cue: p.cue.clone(),
                        description: p.description.clone(),
                        hit_count: p.pattern.hit_count(),
                    },
                );
            }
        }
        Self { enemies, telegraphs }
    }

    pub fn bundled() -> Self {
        Self::from_config(&ArenaConfig::bundled())
    }
}
