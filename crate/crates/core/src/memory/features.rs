//! Hand-made frame descriptors for comparing screenshots.
//!
//! Layout (64 values): 4 hud gauges, then three 16-cell occupancy grids over
//! a 4×4 partition of the viewport (player, enemies, scenery and items), then
//! 12 telegraph bits. Each occupancy grid spreads every glyph bilinearly over
//! the four nearest partition centres, so a one-cell move changes the vector
//! a little instead of flipping a bucket. The tick is not used.

use serde::{Deserialize, Serialize};
use varp_arena::Frame;

use crate::perception::bundled_legend;

pub const FEATURE_DIM: usize = 64;
const GRID: usize = 4;
const TELEGRAPH_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn cosine(&self, other: &FeatureVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn splat(block: &mut [f64], x: usize, y: usize, w: usize, h: usize) {
    let u = ((x as f64 + 0.5) / w as f64 * GRID as f64 - 0.5).clamp(0.0, (GRID - 1) as f64);
    let v = ((y as f64 + 0.5) / h as f64 * GRID as f64 - 0.5).clamp(0.0, (GRID - 1) as f64);
    let (u0, v0) = (u.floor() as usize, v.floor() as usize);
    let (u1, v1) = ((u0 + 1).min(GRID - 1), (v0 + 1).min(GRID - 1));
    let (fu, fv) = (u - u0 as f64, v - v0 as f64);
    block[v0 * GRID + u0] += (1.0 - fu) * (1.0 - fv);
    block[v0 * GRID + u1] += fu * (1.0 - fv);
    block[v1 * GRID + u0] += (1.0 - fu) * fv;
    block[v1 * GRID + u1] += fu * fv;
}

fn unit(block: &mut [f64]) {
    let n = block.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        block.iter_mut().for_each(|v| *v /= n);
    }
}

pub fn frame_features(frame: &Frame) -> FeatureVector {
    let legend = bundled_legend();
    let hud = &frame.hud;
    let mut values = vec![
        hud.hp_fraction,
        f64::from(hud.heal_charges) / 5.0,
        f64::from(hud.heavy_charge) / 3.0,
        if hud.spell_ready { 1.0 } else { 0.0 },
    ];
    let (w, h) = (frame.width().max(1), frame.height().max(1));
    let mut player = [0.0; GRID * GRID];
    let mut enemies = [0.0; GRID * GRID];
    let mut objects = [0.0; GRID * GRID];
    let mut bits = [0.0; TELEGRAPH_BITS];
    for (y, row) in frame.viewport.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            match ch {
                '@' => splat(&mut player, x, y, w, h),
                '*' | '$' | 'T' | '~' | '#' => splat(&mut objects, x, y, w, h),
                c if legend.enemies.contains_key(&c) => splat(&mut enemies, x, y, w, h),
                c if legend.telegraphs.contains_key(&c) => bits[c as usize % TELEGRAPH_BITS] = 1.0,
                _ => {}
            }
        }
    }
    for block in [&mut player, &mut enemies, &mut objects] {
        unit(block);
        values.extend_from_slice(block);
    }
    values.extend_from_slice(&bits);
    debug_assert_eq!(values.len(), FEATURE_DIM);
    unit(&mut values);
    FeatureVector { values }
}
