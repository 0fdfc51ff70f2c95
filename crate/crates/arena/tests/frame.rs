use varp_arena::world::ActivePattern;
use varp_arena::*;

fn telegraphing_bullguard(seed: u64) -> WorldState {
    let mut w = new_world(10, seed).unwrap();
    let p = w.player.position;
    w.enemies[0].position = Vec2::new(p.x + 1, p.y);
    let index = w.config().archetype(Archetype::Bullguard).unwrap().patterns.iter()
        .position(|d| d.pattern.label == "triple_chop").unwrap();
    w.enemies[0].active_pattern = Some(ActivePattern { index, phase_tick: 0 });
    w
}

fn find(frame: &Frame, needle: &str) -> Option<(usize, usize)> {
    frame.viewport.iter().enumerate().find_map(|(y, row)| {
        let chars: Vec<char> = row.chars().collect();
        let pat: Vec<char> = needle.chars().collect();
        (0..chars.len().saturating_sub(pat.len() - 1))
            .find(|&x| chars[x..x + pat.len()] == pat[..])
            .map(|x| (x, y))
    })
}

#[test]
fn hp_fraction_reads_half() {
    let mut w = new_world(2, 0).unwrap();
    w.player.hp = 50;
    assert_eq!(render_frame(&w).hud.hp_fraction, 0.5);
}

#[test]
fn triple_chop_glyph_sits_next_to_bullguard() {
    let w = telegraphing_bullguard(3);
    let f = render_frame(&w);
    let (gx, gy) = find(&f, "⩓3").expect("telegraph glyph");
    let (bx, by) = find(&f, "B").unwrap();
    let near = |x: usize, y: usize| x.abs_diff(bx) + y.abs_diff(by) == 1;
    assert!(near(gx, gy) || near(gx + 1, gy));
    assert!(find(&f, "@").is_some(), "glyph must not hide the player");
}

#[test]
fn telegraph_visible_for_whole_wind_up_only() {
    let mut w = new_world(9, 0).unwrap();
    let p = w.player.position;
    w.enemies[0].position = Vec2::new(p.x + 1, p.y);
    w.enemies[0].idle_until = 10_000;
    let index = w.config().archetype(Archetype::CrowDiviner).unwrap().patterns.iter()
        .position(|d| d.pattern.label == "dive").unwrap();
    w.enemies[0].active_pattern = Some(ActivePattern { index, phase_tick: 0 });
    assert!(find(&render_frame(&w), "⩔1").is_some());
    execute_atomic(&mut w, AtomicCommand::Move(Direction::W));
    assert_eq!(w.tick, 1);
    assert!(find(&render_frame(&w), "⩔1").is_some());
    execute_atomic(&mut w, AtomicCommand::Move(Direction::W));
    assert!(find(&render_frame(&w), "⩔1").is_none());
}

#[test]
fn equal_worlds_render_identically() {
    let a = telegraphing_bullguard(9);
    let b = telegraphing_bullguard(9);
    assert_eq!(render_frame(&a).to_text(), render_frame(&b).to_text());
    assert_eq!(render_frame(&a).to_png().unwrap(), render_frame(&b).to_png().unwrap());
}

#[test]
fn text_form_round_trips() {
    let mut w = telegraphing_bullguard(1);
    w.player.hp = 37;
    w.notices.push("Health restored".into());
    let f = render_frame(&w);
    let text = f.to_text();
    assert!(text.starts_with("#frame v1\n"));
    assert_eq!(Frame::parse_text(&text).unwrap(), f);
    assert!(Frame::parse_text(&text.replace("#frame v1", "#frame v2")).is_err());
    assert!(Frame::parse_text(&text[..text.len() - 10]).is_err());
}

#[test]
fn png_decodes_to_expected_size() {
    let f = render_frame(&new_world(2, 0).unwrap());
    let png = f.to_png().unwrap();
    let img = image::load_from_memory(&png).unwrap();
    assert_eq!(img.width(), 48 * 8);
    assert_eq!(img.height(), 26 * 8);
}

#[test]
fn invisible_walls_never_render() {
    let w = new_world(12, 0).unwrap();
    let f = render_frame(&w);
    assert_eq!(f.width(), 48);
    assert_eq!(f.height(), 24);
    assert!(f.viewport.iter().all(|r| !r.contains('x')));
    assert!(f.hud.enemy_bars.is_empty(), "goal is on another screen");
}

#[test]
fn legend_covers_every_glyph() {
    let legend = Legend::bundled();
    assert_eq!(legend.enemies.len(), 9);
    let chop = legend.telegraphs.values().find(|t| t.label == "triple_chop").unwrap();
    assert_eq!(chop.archetype, Archetype::Bullguard);
    assert_eq!(chop.hit_count, 3);
    assert_eq!(chop.description, "raising up his weapon");
}
