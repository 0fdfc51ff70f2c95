"""Regenerates crates/arena/assets/arena.toml (maps are authored here)."""
from pathlib import Path

HEADER = '''# Arena configuration. Map legend is documented in crates/arena/src/config.rs.
version = 1

[tuning]
player_max_hp = 100
heal_amount = 30
heal_charges = 3
max_heal_charges = 5
light_damage = 8
heavy_damage = 20
light_hits_per_heavy_charge = 2
max_heavy_charge = 3
immobilize_freeze_ticks = 12
immobilize_cooldown_ticks = 60
immobilize_range = 3
aggro_range = 6
enemy_move_interval = 2
viewport_width = 48
viewport_height = 24

[tuning.costs]
light_attack = 3
heavy_attack = 6
dodge = 2
restore_health = 4
cast_immobilize = 2
move_step = 1
interact = 2
'''

# (archetype, glyph, hp, idle lo, idle hi, attack chance, patterns)
# pattern: (label, telegraph, [(offset, damage, reach)], recovery, cue, description, symbol, weight)
ARCHETYPES = [
    ("Erlang", "L", 40, 8, 12, 0.5, [
        ("slow_sweep", 4, [(0, 6, 1)], 6, "lift_spear", "lifting the spear overhead", "⌒", 1),
    ]),
    ("WolfScout", "w", 48, 5, 9, 0.6, [
        ("lunge", 2, [(0, 8, 1)], 4, "crouch", "crouching low before a lunge", "➶", 1),
    ]),
    ("WolfStalwart", "W", 64, 5, 9, 0.6, [
        ("shield_bash", 2, [(0, 10, 1)], 5, "raise_shield", "raising the shield", "⊓", 1),
    ]),
    ("WolfSwornsword", "S", 64, 5, 9, 0.6, [
        ("double_slash", 2, [(0, 8, 1), (2, 8, 1)], 5, "draw_blade", "drawing the blade back", "≫", 1),
    ]),
    ("WolfSoldier", "O", 72, 5, 9, 0.6, [
        ("spear_thrust", 2, [(0, 10, 2)], 4, "level_spear", "levelling the spear", "⇥", 1),
    ]),
    ("Croaky", "C", 72, 5, 9, 0.6, [
        ("tongue_lash", 2, [(0, 8, 2)], 4, "puff_cheeks", "puffing up the cheeks", "≈", 2),
        ("belly_slam", 3, [(0, 12, 1)], 6, "rear_up", "rearing up on the hind legs", "◎", 1),
    ]),
    ("CrowDiviner", "V", 120, 4, 7, 0.7, [
        ("feather_volley", 1, [(0, 10, 2), (3, 10, 2)], 6, "spread_wings", "spreading the wings", "⋔", 2),
        ("dive", 2, [(0, 16, 1)], 5, "rise_up", "rising into the air", "⩔", 1),
    ]),
    ("Bullguard", "B", 200, 3, 6, 0.8, [
        ("charge_forward", 1, [(0, 22, 3)], 8, "lower_axe", "lowering the axe for a charge", "➤", 1),
        ("triple_chop", 1, [(0, 14, 1), (2, 14, 1), (6, 14, 1)], 8, "raise_weapon", "raising up his weapon", "⩓", 2),
    ]),
    ("WanderingWight", "Y", 260, 3, 5, 0.85, [
        ("head_slam", 1, [(0, 25, 1)], 6, "tilt_head", "tilting the giant head back", "⊗", 1),
        ("spirit_burst", 1, [(0, 12, 2), (1, 12, 2), (3, 12, 2), (5, 12, 2)], 6, "glow", "glowing with spirit fire", "✺", 1),
    ]),
]

ARENA = """\
########################
#......................#
#..T.............T.....#
#......................#
#.@.......E............#
#.@....................#
#.@....................#
#......................#
#..T..........~~.......#
#.............~~.......#
#......................#
########################
"""

GATHER = """\
####################
#..................#
#..T...........T...#
#..................#
#.@.........*......#
#..................#
#..~~..............#
####################
"""

OPEN = GATHER.replace("*", "$")


def maze():
    w, h = 96, 48
    g = [["." for _ in range(w)] for _ in range(h)]
    for x in range(w):
        g[0][x] = g[h - 1][x] = "#"
    for y in range(h):
        g[y][0] = g[y][w - 1] = "#"
    # invisible walls with alternating gaps: east, west, east, west
    for wy, gap in [(38, range(86, 92)), (28, range(4, 10)), (18, range(86, 92)), (9, range(4, 10))]:
        for x in range(1, w - 1):
            if x not in gap:
                g[wy][x] = "x"
    # landmarks so each screen looks different
    trees = [(12, 42), (30, 45), (60, 43), (75, 41), (20, 33), (40, 31), (66, 34), (82, 30),
             (15, 22), (33, 20), (55, 25), (70, 21), (25, 12), (45, 14), (65, 11), (85, 13),
             (30, 4), (50, 6), (70, 3), (10, 5)]
    for x, y in trees:
        g[y][x] = "T"
    for x, y in [(40, 44), (41, 44), (52, 36), (53, 36), (36, 24), (37, 24), (58, 15), (59, 15)]:
        g[y][x] = "~"
    for x, y in [(6, 44), (6, 45), (7, 43)]:
        g[y][x] = "@"
    g[4][80] = "G"
    return "\n".join("".join(r) for r in g) + "\n"


TASKS = [
    (1, "Guidance", "Defeat Erlang, the Sacred Divinty", "easy", "combat", 3000, "Erlang", ARENA),
    (2, "Combat 1", "Defeat WolfScout", "easy", "combat", 3000, "WolfScout", ARENA),
    (3, "Gather", "Gather", "easy", "gather", 600, None, GATHER),
    (4, "Combat 2", "Defeat WolfStalwart", "easy", "combat", 3000, "WolfStalwart", ARENA),
    (5, "Combat 3", "Defeat WolfSwornsword", "easy", "combat", 3000, "WolfSwornsword", ARENA),
    (6, "Open", "Open", "easy", "open", 600, None, OPEN),
    (7, "Combat 4", "Defeat WolfSoldier", "easy", "combat", 3000, "WolfSoldier", ARENA),
    (8, "Combat 5", "Defeat Croaky", "easy", "combat", 3000, "Croaky", ARENA),
    (9, "Combat 6", "Defeat Crow Diviner", "middle", "combat", 3000, "CrowDiviner", ARENA),
    (10, "Combat 7", "Defeat Bullguard", "hard", "combat", 3000, "Bullguard", ARENA),
    (11, "Combat 8", "Defeat Wandering Wight", "very_hard", "combat", 3000, "WanderingWight", ARENA),
    (12, "Move", "Autonomous Navigation", "very_hard", "navigate", 1500, "Bullguard", None),
]


def main():
    out = [HEADER]
    for name, glyph, hp, lo, hi, chance, pats in ARCHETYPES:
        out.append(f'\n[[archetypes]]\narchetype = "{name}"\nglyph = "{glyph}"\nhp = {hp}\n'
                   f'idle_ticks = [{lo}, {hi}]\nattack_chance = {chance}\n')
        for label, tel, hits, rec, cue, desc, sym, weight in pats:
            out.append(f'\n[[archetypes.patterns]]\nlabel = "{label}"\ntelegraph_ticks = {tel}\n'
                       f'recovery_ticks = {rec}\ncue = "{cue}"\ndescription = "{desc}"\n'
                       f'symbol = "{sym}"\nweight = {weight}\nhit_windows = [\n')
            for off, dmg, reach in hits:
                out.append(f'  {{ offset_ticks = {off}, damage_hp = {dmg}, reach_cells = {reach} }},\n')
            out.append("]\n")
    for tid, name, desc, diff, kind, budget, enemy, mp in TASKS:
        mp = mp if mp is not None else maze()
        out.append(f'\n[[tasks]]\nid = {tid}\nname = "{name}"\ndescription = "{desc}"\n'
                   f'difficulty = "{diff}"\nkind = "{kind}"\ntick_budget = {budget}\n')
        if enemy:
            out.append(f'enemy = "{enemy}"\n')
        out.append(f"map = '''\n{mp}'''\n")
    path = Path(__file__).resolve().parent.parent / "crates/arena/assets/arena.toml"
    path.write_text("".join(out), encoding="utf-8")


if __name__ == "__main__":
    main()
