//! The 15 dancer motion programs: closed 16-step loops of king-move
//! displacements, each confined to a 3x3 box around the anchor cell.

pub const NUM_MOTIONS: usize = 15;

pub const MOTION_NAMES: [&str; NUM_MOTIONS] = [
    "circle_cw",
    "circle_ccw",
    "square_cw",
    "square_ccw",
    "up_down",
    "left_right",
    "diag_uldr",
    "diag_urdl",
    "plus_cw",
    "plus_ccw",
    "times_cw",
    "times_ccw",
    "zee",
    "chevron_up",
    "chevron_down",
];

pub fn motion_tokens(id: usize) -> Vec<String> {
    MOTION_NAMES[id].split('_').map(str::to_string).collect()
}

type Step = (i32, i32); // (dx, dy), screen coords: y grows downward

/// Walks `ring` starting at index 0: one step out of the anchor, 14 steps
/// along the ring, one step home.
fn ring_walk(ring: &[Step]) -> [Step; 16] {
    let mut steps = [(0, 0); 16];
    let mut pos = (0, 0);
    steps[0] = ring[0];
    pos = (pos.0 + ring[0].0, pos.1 + ring[0].1);
    for (i, step) in steps.iter_mut().enumerate().take(15).skip(1) {
        let next = ring[i % ring.len()];
        *step = (next.0 - pos.0, next.1 - pos.1);
        pos = next;
    }
    steps[15] = (-pos.0, -pos.1);
    steps
}

fn alternate(a: Step, b: Step) -> [Step; 16] {
    let mut steps = [(0, 0); 16];
    for (i, s) in steps.iter_mut().enumerate() {
        *s = if i % 2 == 0 { a } else { b };
    }
    steps
}

/// Out-and-back arm visits, two laps over four arms.
fn arms(order: [Step; 4]) -> [Step; 16] {
    let mut steps = [(0, 0); 16];
    for lap in 0..2 {
        for (k, arm) in order.iter().enumerate() {
            steps[lap * 8 + 2 * k] = *arm;
            steps[lap * 8 + 2 * k + 1] = (-arm.0, -arm.1);
        }
    }
    steps
}

/// Oscillates between left foot, apex, and right foot via diagonal steps.
/// For an apex above (dy = -1): L->A (1,-1), A->R (1,1), R->A (-1,-1), A->L (-1,1).
fn chevron(apex_dy: i32) -> [Step; 16] {
    let mut steps = [(0, 0); 16];
    steps[0] = (-1, 0); // to the left foot
    let cyc: [Step; 4] = [(1, apex_dy), (1, -apex_dy), (-1, apex_dy), (-1, -apex_dy)];
    for i in 0..14 {
        steps[1 + i] = cyc[i % 4];
    }
    steps[15] = (-1, 0); // home from the right foot
    steps
}

fn zee() -> [Step; 16] {
    let fwd: [Step; 7] = [
        (-1, -1), // top-left
        (1, 0),
        (1, 0), // across the top
        (-1, 1),
        (-1, 1), // the diagonal stroke
        (1, 0),
        (1, 0), // across the bottom
    ];
    let mut steps = [(0, 0); 16];
    steps[..7].copy_from_slice(&fwd);
    for i in 0..7 {
        let s = fwd[6 - i];
        steps[7 + i] = (-s.0, -s.1);
    }
    steps[14] = (0, -1);
    steps[15] = (0, 1);
    steps
}

pub fn motion_program(id: usize) -> [Step; 16] {
    let diamond_cw: [Step; 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let diamond_ccw: [Step; 4] = [(1, 0), (0, -1), (-1, 0), (0, 1)];
    let ring8_cw: [Step; 8] = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];
    let ring8_ccw: [Step; 8] = [
        (1, 0),
        (1, -1),
        (0, -1),
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ];
    match id {
        0 => ring_walk(&diamond_cw),
        1 => ring_walk(&diamond_ccw),
        2 => ring_walk(&ring8_cw),
        3 => ring_walk(&ring8_ccw),
        4 => alternate((0, -1), (0, 1)),
        5 => alternate((-1, 0), (1, 0)),
        6 => alternate((-1, -1), (1, 1)),
        7 => alternate((1, -1), (-1, 1)),
        8 => arms([(0, -1), (1, 0), (0, 1), (-1, 0)]),
        9 => arms([(0, -1), (-1, 0), (0, 1), (1, 0)]),
        10 => arms([(-1, -1), (1, -1), (1, 1), (-1, 1)]),
        11 => arms([(-1, -1), (-1, 1), (1, 1), (1, -1)]),
        12 => zee(),
        13 => chevron(-1),
        14 => chevron(1),
        _ => panic!("motion id {id} out of range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_program_is_a_closed_16_step_loop_inside_the_box() {
        for id in 0..NUM_MOTIONS {
            let steps = motion_program(id);
            assert_eq!(steps.len(), 16);
            let (mut x, mut y) = (0, 0);
            for (t, (dx, dy)) in steps.iter().enumerate() {
                assert!(dx.abs() <= 1 && dy.abs() <= 1, "{id} step {t} not a king move");
                assert!((*dx, *dy) != (0, 0), "{id} step {t} is a stay");
                x += dx;
                y += dy;
                assert!(
                    x.abs() <= 1 && y.abs() <= 1,
                    "{} leaves its box at step {t}: ({x},{y})",
                    MOTION_NAMES[id]
                );
            }
            assert_eq!((x, y), (0, 0), "{} does not return home", MOTION_NAMES[id]);
        }
    }

    #[test]
    fn all_programs_are_pairwise_distinct() {
        for a in 0..NUM_MOTIONS {
            for b in a + 1..NUM_MOTIONS {
                assert_ne!(
                    motion_program(a),
                    motion_program(b),
                    "{} duplicates {}",
                    MOTION_NAMES[a],
                    MOTION_NAMES[b]
                );
            }
        }
    }
}
