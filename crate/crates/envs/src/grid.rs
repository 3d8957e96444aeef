//! Grid substrate and glyph renderer shared by all tasks.

use rand::Rng;

use crate::api::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Ball,
    Key,
    Box,
    Dancer,
    Wall,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Ball => "ball",
            Shape::Key => "key",
            Shape::Box => "box",
            Shape::Dancer => "dancer",
            Shape::Wall => "wall",
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Shape::Ball => 'o',
            Shape::Key => 'k',
            Shape::Box => 'B',
            Shape::Dancer => 'D',
            Shape::Wall => '#',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    Red,
    Green,
    Blue,
    Purple,
    Pink,
    Yellow,
    White,
}

pub const PALETTE: [Color; 7] = [
    Color::Red,
    Color::Green,
    Color::Blue,
    Color::Purple,
    Color::Pink,
    Color::Yellow,
    Color::White,
];

impl Color {
    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [228, 26, 28],
            Color::Green => [77, 175, 74],
            Color::Blue => [55, 126, 184],
            Color::Purple => [152, 78, 163],
            Color::Pink => [247, 129, 191],
            Color::Yellow => [255, 255, 51],
            Color::White => [255, 255, 255],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Purple => "purple",
            Color::Pink => "pink",
            Color::Yellow => "yellow",
            Color::White => "white",
        }
    }

    pub fn random(rng: &mut impl Rng) -> Color {
        PALETTE[rng.gen_range(0..PALETTE.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Obj {
    pub shape: Shape,
    pub color: Color,
}

impl Obj {
    pub fn new(shape: Shape, color: Color) -> Self {
        Obj { shape, color }
    }

    pub fn wall() -> Self {
        Obj::new(Shape::Wall, Color::White)
    }
}

/// Rectangular cell grid with at most one object per cell. The agent pose
/// is tracked by each task, not by the grid.
#[derive(Debug, Clone)]
pub struct Grid {
    pub width: i32,
    pub height: i32,
    cells: Vec<Option<Obj>>,
}

impl Grid {
    pub fn new(width: i32, height: i32) -> Self {
        Grid {
            width,
            height,
            cells: vec![None; (width * height) as usize],
        }
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && x < self.width && y < self.height
    }

    fn idx(&self, x: i32, y: i32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn get(&self, x: i32, y: i32) -> Option<Obj> {
        if self.in_bounds(x, y) {
            self.cells[self.idx(x, y)]
        } else {
            None
        }
    }

    pub fn set(&mut self, x: i32, y: i32, obj: Obj) {
        assert!(self.in_bounds(x, y));
        let i = self.idx(x, y);
        debug_assert!(self.cells[i].is_none(), "cell ({x},{y}) already occupied");
        self.cells[i] = Some(obj);
    }

    pub fn take(&mut self, x: i32, y: i32) -> Option<Obj> {
        let i = self.idx(x, y);
        self.cells[i].take()
    }

    pub fn is_free(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && self.get(x, y).is_none()
    }

    /// All free cells, row-major.
    pub fn free_cells(&self) -> Vec<(i32, i32)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.is_free(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

const WALL_RGB: [u8; 3] = [96, 96, 96];

/// Paints one cell-sized glyph into a planar RGB buffer.
pub fn draw_glyph(
    frame: &mut [u8],
    frame_w: usize,
    frame_h: usize,
    cell_px: usize,
    cx: usize,
    cy: usize,
    obj: Obj,
    half_scale: bool,
) {
    let rgb = if obj.shape == Shape::Wall {
        WALL_RGB
    } else {
        obj.color.rgb()
    };
    let n = cell_px as i32;
    let plane = frame_w * frame_h;
    let mut put = |px: i32, py: i32| {
        let (fx, fy) = (cx * cell_px + px as usize, cy * cell_px + py as usize);
        if fx < frame_w && fy < frame_h {
            let at = fy * frame_w + fx;
            frame[at] = rgb[0];
            frame[plane + at] = rgb[1];
            frame[2 * plane + at] = rgb[2];
        }
    };
    let c = (n - 1) as f32 / 2.0;
    let scale = if half_scale { 0.45 } else { 1.0 };
    for py in 0..n {
        for px in 0..n {
            let dx = (px as f32 - c) / scale;
            let dy = (py as f32 - c) / scale;
            let on = match obj.shape {
                Shape::Wall => true,
                Shape::Ball => dx * dx + dy * dy <= (c - 0.5) * (c - 0.5),
                Shape::Dancer => dx.abs() + dy.abs() <= c,
                Shape::Box => {
                    let b = c - 0.5;
                    let edge = (n as f32 / 5.0).max(1.0);
                    dx.abs() <= b
                        && dy.abs() <= b
                        && (dx.abs() >= b - edge || dy.abs() >= b - edge)
                }
                Shape::Key => {
                    // ring head on top, stem with one tooth below
                    let head = dx * dx + (dy + c * 0.45) * (dy + c * 0.45);
                    let r = c * 0.42;
                    let in_head = head <= r * r && head >= (r * 0.35) * (r * 0.35);
                    let in_stem = dx.abs() <= (n as f32 / 8.0).max(0.8) && dy >= -0.5 && dy <= c - 0.5;
                    let in_tooth =
                        dy >= c * 0.35 && dy <= c * 0.7 && dx >= 0.0 && dx <= c * 0.6;
                    in_head || in_stem || in_tooth
                }
            };
            if on {
                put(px, py);
            }
        }
    }
}

/// Filled square glyph used for the agent.
pub fn draw_agent_square(
    frame: &mut [u8],
    frame_w: usize,
    frame_h: usize,
    cell_px: usize,
    cx: usize,
    cy: usize,
    rgb: [u8; 3],
) {
    let plane = frame_w * frame_h;
    for py in 1..cell_px.saturating_sub(1) {
        for px in 1..cell_px.saturating_sub(1) {
            let (fx, fy) = (cx * cell_px + px, cy * cell_px + py);
            if fx < frame_w && fy < frame_h {
                let at = fy * frame_w + fx;
                frame[at] = rgb[0];
                frame[plane + at] = rgb[1];
                frame[2 * plane + at] = rgb[2];
            }
        }
    }
}

/// Upward-pointing triangle glyph used for the agent in egocentric views.
pub fn draw_agent_triangle(
    frame: &mut [u8],
    frame_w: usize,
    frame_h: usize,
    cell_px: usize,
    cx: usize,
    cy: usize,
    rgb: [u8; 3],
) {
    let n = cell_px as i32;
    let plane = frame_w * frame_h;
    for py in 0..n {
        for px in 0..n {
            // widen linearly from the top apex
            let half = (py * (n - 2)) / (2 * n.max(1));
            let mid = (n - 1) / 2;
            if (px - mid).abs() <= half && py >= 1 && py < n - 1 {
                let (fx, fy) = (cx * cell_px + px as usize, cy * cell_px + py as usize);
                if fx < frame_w && fy < frame_h {
                    let at = fy * frame_w + fx;
                    frame[at] = rgb[0];
                    frame[plane + at] = rgb[1];
                    frame[2 * plane + at] = rgb[2];
                }
            }
        }
    }
}

pub fn blank_frame(h: usize, w: usize) -> Observation {
    Observation {
        h,
        w,
        rgb: vec![0u8; 3 * h * w],
    }
}
