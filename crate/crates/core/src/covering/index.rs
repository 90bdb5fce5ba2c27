use crate::domain::Point;
use crate::quadrature::Rect;

/// Uniform bucket grid over a bounding box; each rectangle is filed under
/// every cell it touches.
#[derive(Debug, Clone)]
pub struct BucketIndex {
    x0: f64,
    y0: f64,
    cx: f64,
    cy: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl BucketIndex {
    pub fn new(bbox: [f64; 4], cx: f64, cy: f64) -> Self {
        let nx = (((bbox[1] - bbox[0]) / cx).ceil() as usize).clamp(1, 1 << 14);
        let ny = (((bbox[3] - bbox[2]) / cy).ceil() as usize).clamp(1, 1 << 14);
        Self {
            x0: bbox[0],
            y0: bbox[2],
            cx: (bbox[1] - bbox[0]) / nx as f64,
            cy: (bbox[3] - bbox[2]) / ny as f64,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            stamp: Vec::new(),
            epoch: 0,
        }
    }

    fn ix(&self, x: f64) -> usize {
        ((x - self.x0) / self.cx)
            .floor()
            .clamp(0.0, (self.nx - 1) as f64) as usize
    }

    fn iy(&self, y: f64) -> usize {
        ((y - self.y0) / self.cy)
            .floor()
            .clamp(0.0, (self.ny - 1) as f64) as usize
    }

    pub fn insert(&mut self, id: u32, r: &Rect) {
        for j in self.iy(r.y0)..=self.iy(r.y1) {
            for i in self.ix(r.x0)..=self.ix(r.x1) {
                self.cells[j * self.nx + i].push(id);
            }
        }
        if self.stamp.len() <= id as usize {
            self.stamp.resize(id as usize + 1, 0);
        }
    }

    /// Ids filed in the cell holding `p`.
    pub fn at_point(&self, p: Point) -> &[u32] {
        &self.cells[self.iy(p[1]) * self.nx + self.ix(p[0])]
    }

    /// Distinct ids filed in any cell touched by `r`.
    pub fn near_rect(&mut self, r: &Rect, out: &mut Vec<u32>) {
        out.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        for j in self.iy(r.y0)..=self.iy(r.y1) {
            for i in self.ix(r.x0)..=self.ix(r.x1) {
                for &id in &self.cells[j * self.nx + i] {
                    let s = &mut self.stamp[id as usize];
                    if *s != self.epoch {
                        *s = self.epoch;
                        out.push(id);
                    }
                }
            }
        }
    }
}
