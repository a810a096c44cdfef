//! Piecewise-linear functions on a bounded interval, possibly discontinuous
//! at cell joins.

use crate::error::{Error, Result};
use crate::profile::SawtoothProfile;

/// A linear piece `[a, b]` with end values `va`, `vb`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub a: f64,
    pub b: f64,
    pub va: f64,
    pub vb: f64,
}

impl Cell {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn eval(&self, y: f64) -> f64 {
        let t = (y - self.a) / (self.b - self.a);
        self.va + (self.vb - self.va) * t
    }

    pub fn integral(&self) -> f64 {
        0.5 * (self.va + self.vb) * self.len()
    }

    pub fn integral_sq(&self) -> f64 {
        self.len() * (self.va * self.va + self.va * self.vb + self.vb * self.vb) / 3.0
    }
}

/// Contiguous cells `cells[i].b == cells[i+1].a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    cells: Vec<Cell>,
}

impl PiecewiseLinear {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidProfile("piecewise-linear function needs a cell".into()));
        }
        for c in &cells {
            if !(c.b > c.a) || !c.va.is_finite() || !c.vb.is_finite() {
                return Err(Error::InvalidProfile(format!("bad cell {c:?}")));
            }
        }
        for w in cells.windows(2) {
            let scale = w[0].b.abs().max(1.0);
            if (w[1].a - w[0].b).abs() > 1e-12 * scale {
                return Err(Error::InvalidProfile("cells must be contiguous".into()));
            }
        }
        Ok(PiecewiseLinear { cells })
    }

    /// Continuous interpolant through `(knots[i], values[i])`.
    pub fn from_knots(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidProfile("need matching knots and values, at least two".into()));
        }
        let cells = knots
            .windows(2)
            .zip(values.windows(2))
            .filter(|(k, _)| k[1] > k[0])
            .map(|(k, v)| Cell {
                a: k[0],
                b: k[1],
                va: v[0],
                vb: v[1],
            })
            .collect();
        for k in knots.windows(2) {
            if k[1] < k[0] {
                return Err(Error::InvalidProfile("knots must be nondecreasing".into()));
            }
        }
        PiecewiseLinear::new(cells)
    }

    /// Restriction of a profile to `[a, b]`.
    pub fn from_profile(p: &SawtoothProfile, a: f64, b: f64) -> Result<Self> {
        let cells = p
            .pieces(a, b)
            .into_iter()
            .map(|pc| Cell {
                a: pc.start,
                b: pc.end,
                va: pc.value,
                vb: pc.end_value(),
            })
            .collect();
        PiecewiseLinear::new(cells)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn start(&self) -> f64 {
        self.cells[0].a
    }

    pub fn end(&self) -> f64 {
        self.cells[self.cells.len() - 1].b
    }

    pub fn length(&self) -> f64 {
        self.end() - self.start()
    }

    /// Right-continuous evaluation (the last cell is closed).
    pub fn eval(&self, y: f64) -> f64 {
        let i = self.cells.partition_point(|c| c.b <= y).min(self.cells.len() - 1);
        self.cells[i].eval(y)
    }

    pub fn integral(&self) -> f64 {
        self.cells.iter().map(Cell::integral).sum()
    }

    pub fn integral_sq(&self) -> f64 {
        self.cells.iter().map(Cell::integral_sq).sum()
    }

    /// Same shape moved so that it starts at `start`.
    pub fn moved_to(&self, start: f64) -> PiecewiseLinear {
        let d = start - self.start();
        PiecewiseLinear {
            cells: self
                .cells
                .iter()
                .map(|c| Cell {
                    a: c.a + d,
                    b: c.b + d,
                    ..*c
                })
                .collect(),
        }
    }

    /// `y ↦ f(start + end − y)` on the same interval.
    pub fn reflected(&self) -> PiecewiseLinear {
        let s = self.start() + self.end();
        PiecewiseLinear {
            cells: self
                .cells
                .iter()
                .rev()
                .map(|c| Cell {
                    a: s - c.b,
                    b: s - c.a,
                    va: c.vb,
                    vb: c.va,
                })
                .collect(),
        }
    }

    /// `self` followed by `other` moved to start at `self.end()`.
    pub fn concat(&self, other: &PiecewiseLinear) -> PiecewiseLinear {
        let mut cells = self.cells.clone();
        cells.extend(other.moved_to(self.end()).cells);
        PiecewiseLinear { cells }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_is_involution() {
        let f = PiecewiseLinear::from_knots(&[0.0, 0.25, 1.0], &[0.0, 1.0, -2.0]).unwrap();
        let r = f.reflected();
        assert_eq!(r.eval(0.0), -2.0);
        assert_eq!(r.reflected(), f);
    }

    #[test]
    fn concat_lengths_add() {
        let f = PiecewiseLinear::from_knots(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let tent = f.concat(&f.reflected());
        assert_eq!(tent.length(), 2.0);
        assert_eq!(tent.eval(1.5), 0.5);
        assert_eq!(tent.eval(1.0), 1.0);
    }

    #[test]
    fn integrals_exact() {
        let f = PiecewiseLinear::from_knots(&[0.0, 2.0], &[1.0, 3.0]).unwrap();
        assert_eq!(f.integral(), 4.0);
        // ∫_0^2 (1+y)^2 dy = (27-1)/3
        assert!((f.integral_sq() - 26.0 / 3.0).abs() < 1e-14);
    }
}
