//! Deterministic point sets over boxes.

/// Axis-aligned box in `dim` dimensions.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GridBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Largest distance from the origin to a corner.
    pub fn radius(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Box shrunk about its centre by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| {
                let c = 0.5 * (a + b);
                let h = 0.5 * (b - a) * factor;
                (c - h, c + h)
            })
            .unzip();
        Self { lower, upper }
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// First `n` Halton points (skipping index 0) mapped into `bx`.
pub fn halton_points(bx: &GridBox, n: usize) -> Vec<Vec<f64>> {
    let d = bx.dim();
    assert!(d <= PRIMES.len(), "halton sequence supports at most {} dimensions", PRIMES.len());
    (1..=n as u64)
        .map(|i| (0..d).map(|k| bx.lower[k] + (bx.upper[k] - bx.lower[k]) * radical_inverse(i, PRIMES[k])).collect())
        .collect()
}

/// Regular lattice with at least `n` points in total (same count per axis, endpoints included).
pub fn lattice_points(bx: &GridBox, n: usize) -> Vec<Vec<f64>> {
    let d = bx.dim();
    let per_axis = ((n.max(1) as f64).powf(1.0 / d as f64).ceil() as usize).max(2);
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|k| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    bx.lower[k] + (bx.upper[k] - bx.lower[k]) * i as f64 / (per_axis - 1) as f64
                })
                .collect()
        })
        .collect()
}

/// `n` logarithmically spaced values on `[a, b]`, `a, b > 0`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| if i == n - 1 { b } else { (la + (lb - la) * i as f64 / (n - 1) as f64).exp() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_fills_the_box() {
        let bx = GridBox::new(vec![-1.0, 0.0], vec![1.0, 4.0]);
        let pts = halton_points(&bx, 1000);
        assert!(pts.iter().all(|p| bx.contains(p)));
        let mean_x: f64 = pts.iter().map(|p| p[0]).sum::<f64>() / 1000.0;
        let mean_y: f64 = pts.iter().map(|p| p[1]).sum::<f64>() / 1000.0;
        assert!(mean_x.abs() < 0.01);
        assert!((mean_y - 2.0).abs() < 0.02);
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let v = log_spaced(1.0, 1e4, 5);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[4], 1e4);
        assert!((v[2] - 100.0).abs() < 1e-9);
    }
}
