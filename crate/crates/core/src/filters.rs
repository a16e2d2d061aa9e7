//! Small image filters with clamped-edge (replicate) boundary handling.

#[inline]
fn clamped(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Mean over the `(2r+1) x (2r+1)` window, separable.
pub fn box_blur(height: usize, width: usize, data: &[f64], radius: usize) -> Vec<f64> {
    if radius == 0 {
        return data.to_vec();
    }
    let r = radius as isize;
    let k = (2 * radius + 1) as f64;
    let mut tmp = vec![0.0; data.len()];
    for row in 0..height {
        let line = &data[row * width..(row + 1) * width];
        for c in 0..width {
            let mut s = 0.0;
            for dc in -r..=r {
                s += line[clamped(c as isize + dc, width)];
            }
            tmp[row * width + c] = s / k;
        }
    }
    let mut out = vec![0.0; data.len()];
    for row in 0..height {
        for c in 0..width {
            let mut s = 0.0;
            for dr in -r..=r {
                s += tmp[clamped(row as isize + dr, height) * width + c];
            }
            out[row * width + c] = s / k;
        }
    }
    out
}

/// `|I(r, c+1) - I(r, c-1)| / 2`.
pub fn horizontal_gradient(height: usize, width: usize, data: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..height {
        for c in 0..width {
            let right = data[r * width + clamped(c as isize + 1, width)];
            let left = data[r * width + clamped(c as isize - 1, width)];
            out[r * width + c] = (right - left).abs() / 2.0;
        }
    }
    out
}

/// `|I(r+1, c) - I(r-1, c)| / 2`.
pub fn vertical_gradient(height: usize, width: usize, data: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..height {
        let down = clamped(r as isize + 1, height);
        let up = clamped(r as isize - 1, height);
        for c in 0..width {
            out[r * width + c] = (data[down * width + c] - data[up * width + c]).abs() / 2.0;
        }
    }
    out
}

/// Population standard deviation over the `(2r+1) x (2r+1)` window.
pub fn local_std(height: usize, width: usize, data: &[f64], radius: usize) -> Vec<f64> {
    let mean = box_blur(height, width, data, radius);
    let r = radius as isize;
    let k = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut out = vec![0.0; data.len()];
    for row in 0..height {
        for c in 0..width {
            let mu = mean[row * width + c];
            let mut acc = 0.0;
            for dr in -r..=r {
                let rr = clamped(row as isize + dr, height);
                for dc in -r..=r {
                    let cc = clamped(c as isize + dc, width);
                    acc += (data[rr * width + cc] - mu).powi(2);
                }
            }
            out[row * width + c] = (acc / k).sqrt();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_of_impulse() {
        let mut d = vec![0.0; 9];
        d[4] = 9.0;
        assert!(box_blur(3, 3, &d, 1).iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn blur_edges_replicate() {
        let d = vec![1.0, 0.0, 0.0];
        let b = box_blur(1, 3, &d, 1);
        assert!((b[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gradients_of_ramp() {
        let d: Vec<f64> = (0..12).map(|i| (i % 4) as f64).collect();
        let gx = horizontal_gradient(3, 4, &d);
        assert_eq!(&gx[..4], &[0.5, 1.0, 1.0, 0.5]);
        assert!(vertical_gradient(3, 4, &d).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn std_of_two_values() {
        let d = vec![0.0, 2.0];
        // radius 0: every window holds a single value
        assert_eq!(local_std(1, 2, &d, 0), vec![0.0, 0.0]);
    }
}
