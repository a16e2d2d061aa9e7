//! Exact squared Euclidean distance transform.
//!
//! Two separable passes: a per-column scan gives the vertical distance to the
//! nearest feature pixel, then a per-row lower envelope of parabolas
//! (Felzenszwalb & Huttenlocher) combines them. All arithmetic is integral;
//! envelope breakpoints are compared as exact rationals.

use std::cmp::Ordering;

/// Squared distance from every pixel to the nearest pixel where `is_feature` holds.
/// Returns `None` for every pixel when there is no feature pixel at all.
pub(crate) fn squared_edt(height: usize, width: usize, is_feature: impl Fn(usize) -> bool) -> Option<Vec<u64>> {
    // column pass: vertical distance to nearest feature, None if the column has none
    let mut vertical: Vec<Option<u64>> = vec![None; height * width];
    let mut any = false;
    for c in 0..width {
        let mut last: Option<usize> = None;
        for r in 0..height {
            if is_feature(r * width + c) {
                last = Some(r);
                any = true;
            }
            vertical[r * width + c] = last.map(|l| (r - l) as u64);
        }
        let mut next: Option<usize> = None;
        for r in (0..height).rev() {
            if is_feature(r * width + c) {
                next = Some(r);
            }
            if let Some(n) = next {
                let down = (n - r) as u64;
                let cell = &mut vertical[r * width + c];
                *cell = Some(cell.map_or(down, |up| up.min(down)));
            }
        }
    }
    if !any {
        return None;
    }

    let mut out = vec![0u64; height * width];
    let mut envelope = Envelope::with_capacity(width);
    let mut f: Vec<Option<u64>> = vec![None; width];
    for r in 0..height {
        let row = &vertical[r * width..(r + 1) * width];
        for (dst, src) in f.iter_mut().zip(row) {
            *dst = src.map(|g| g * g);
        }
        envelope.lower_envelope(&f, &mut out[r * width..(r + 1) * width]);
    }
    Some(out)
}

/// Envelope breakpoint `num / den` with `den > 0`.
#[derive(Clone, Copy)]
struct Breakpoint {
    num: i128,
    den: i128,
}

impl Breakpoint {
    fn cmp_ratio(&self, other: &Breakpoint) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn lt_int(&self, q: i128) -> bool {
        self.num < q * self.den
    }
}

struct Envelope {
    vertices: Vec<usize>,
    // None marks the leftmost segment (starts at -inf)
    starts: Vec<Option<Breakpoint>>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(n),
            starts: Vec::with_capacity(n),
        }
    }

    /// `out[q] = min_p (q - p)^2 + f[p]` over the `p` with `f[p]` defined;
    /// `u64::MAX` everywhere if no sample is defined.
    fn lower_envelope(&mut self, f: &[Option<u64>], out: &mut [u64]) {
        self.vertices.clear();
        self.starts.clear();
        let key = |p: usize, fp: u64| fp as i128 + (p as i128) * (p as i128);

        for (q, fq) in f.iter().enumerate() {
            let Some(fq) = *fq else { continue };
            let mut start = None;
            while let Some(&p) = self.vertices.last() {
                let fp = f[p].expect("envelope vertices have defined samples");
                let s = Breakpoint {
                    num: key(q, fq) - key(p, fp),
                    den: 2 * (q as i128 - p as i128),
                };
                match self.starts.last().copied().flatten() {
                    Some(z) if s.cmp_ratio(&z) != Ordering::Greater => {
                        self.vertices.pop();
                        self.starts.pop();
                    }
                    _ => {
                        start = Some(s);
                        break;
                    }
                }
            }
            self.vertices.push(q);
            self.starts.push(start);
        }

        if self.vertices.is_empty() {
            out.fill(u64::MAX);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            while k + 1 < self.vertices.len() && self.starts[k + 1].is_some_and(|z| z.lt_int(q as i128)) {
                k += 1;
            }
            let p = self.vertices[k];
            let dq = q.abs_diff(p) as u64;
            *o = dq * dq + f[p].unwrap();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(height: usize, width: usize, feat: &[bool]) -> Vec<u64> {
        let mut out = vec![u64::MAX; height * width];
        for i in 0..height * width {
            for j in 0..height * width {
                if feat[j] {
                    let dr = (i / width).abs_diff(j / width) as u64;
                    let dc = (i % width).abs_diff(j % width) as u64;
                    out[i] = out[i].min(dr * dr + dc * dc);
                }
            }
        }
        out
    }

    #[test]
    fn single_point() {
        let feat: Vec<bool> = (0..25).map(|i| i == 12).collect();
        let got = squared_edt(5, 5, |i| feat[i]).unwrap();
        assert_eq!(got, brute(5, 5, &feat));
        assert_eq!(got[0], 8);
    }

    #[test]
    fn no_features() {
        assert!(squared_edt(3, 3, |_| false).is_none());
    }

    #[test]
    fn column_without_features() {
        // features only in the first column; other columns rely on the row pass
        let feat: Vec<bool> = (0..12).map(|i| i % 4 == 0 && i / 4 == 1).collect();
        assert_eq!(squared_edt(3, 4, |i| feat[i]).unwrap(), brute(3, 4, &feat));
    }

    #[test]
    fn pseudo_random_patterns() {
        let mut state = 0x2545F4914F6CDD1Du64;
        for _ in 0..200 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let h = 1 + (state % 13) as usize;
            let w = 1 + ((state >> 8) % 13) as usize;
            let feat: Vec<bool> = (0..h * w)
                .map(|i| (state.rotate_left(i as u32 % 64) ^ i as u64).is_multiple_of(7))
                .collect();
            if !feat.iter().any(|&b| b) {
                continue;
            }
            assert_eq!(squared_edt(h, w, |i| feat[i]).unwrap(), brute(h, w, &feat));
        }
    }
}
